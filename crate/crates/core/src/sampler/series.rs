//! Observable time series and their summary statistics.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::plan::RunPlan;
use crate::error::{Error, Result};
use crate::model::ObservableRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesEntry {
    /// Global sweep index, burn-in included, counted from 1.
    pub sweep: u64,
    pub record: ObservableRecord,
    /// Acceptance rate over the sweeps since the previous entry.
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub plan: RunPlan,
    pub entries: Vec<SeriesEntry>,
    /// Acceptance over all measurement sweeps; 0 when there were none.
    pub acceptance_rate: f64,
    pub burnin_acceptance_rate: f64,
    /// Width in force during measurement.
    pub final_width: f64,
    /// Largest gap seen between the running and recomputed total energy.
    pub max_energy_drift: f64,
}

/// Mean with a batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl MeanEstimate {
    /// |mean| in units of its standard error.
    pub fn z_score(&self) -> f64 {
        self.mean.abs() / self.stderr
    }
}

/// Mean of `values` with the standard error from `batches` equal batches
/// (the trailing remainder is dropped from the error estimate only).
pub fn batch_means(values: &[f64], batches: usize) -> MeanEstimate {
    let n = values.len();
    let mean = crate::sum::compensated_sum(values.iter().copied()) / n as f64;
    let batches = batches.min(n);
    if batches < 2 {
        return MeanEstimate {
            mean,
            stderr: f64::NAN,
            samples: n,
        };
    }
    let size = n / batches;
    let batch_means: Vec<f64> = values.chunks_exact(size).take(batches).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let grand = batch_means.iter().sum::<f64>() / batches as f64;
    let var = batch_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    MeanEstimate {
        mean,
        stderr: (var / batches as f64).sqrt(),
        samples: n,
    }
}

const CSV_HEADER: &str = "sweep,energy_per_site,nn_x,nn_y,nnn,order_param,theta_star_est,phi_star_est,acc_rate";

impl TimeSeries {
    pub fn observable(&self, f: impl Fn(&ObservableRecord) -> f64) -> Vec<f64> {
        self.entries.iter().map(|e| f(&e.record)).collect()
    }

    /// Mean order parameter with a 32-batch standard error.
    pub fn order_parameter(&self) -> MeanEstimate {
        batch_means(&self.observable(|r| r.order_param_mean), 32)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            let r = &e.record;
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                e.sweep, r.energy_per_site, r.nn_x, r.nn_y, r.nnn, r.order_param_mean, r.theta_star_est, r.phi_star_est, e.acceptance_rate
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io("writing time series", path, e))
    }
}
