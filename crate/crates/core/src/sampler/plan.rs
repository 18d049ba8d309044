//! Run plans and their JSON form.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CouplingParams, LatticeTorus, ReferenceFrame};

/// Starting configuration of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Init {
    /// Independent uniform angles.
    Random,
    Neel { theta_star_deg: f64, phi_star_deg: f64 },
    /// An `ODO1` snapshot file.
    Snapshot(PathBuf),
}

impl Init {
    pub fn neel(frame: ReferenceFrame) -> Self {
        Init::Neel {
            theta_star_deg: frame.theta_star.to_degrees(),
            phi_star_deg: frame.phi_star.to_degrees(),
        }
    }
}

/// Everything that determines a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunPlan {
    #[serde(rename = "L")]
    pub side: usize,
    #[serde(rename = "J")]
    pub j: f64,
    pub gamma: f64,
    #[serde(rename = "betaJ")]
    pub beta_j: f64,
    pub init: Init,
    pub sweeps_burnin: u64,
    pub sweeps_measure: u64,
    pub measure_every: u64,
    pub proposal_width: f64,
    /// Tune the width toward acceptance 0.4–0.6, during burn-in only.
    pub adapt: bool,
    pub seed: u64,
    #[serde(default)]
    pub snapshot_every: Option<u64>,
    #[serde(default)]
    pub out_prefix: Option<String>,
}

impl RunPlan {
    /// A plan with no burn-in or measurement sweeps, unit width, no adaptation.
    pub fn new(side: usize, j: f64, gamma: f64, beta_j: f64, init: Init, seed: u64) -> Self {
        Self {
            side,
            j,
            gamma,
            beta_j,
            init,
            sweeps_burnin: 0,
            sweeps_measure: 0,
            measure_every: 1,
            proposal_width: 1.0,
            adapt: false,
            seed,
            snapshot_every: None,
            out_prefix: None,
        }
    }

    pub fn params(&self) -> Result<CouplingParams> {
        if !(self.beta_j >= 0.0) {
            return Err(Error::invalid(format!("betaJ must be non-negative, got {}", self.beta_j)));
        }
        CouplingParams::new(self.j, self.gamma, self.beta_j / self.j)
    }

    pub fn torus(&self) -> Result<LatticeTorus> {
        LatticeTorus::new(self.side)
    }

    pub fn validate(&self) -> Result<()> {
        self.torus()?;
        self.params()?;
        if !(self.proposal_width > 0.0 && self.proposal_width <= std::f64::consts::PI) {
            return Err(Error::invalid(format!("proposal_width must lie in (0, π], got {}", self.proposal_width)));
        }
        if self.measure_every == 0 {
            return Err(Error::invalid("measure_every must be positive"));
        }
        match self.snapshot_every {
            Some(0) => return Err(Error::invalid("snapshot_every must be positive")),
            Some(_) if self.out_prefix.is_none() => {
                return Err(Error::invalid("snapshot_every needs out_prefix to name the snapshot files"))
            }
            _ => {}
        }
        if let Init::Neel {
            theta_star_deg,
            phi_star_deg,
        } = self.init
        {
            if !(theta_star_deg.is_finite() && phi_star_deg.is_finite()) {
                return Err(Error::invalid("Néel init angles must be finite"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: RunPlan = serde_json::from_str(text).map_err(|e| Error::invalid(format!("run plan: {e}")))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io("reading run plan", path, e))?;
        Self::from_json(&text)
    }

    /// Path of the snapshot taken after global sweep `sweep`.
    pub fn snapshot_path(&self, sweep: u64) -> Option<PathBuf> {
        self.out_prefix.as_ref().map(|p| PathBuf::from(format!("{p}_snap_{sweep:08}.odo")))
    }
}
