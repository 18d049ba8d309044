//! Subcommand bodies. Each writes its artifacts under the configured
//! prefix, records their paths, and returns a JSON summary for the manifest.

use std::path::{Path, PathBuf};

use odo_core::blocks::{block_field, event_frequencies, BlockCriteria};
use odo_core::model::{self, CouplingParams, SpinConfiguration};
use odo_core::oracle::{
    gaussian_box_mass, harmonic_error_scan, ChessboardReport, ClockSetup, Enumeration, GaussianBoxReport,
    HarmonicReport, Placement, SubadditivityReport,
};
use odo_core::sampler::{self, batch_means};
use odo_core::spinwave::{scan_minima, SpinWaveSpec};
use odo_core::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{BlocksConfig, ChessboardConfig, GaussianConfig, HarmonicConfig, McConfig, ScanConfig};
use crate::suite::{default_suite, EventSuite};

/// One-sided normal quantile at 99%.
pub const Z_99: f64 = 2.326;

pub(crate) fn write_output(path: PathBuf, contents: &[u8], outputs: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(&path, contents).map_err(|e| Error::Io {
        context: "writing output",
        path: path.clone(),
        source: e,
    })?;
    outputs.push(path);
    Ok(())
}

pub(crate) fn write_json(path: PathBuf, value: &impl Serialize, outputs: &mut Vec<PathBuf>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_output(path, text.as_bytes(), outputs)
}

pub fn spinwave_scan(c: &ScanConfig, outputs: &mut Vec<PathBuf>) -> Result<Value> {
    let scan = scan_minima(c.gamma, c.step_deg, c.tol, c.lambda)?;
    write_output(PathBuf::from(format!("{}_scan.csv", c.out_prefix)), scan.to_csv(true).as_bytes(), outputs)?;
    let min = scan.points.iter().map(|p| p.free_energy.value).fold(f64::INFINITY, f64::min);
    Ok(json!({
        "points": scan.points.len(),
        "argmin_deg": scan.argmin_deg(),
        "selects_colinear": scan.selects_colinear(),
        "min_free_energy": min,
    }))
}

pub fn mc_run(c: &McConfig, outputs: &mut Vec<PathBuf>) -> Result<Value> {
    let plan = &c.plan;
    let prefix = plan.out_prefix.as_deref().expect("prefix resolved before dispatch");
    let out = sampler::run(plan)?;
    outputs.extend(out.snapshots.iter().cloned());
    write_output(PathBuf::from(format!("{prefix}_series.csv")), out.series.to_csv().as_bytes(), outputs)?;
    write_output(
        PathBuf::from(format!("{prefix}_final.odo")),
        &model::snapshot_to_bytes(&out.final_config),
        outputs,
    )?;
    let s = &out.series;
    Ok(json!({
        "entries": s.entries.len(),
        "order_parameter": s.order_parameter(),
        "energy_per_site": batch_means(&s.observable(|r| r.energy_per_site), 32),
        "nnn": batch_means(&s.observable(|r| r.nnn), 32),
        "acceptance_rate": s.acceptance_rate,
        "burnin_acceptance_rate": s.burnin_acceptance_rate,
        "final_width": s.final_width,
        "max_energy_drift": s.max_energy_drift,
        "snapshots": out.snapshots.len(),
    }))
}

/// Reads a snapshot in the binary format, or the CSV layout when the file
/// name ends in `.csv`.
pub fn load_configuration(path: &Path) -> Result<SpinConfiguration> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        model::read_csv(path)
    } else {
        model::read_snapshot(path)
    }
}

pub fn blocks_analyze(c: &BlocksConfig, outputs: &mut Vec<PathBuf>) -> Result<Value> {
    let criteria = match c.s {
        Some(s) => BlockCriteria::new(c.b, c.delta, c.kappa, s)?,
        None => BlockCriteria::with_min_s(c.b, c.delta, c.kappa)?,
    };
    let configs = c.snapshots.iter().map(|p| load_configuration(p)).collect::<Result<Vec<_>>>()?;
    let mut per_snapshot = Vec::with_capacity(configs.len());
    let mut boundaries = 0;
    for (k, (config, source)) in configs.iter().zip(&c.snapshots).enumerate() {
        let field = block_field(config, &criteria)?;
        let csv = PathBuf::from(format!("{}_blocks_{k:03}.csv", c.out_prefix));
        write_output(csv.clone(), field.to_csv().as_bytes(), outputs)?;
        boundaries += field.boundaries.len();
        per_snapshot.push(json!({
            "snapshot": source,
            "csv": csv,
            "good_fraction": field.good_fraction(),
            "sidecar": field.sidecar_json(),
        }));
    }
    let frequencies = event_frequencies(&configs, &criteria)?;
    write_json(
        PathBuf::from(format!("{}_blocks.json", c.out_prefix)),
        &json!({
            "criteria": criteria,
            "snapshots": per_snapshot,
            "frequencies": frequencies,
            "phase_boundaries": boundaries,
        }),
        outputs,
    )?;
    Ok(json!({
        "snapshots": configs.len(),
        "frequencies": frequencies,
        "phase_boundaries": boundaries,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaRun {
    pub beta_j: f64,
    pub log_z: f64,
    pub chessboard: Vec<ChessboardReport>,
    pub subadditivity: Vec<SubadditivityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChessboardSuiteReport {
    pub setup: ClockSetup,
    pub events: Vec<String>,
    pub placed: Vec<String>,
    pub states_visited: u64,
    pub consistency_checks: u64,
    pub consistency_failures: u64,
    pub runs: Vec<BetaRun>,
    pub chessboard_checks: usize,
    pub chessboard_violations: usize,
    pub subadditivity_checks: usize,
    pub subadditivity_violations: usize,
    /// Largest `|lhs − rhs|` over placements of the always-true event.
    pub trivial_max_gap: f64,
    /// Smallest `rhs − lhs` over all chessboard placements.
    pub min_margin: f64,
}

impl ChessboardSuiteReport {
    pub fn all_hold(&self) -> bool {
        self.chessboard_violations == 0 && self.subadditivity_violations == 0 && self.consistency_failures == 0
    }
}

/// Places every suite event singly at two translates and every ordered
/// pair at the three nonzero neighbouring translates, and checks every
/// cover family, at each `beta_j`. The enumeration must have been run
/// over `suite.events`.
pub fn chessboard_suite(enumeration: &Enumeration, suite: &EventSuite, beta_j: &[f64]) -> Result<ChessboardSuiteReport> {
    if enumeration.events() != suite.events.as_slice() {
        return Err(Error::InvalidInput("enumeration was run over a different event list".into()));
    }
    let setup = enumeration.setup();
    let placed = suite.placed_indices()?;
    let trivial: Vec<bool> = suite.events.iter().map(|e| e.expr == odo_core::oracle::EventExpr::True).collect();
    let mut runs = Vec::with_capacity(beta_j.len());
    let mut trivial_max_gap: f64 = 0.0;
    let mut min_margin = f64::INFINITY;
    for &b in beta_j {
        let params = CouplingParams::new(1.0, setup.params.gamma, b)?;
        let mut chessboard = Vec::new();
        let mut check = |placements: &[Placement]| -> Result<()> {
            let r = enumeration.chessboard(placements, &params)?;
            if placements.iter().all(|p| trivial[p.event]) {
                trivial_max_gap = trivial_max_gap.max((r.lhs - r.rhs).abs());
            }
            min_margin = min_margin.min(r.margin);
            chessboard.push(r);
            Ok(())
        };
        for &a in &placed {
            for translate in [(0, 0), (1, 1)] {
                check(&[Placement { translate, event: a }])?;
            }
            for &other in &placed {
                for t in [(1, 0), (0, 1), (1, 1)] {
                    check(&[
                        Placement {
                            translate: (0, 0),
                            event: a,
                        },
                        Placement {
                            translate: t,
                            event: other,
                        },
                    ])?;
                }
            }
        }
        let mut subadditivity = Vec::with_capacity(suite.covers.len());
        for family in &suite.covers {
            let a = suite.index(&family.event)?;
            let cover = family.cover.iter().map(|n| suite.index(n)).collect::<Result<Vec<_>>>()?;
            subadditivity.push(enumeration.subadditivity(a, &cover, &params)?);
        }
        runs.push(BetaRun {
            beta_j: b,
            log_z: enumeration.summary(&params).log_z,
            chessboard,
            subadditivity,
        });
    }
    let count = |f: &dyn Fn(&BetaRun) -> usize| runs.iter().map(f).sum::<usize>();
    Ok(ChessboardSuiteReport {
        setup: *setup,
        events: suite.events.iter().map(|e| e.name.clone()).collect(),
        placed: placed.iter().map(|&i| suite.events[i].name.clone()).collect(),
        states_visited: enumeration.states_visited,
        consistency_checks: enumeration.consistency_checks,
        consistency_failures: enumeration.consistency_failures,
        chessboard_checks: count(&|r| r.chessboard.len()),
        chessboard_violations: count(&|r| r.chessboard.iter().filter(|c| !c.holds).count()),
        subadditivity_checks: count(&|r| r.subadditivity.len()),
        subadditivity_violations: count(&|r| r.subadditivity.iter().filter(|c| !c.holds).count()),
        trivial_max_gap,
        min_margin,
        runs,
    })
}

pub fn chessboard_setup(c: &ChessboardConfig) -> Result<ClockSetup> {
    let first = *c.beta_j.first().ok_or_else(|| Error::InvalidInput("no betaJ values given".into()))?;
    let setup = ClockSetup::new(c.side, c.q, CouplingParams::new(1.0, c.gamma, first)?, c.b).with_budget(c.budget);
    setup.validate()?;
    Ok(setup)
}

pub fn oracle_chessboard(c: &ChessboardConfig, outputs: &mut Vec<PathBuf>) -> Result<Value> {
    let setup = chessboard_setup(c)?;
    let suite = match &c.events {
        Some(path) => EventSuite::read(path)?,
        None => default_suite(c.q, c.delta_deg),
    };
    let enumeration = Enumeration::run(&setup, &suite.events)?;
    let report = chessboard_suite(&enumeration, &suite, &c.beta_j)?;
    write_json(PathBuf::from(format!("{}_chessboard.json", c.out_prefix)), &report, outputs)?;
    Ok(json!({
        "states_visited": report.states_visited,
        "chessboard_checks": report.chessboard_checks,
        "chessboard_violations": report.chessboard_violations,
        "subadditivity_checks": report.subadditivity_checks,
        "subadditivity_violations": report.subadditivity_violations,
        "trivial_max_gap": report.trivial_max_gap,
        "min_margin": report.min_margin,
        "all_hold": report.all_hold(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianChecks {
    /// Per-site tail below the Chebyshev bound at one-sided 99% confidence.
    pub tail_within_chebyshev: bool,
    pub box_above_product: bool,
    pub within_bracket: bool,
}

impl GaussianChecks {
    pub fn of(r: &GaussianBoxReport) -> Self {
        GaussianChecks {
            tail_within_chebyshev: r.tail + Z_99 * r.tail_stderr <= r.chebyshev_bound,
            box_above_product: r.box_probability
                >= r.product_bound - 2.0 * (r.box_probability_stderr + r.product_bound_stderr),
            within_bracket: r.within_bracket(),
        }
    }

    pub fn all(&self) -> bool {
        self.tail_within_chebyshev && self.box_above_product && self.within_bracket
    }
}

pub fn default_box_delta(beta_j: f64) -> f64 {
    beta_j.powf(-5.0 / 12.0)
}

pub fn oracle_gaussian(c: &GaussianConfig, outputs: &mut Vec<PathBuf>) -> Result<Value> {
    let spec = SpinWaveSpec::new(c.phi_deg.to_radians(), c.gamma).with_lambda(c.lambda);
    let delta = c.delta.unwrap_or_else(|| default_box_delta(c.beta_j));
    let report = gaussian_box_mass(c.side, &spec, delta, c.beta_j, c.samples, c.seed)?;
    let checks = GaussianChecks::of(&report);
    write_json(
        PathBuf::from(format!("{}_gaussian.json", c.out_prefix)),
        &json!({ "report": report, "checks": checks }),
        outputs,
    )?;
    Ok(json!({
        "delta": delta,
        "tail": report.tail,
        "chebyshev_bound": report.chebyshev_bound,
        "box_probability": report.box_probability,
        "log_q_delta": report.log_q_delta,
        "bracket": [report.lower_bracket, report.upper_bracket],
        "checks": checks,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicScaling {
    pub from_delta: f64,
    pub to_delta: f64,
    /// Ratio of sup errors divided by the ratio of `Δ³`.
    pub relative_ratio: f64,
}

impl CubicScaling {
    /// Within a factor 2 of exact cubic scaling.
    pub fn within_factor_two(&self) -> bool {
        (0.5..=2.0).contains(&self.relative_ratio)
    }
}

pub fn cubic_scaling(reports: &[HarmonicReport]) -> Vec<CubicScaling> {
    reports
        .windows(2)
        .map(|w| CubicScaling {
            from_delta: w[0].delta,
            to_delta: w[1].delta,
            relative_ratio: (w[1].sup_abs / w[0].sup_abs) / (w[1].delta / w[0].delta).powi(3),
        })
        .collect()
}

pub fn oracle_harmonic(c: &HarmonicConfig, outputs: &mut Vec<PathBuf>) -> Result<Value> {
    let params = CouplingParams::new(1.0, c.gamma, c.beta_j)?;
    let reports = c
        .deltas
        .iter()
        .map(|&d| harmonic_error_scan(c.side, d, &params, c.samples, c.seed))
        .collect::<Result<Vec<_>>>()?;
    let scaling = cubic_scaling(&reports);
    let bound_holds = reports.iter().all(|r| r.holds);
    let cubic = scaling.iter().all(CubicScaling::within_factor_two);
    write_json(
        PathBuf::from(format!("{}_harmonic.json", c.out_prefix)),
        &json!({ "reports": reports, "scaling": scaling }),
        outputs,
    )?;
    Ok(json!({
        "sup_normalized": reports.iter().map(|r| r.sup_normalized).collect::<Vec<_>>(),
        "bound": reports.first().map(|r| r.bound),
        "bound_holds": bound_holds,
        "cubic_within_factor_two": cubic,
    }))
}
