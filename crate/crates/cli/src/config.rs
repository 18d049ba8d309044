//! Resolved command configurations, echoed verbatim into run manifests.

use std::path::PathBuf;

use odo_core::sampler::RunPlan;
use odo_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum CommandConfig {
    SpinwaveScan(ScanConfig),
    McRun(McConfig),
    BlocksAnalyze(BlocksConfig),
    OracleChessboard(ChessboardConfig),
    OracleGaussian(GaussianConfig),
    OracleHarmonic(HarmonicConfig),
    VerifyAll(VerifyConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub gamma: f64,
    pub step_deg: f64,
    pub tol: f64,
    pub lambda: f64,
    pub out_prefix: String,
    pub seed: u64,
}

/// The run plan carries its own seed and output prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub plan: RunPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlocksConfig {
    pub snapshots: Vec<PathBuf>,
    #[serde(rename = "B")]
    pub b: usize,
    pub delta: f64,
    pub kappa: f64,
    /// Number of reference angles; the smallest admissible when absent.
    pub s: Option<usize>,
    pub out_prefix: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChessboardConfig {
    #[serde(rename = "L")]
    pub side: usize,
    pub q: u32,
    #[serde(rename = "B")]
    pub b: usize,
    pub gamma: f64,
    pub beta_j: Vec<f64>,
    /// Near-Néel tolerance of the built-in event suite, degrees.
    pub delta_deg: f64,
    /// JSON list of events replacing the built-in suite.
    pub events: Option<PathBuf>,
    pub budget: f64,
    pub out_prefix: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianConfig {
    #[serde(rename = "L")]
    pub side: usize,
    pub gamma: f64,
    pub phi_deg: f64,
    pub lambda: f64,
    pub beta_j: f64,
    /// Box half-width; `betaJ^(-5/12)` when absent.
    pub delta: Option<f64>,
    pub samples: usize,
    pub out_prefix: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicConfig {
    #[serde(rename = "L")]
    pub side: usize,
    pub gamma: f64,
    pub beta_j: f64,
    pub deltas: Vec<f64>,
    pub samples: usize,
    pub out_prefix: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Budget {
    /// Every acceptance criterion at its stated size.
    Quick,
    /// Adds the four-state clock enumeration.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub budget: Budget,
    /// Criteria to run; all when empty.
    pub criteria: Vec<u32>,
    pub out_prefix: String,
    pub seed: u64,
}

impl CommandConfig {
    pub fn name(&self) -> &'static str {
        match self {
            CommandConfig::SpinwaveScan(_) => "spinwave-scan",
            CommandConfig::McRun(_) => "mc-run",
            CommandConfig::BlocksAnalyze(_) => "blocks-analyze",
            CommandConfig::OracleChessboard(_) => "oracle-chessboard",
            CommandConfig::OracleGaussian(_) => "oracle-gaussian",
            CommandConfig::OracleHarmonic(_) => "oracle-harmonic",
            CommandConfig::VerifyAll(_) => "verify-all",
        }
    }

    pub fn out_prefix(&self) -> &str {
        match self {
            CommandConfig::SpinwaveScan(c) => &c.out_prefix,
            CommandConfig::McRun(c) => c.plan.out_prefix.as_deref().unwrap_or_default(),
            CommandConfig::BlocksAnalyze(c) => &c.out_prefix,
            CommandConfig::OracleChessboard(c) => &c.out_prefix,
            CommandConfig::OracleGaussian(c) => &c.out_prefix,
            CommandConfig::OracleHarmonic(c) => &c.out_prefix,
            CommandConfig::VerifyAll(c) => &c.out_prefix,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            CommandConfig::SpinwaveScan(c) => c.seed,
            CommandConfig::McRun(c) => c.plan.seed,
            CommandConfig::BlocksAnalyze(c) => c.seed,
            CommandConfig::OracleChessboard(c) => c.seed,
            CommandConfig::OracleGaussian(c) => c.seed,
            CommandConfig::OracleHarmonic(c) => c.seed,
            CommandConfig::VerifyAll(c) => c.seed,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("command config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    /// Checks what can be checked before any work starts.
    pub fn validate(&self) -> Result<()> {
        if self.out_prefix().is_empty() {
            return Err(Error::InvalidInput("out_prefix must not be empty".into()));
        }
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} must be positive and finite, got {x}")))
            }
        };
        match self {
            CommandConfig::SpinwaveScan(c) => {
                positive("step_deg", c.step_deg)?;
                positive("tol", c.tol)
            }
            CommandConfig::McRun(c) => c.plan.validate(),
            CommandConfig::BlocksAnalyze(c) => {
                if c.snapshots.is_empty() {
                    return Err(Error::InvalidInput("no snapshots given".into()));
                }
                Ok(())
            }
            CommandConfig::OracleChessboard(c) => {
                if c.beta_j.is_empty() {
                    return Err(Error::InvalidInput("no betaJ values given".into()));
                }
                c.beta_j.iter().try_for_each(|&b| {
                    if b >= 0.0 && b.is_finite() {
                        Ok(())
                    } else {
                        Err(Error::InvalidInput(format!("betaJ must be non-negative, got {b}")))
                    }
                })
            }
            CommandConfig::OracleGaussian(c) => positive("betaJ", c.beta_j),
            CommandConfig::OracleHarmonic(c) => {
                if c.deltas.is_empty() {
                    return Err(Error::InvalidInput("no Delta values given".into()));
                }
                Ok(())
            }
            CommandConfig::VerifyAll(c) => match c.criteria.iter().find(|&&k| !(1..=12).contains(&k)) {
                Some(k) => Err(Error::InvalidInput(format!("no acceptance criterion {k}; criteria run from 1 to 12"))),
                None => Ok(()),
            },
        }
    }
}
