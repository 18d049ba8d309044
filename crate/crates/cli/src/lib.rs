//! The `odo` command-line tool: spin-wave scans, Monte Carlo runs, block
//! analysis and the exact oracles, each run leaving a JSON manifest with
//! the resolved configuration and content hashes of its outputs.
//!
//! Exit codes: 0 on success, 1 on invalid input, I/O failure or a failed
//! verification, 2 on a numerical failure. Errors are reported on stderr
//! as one line of JSON, `{"error": kind, "message": ..., "exit_code": n}`.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod suite;
pub mod verify;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use odo_core::sampler::RunPlan;
use serde_json::{json, Value};

use config::{
    BlocksConfig, Budget, ChessboardConfig, CommandConfig, GaussianConfig, HarmonicConfig, McConfig, ScanConfig,
    VerifyConfig,
};
use manifest::{emit_manifest, ErrorInfo, Manifest};

#[derive(Debug)]
pub enum CliError {
    Core(odo_core::Error),
    Usage(String),
    /// Acceptance criteria that did not pass.
    VerificationFailed(Vec<u32>),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        use odo_core::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::InvalidInput(_) => "invalid_input",
                E::NonConvergence { .. } => "non_convergence",
                E::BudgetExceeded { .. } => "budget_exceeded",
                E::CoverViolation { .. } => "cover_violation",
                E::DegenerateMean => "degenerate_mean",
                E::Io { .. } => "io",
                E::Format { .. } => "format",
            },
            CliError::Usage(_) => "usage",
            CliError::VerificationFailed(_) => "verification_failed",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }

    pub fn info(&self) -> ErrorInfo {
        ErrorInfo {
            kind: self.kind().into(),
            message: self.to_string(),
        }
    }

    /// The single-line JSON form written to stderr.
    pub fn json_line(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::VerificationFailed(ids) => write!(f, "acceptance criteria failed: {ids:?}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<odo_core::Error> for CliError {
    fn from(e: odo_core::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "odo", version, about = "Spin-wave free energies, Monte Carlo and exact checks for the frustrated XY antiferromagnet")]
pub struct Cli {
    /// Worker threads. The default of 1 keeps golden outputs reproducible.
    #[arg(long, env = "ODO_THREADS", default_value_t = 1, global = true)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Prefix of every output path, manifest included.
    #[arg(long)]
    pub out_prefix: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spin-wave free energy on a grid of Néel angles, minima flagged.
    SpinwaveScan {
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 5.0)]
        step_deg: f64,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        /// Mass added to the dispersion.
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Metropolis run from a JSON run plan.
    McRun {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Good/bad block classification of snapshots.
    BlocksAnalyze {
        /// Snapshots, binary or `.csv`.
        #[arg(required = true)]
        snapshots: Vec<PathBuf>,
        /// Block scale B.
        #[arg(long, default_value_t = 4)]
        block_size: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = odo_core::blocks::DEFAULT_KAPPA)]
        kappa: f64,
        /// Number of reference angles; the smallest admissible by default.
        #[arg(long)]
        s: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Exhaustive chessboard and subadditivity checks on the clock model.
    OracleChessboard {
        #[arg(long, default_value_t = 3)]
        q: u32,
        /// Torus side L.
        #[arg(long, default_value_t = 4)]
        side: usize,
        #[arg(long, default_value_t = 2)]
        block_size: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 2.0])]
        beta_j: Vec<f64>,
        /// Near-Néel tolerance of the built-in event suite.
        #[arg(long, default_value_t = 70.0)]
        delta_deg: f64,
        /// JSON event suite replacing the built-in one.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Largest state space to enumerate.
        #[arg(long, default_value_t = odo_core::oracle::DEFAULT_BUDGET)]
        budget: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Box probabilities of the massive Gaussian spin-wave field.
    OracleGaussian {
        #[arg(long, default_value_t = 16)]
        side: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0)]
        phi_deg: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1e4)]
        beta_j: f64,
        /// Box half-width; betaJ^(-5/12) by default.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Cubic remainder of the quadratic energy near Néel states.
    OracleHarmonic {
        #[arg(long, default_value_t = 16)]
        side: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        beta_j: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.2])]
        deltas: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the acceptance suite and prints a PASS/FAIL table.
    VerifyAll {
        #[arg(long, value_enum, default_value_t = Budget::Quick)]
        budget: Budget,
        /// Criteria to run (comma separated); all by default.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u32>,
        #[command(flatten)]
        common: Common,
    },
}

pub const DEFAULT_VERIFY_SEED: u64 = 12345;

fn prefix(common: &Common, default: &str) -> String {
    common.out_prefix.clone().unwrap_or_else(|| default.to_string())
}

impl Command {
    /// Resolves flags and config files into a complete configuration.
    pub fn resolve(self) -> Result<CommandConfig, CliError> {
        Ok(match self {
            Command::SpinwaveScan {
                gamma,
                step_deg,
                tol,
                lambda,
                common,
            } => CommandConfig::SpinwaveScan(ScanConfig {
                gamma,
                step_deg,
                tol,
                lambda,
                out_prefix: prefix(&common, "spinwave"),
                seed: common.seed.unwrap_or(0),
            }),
            Command::McRun { config, common } => {
                let text = std::fs::read_to_string(&config).map_err(|e| odo_core::Error::Io {
                    context: "reading run plan",
                    path: config.clone(),
                    source: e,
                })?;
                // validated once the overrides below are in place
                let mut plan: RunPlan = serde_json::from_str(&text).map_err(|e| odo_core::Error::Format {
                    path: config.clone(),
                    reason: e.to_string(),
                })?;
                if let Some(seed) = common.seed {
                    plan.seed = seed;
                }
                let out_prefix = common.out_prefix.or(plan.out_prefix.take()).unwrap_or_else(|| "mc".into());
                plan.out_prefix = Some(out_prefix);
                CommandConfig::McRun(McConfig { plan })
            }
            Command::BlocksAnalyze {
                snapshots,
                block_size,
                delta,
                kappa,
                s,
                common,
            } => CommandConfig::BlocksAnalyze(BlocksConfig {
                snapshots,
                b: block_size,
                delta,
                kappa,
                s,
                out_prefix: prefix(&common, "blocks"),
                seed: common.seed.unwrap_or(0),
            }),
            Command::OracleChessboard {
                q,
                side,
                block_size,
                gamma,
                beta_j,
                delta_deg,
                events,
                budget,
                common,
            } => CommandConfig::OracleChessboard(ChessboardConfig {
                side,
                q,
                b: block_size,
                gamma,
                beta_j,
                delta_deg,
                events,
                budget,
                out_prefix: prefix(&common, "chessboard"),
                seed: common.seed.unwrap_or(0),
            }),
            Command::OracleGaussian {
                side,
                gamma,
                phi_deg,
                lambda,
                beta_j,
                delta,
                samples,
                common,
            } => CommandConfig::OracleGaussian(GaussianConfig {
                side,
                gamma,
                phi_deg,
                lambda,
                beta_j,
                delta,
                samples,
                out_prefix: prefix(&common, "gaussian"),
                seed: common.seed.unwrap_or(0),
            }),
            Command::OracleHarmonic {
                side,
                gamma,
                beta_j,
                deltas,
                samples,
                common,
            } => CommandConfig::OracleHarmonic(HarmonicConfig {
                side,
                gamma,
                beta_j,
                deltas,
                samples,
                out_prefix: prefix(&common, "harmonic"),
                seed: common.seed.unwrap_or(0),
            }),
            Command::VerifyAll {
                budget,
                criteria,
                common,
            } => CommandConfig::VerifyAll(VerifyConfig {
                budget,
                criteria,
                out_prefix: prefix(&common, "verify"),
                seed: common.seed.unwrap_or(DEFAULT_VERIFY_SEED),
            }),
        })
    }
}

/// What a finished (or failed) run produced.
#[derive(Debug)]
pub struct Execution {
    pub manifest: Option<Manifest>,
    pub manifest_path: PathBuf,
    pub error: Option<CliError>,
}

impl Execution {
    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(0, CliError::exit_code)
    }
}

fn run_command(config: &CommandConfig, threads: usize, quiet: bool, outputs: &mut Vec<PathBuf>) -> (Value, Option<CliError>) {
    let plain = |r: odo_core::Result<Value>| match r {
        Ok(v) => (v, None),
        Err(e) => (Value::Null, Some(CliError::Core(e))),
    };
    match config {
        CommandConfig::SpinwaveScan(c) => plain(commands::spinwave_scan(c, outputs)),
        CommandConfig::McRun(c) => plain(commands::mc_run(c, outputs)),
        CommandConfig::BlocksAnalyze(c) => plain(commands::blocks_analyze(c, outputs)),
        CommandConfig::OracleChessboard(c) => plain(commands::oracle_chessboard(c, outputs)),
        CommandConfig::OracleGaussian(c) => plain(commands::oracle_gaussian(c, outputs)),
        CommandConfig::OracleHarmonic(c) => plain(commands::oracle_harmonic(c, outputs)),
        CommandConfig::VerifyAll(c) => verify::run(c, threads, quiet, outputs),
    }
}

/// Validates and runs `config` on a pool of `threads` workers, then writes
/// the manifest.
pub fn execute(config: &CommandConfig, threads: usize, quiet: bool) -> Execution {
    let manifest_path = Manifest::path_for(config.out_prefix());
    let start = Instant::now();
    let mut outputs = Vec::new();
    let (summary, error) = match config.validate() {
        Err(e) => (Value::Null, Some(CliError::Core(e))),
        Ok(()) => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(|| run_command(config, threads, quiet, &mut outputs)),
            Err(e) => (Value::Null, Some(CliError::Usage(format!("cannot start {threads} worker threads: {e}")))),
        },
    };
    let failure = error.as_ref().map(|e| (e.info(), e.exit_code()));
    let wall = start.elapsed().as_secs_f64();
    match emit_manifest(config, threads, wall, &outputs, summary, failure).and_then(|m| {
        m.write(&manifest_path)?;
        Ok(m)
    }) {
        Ok(m) => Execution {
            manifest: Some(m),
            manifest_path,
            error,
        },
        Err(e) => Execution {
            manifest: None,
            manifest_path,
            error: Some(error.unwrap_or(CliError::Core(e))),
        },
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    dispatch_with(argv, false)
}

/// As [`dispatch`]; `quiet` suppresses everything but error lines.
pub fn dispatch_with<I, T>(argv: I, quiet: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                if !quiet {
                    let _ = e.print();
                }
                let code = if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { 1 } else { 0 };
                return code;
            }
            let text = e.to_string();
            let message: Vec<&str> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .collect();
            let err = CliError::Usage(message.join(" "));
            eprintln!("{}", err.json_line());
            return err.exit_code();
        }
    };
    if cli.threads == 0 {
        let err = CliError::Usage("--threads must be at least 1".into());
        eprintln!("{}", err.json_line());
        return err.exit_code();
    }
    let config = match cli.command.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", e.json_line());
            return e.exit_code();
        }
    };
    let run = execute(&config, cli.threads, quiet);
    match &run.error {
        Some(e) => eprintln!("{}", e.json_line()),
        None if !quiet => {
            if let Some(m) = &run.manifest {
                for o in &m.outputs {
                    println!("{}", o.path.display());
                }
            }
            println!("{}", run.manifest_path.display());
        }
        None => {}
    }
    run.exit_code()
}
