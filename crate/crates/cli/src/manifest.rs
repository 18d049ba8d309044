//! Run manifests: the resolved configuration, content hashes of every
//! emitted file and a short result summary.

use std::path::{Path, PathBuf};

use odo_core::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::CommandConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

impl OutputFile {
    pub fn hash(path: &Path) -> Result<Self> {
        let data = std::fs::read(path).map_err(|e| Error::Io {
            context: "hashing output",
            path: path.to_path_buf(),
            source: e,
        })?;
        Ok(OutputFile {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(&data)),
            bytes: data.len() as u64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub core_version: String,
    pub subcommand: String,
    pub config: CommandConfig,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub status: Status,
    pub exit_code: i32,
    pub error: Option<ErrorInfo>,
    pub outputs: Vec<OutputFile>,
    pub summary: serde_json::Value,
}

impl Manifest {
    pub fn path_for(prefix: &str) -> PathBuf {
        PathBuf::from(format!("{prefix}_manifest.json"))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            context: "reading manifest",
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifests serialize");
        std::fs::write(path, text + "\n").map_err(|e| Error::Io {
            context: "writing manifest",
            path: path.to_path_buf(),
            source: e,
        })
    }

    /// Hash of every output, in emission order.
    pub fn output_hashes(&self) -> Vec<(&Path, &str)> {
        self.outputs.iter().map(|o| (o.path.as_path(), o.sha256.as_str())).collect()
    }
}

/// Builds the manifest of a finished run; outputs that no longer exist
/// are reported as an I/O error.
pub fn emit_manifest(
    config: &CommandConfig,
    threads: usize,
    wall_time_s: f64,
    outputs: &[PathBuf],
    summary: serde_json::Value,
    failure: Option<(ErrorInfo, i32)>,
) -> Result<Manifest> {
    let outputs = outputs.iter().map(|p| OutputFile::hash(p)).collect::<Result<Vec<_>>>()?;
    let (status, exit_code, error) = match failure {
        None => (Status::Ok, 0, None),
        Some((info, code)) => (Status::Failed, code, Some(info)),
    };
    Ok(Manifest {
        schema_version: SCHEMA_VERSION,
        tool: "odo".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        core_version: odo_core::VERSION.into(),
        subcommand: config.name().into(),
        config: config.clone(),
        seed: config.seed(),
        threads,
        wall_time_s,
        status,
        exit_code,
        error,
        outputs,
        summary,
    })
}
