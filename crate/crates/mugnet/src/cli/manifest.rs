//! Per-run manifest: the resolved configuration, the seed, sha-256 digests
//! of every input file (recorded before processing), timestamps, and the
//! measured train/test durations. Timestamps and durations are excluded
//! from any reproducibility comparison.

use crate::error::{MugError, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub inputs: Vec<InputDigest>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub train_seconds: Option<f64>,
    pub test_seconds: Option<f64>,
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| MugError::io(path, e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex_string(&hasher.finalize()))
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    /// Digest inputs up front so the recorded hashes reflect the files as
    /// they were read.
    pub fn start(command: String, seed: u64, inputs: &[&Path]) -> Result<RunManifest> {
        let digests = inputs
            .iter()
            .map(|p| {
                Ok(InputDigest {
                    path: p.to_path_buf(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RunManifest {
            command,
            config: serde_json::Value::Null,
            seed,
            inputs: digests,
            started_unix: now_unix(),
            finished_unix: 0,
            train_seconds: None,
            test_seconds: None,
        })
    }

    pub fn finish(&mut self) {
        self.finished_unix = now_unix();
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| MugError::Format(e.to_string()))?;
        std::fs::write(&path, json).map_err(|e| MugError::io(&path, e))
    }
}
