//! Crate-wide error type and result alias.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MugError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed input data; `row` is the 1-based data row where parsing failed.
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },
    #[error("ingestion error: {0}")]
    Ingest(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("config error: {0}")]
    Config(String),
    /// An internal contract was violated (shape mismatch, out-of-range index,
    /// non-finite value where finiteness is required).
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("file format error: {0}")]
    Format(String),
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("hyperparameter search failed: {0}")]
    SearchFailed(String),
}

impl MugError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MugError::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from user input (data, config, paths) rather
    /// than an internal failure. Drives the CLI exit code (1 vs 2).
    pub fn is_user_error(&self) -> bool {
        !matches!(
            self,
            MugError::Contract(_) | MugError::Diverged(_) | MugError::SearchFailed(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, MugError>;
