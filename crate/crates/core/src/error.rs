use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the dldp toolkit.
#[derive(Debug, Error)]
pub enum DldpError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("structural error: {0}")]
    Structure(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frequency estimator undefined: p equals q at epsilon = 0")]
    EstimatorUndefined,

    #[error("instance too large: {0}")]
    Capacity(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl DldpError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DldpError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, DldpError>;
