use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulation and analysis stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid lattice spec: {0}")]
    Spec(String),

    #[error("cannot encode state: {0}")]
    Encoding(String),

    #[error("numerical failure: {message} (residual {residual:.3e})")]
    Numerical { message: String, residual: f64 },

    #[error("mitigation failed: {0}")]
    Mitigation(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("matrix too large: {0}")]
    Size(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("config {path}: {message}")]
    Config { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
