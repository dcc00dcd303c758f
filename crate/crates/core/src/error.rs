use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SgError>;

#[derive(Debug, Error)]
pub enum SgError {
    #[error("level {level} exceeds the configured maximum {max}")]
    ResourceLimit { level: usize, max: usize },

    #[error("level mismatch: expected level {expected}, found {found}")]
    LevelMismatch { expected: usize, found: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("basis mismatch between operators: {left} vs {right}")]
    BasisMismatch { left: String, right: String },

    #[error("matrix is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("{what} did not converge (achieved residual {residual:e}, required {tolerance:e})")]
    NoConvergence {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error in {path}: {}", .rows.join("; "))]
    Parse { path: PathBuf, rows: Vec<String> },

    #[error("io error on {path}: {source}")]
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

impl SgError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SgError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of a numerical routine (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SgError::NoConvergence { .. } | SgError::NotHermitian { .. }
        )
    }
}
