//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum FgsError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV cell that failed to parse, with 1-based data row and column name.
    #[error("csv parse error at row {row}, column '{column}': {message}")]
    CsvCell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// Local weighted design with too little mass around the query point.
    #[error(
        "singular local design at h={h:.6} (effective sample size {effective_count:.2}): \
         too few effectively weighted points in general position; try a larger h"
    )]
    SingularDesign { h: f64, effective_count: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("fixed-point iteration did not converge within {max_iter} iterations (residual {residual:.3e}, tol {tol:.3e})")]
    NonConvergence {
        max_iter: usize,
        residual: f64,
        tol: f64,
    },

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, FgsError>;

impl FgsError {
    /// Coarse classification used by the CLI to select exit codes.
    pub fn is_usage(&self) -> bool {
        matches!(self, FgsError::InvalidConfig(_))
    }

    /// True for errors arising from numerical computation rather than inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            FgsError::SingularDesign { .. }
                | FgsError::Numerical(_)
                | FgsError::NonConvergence { .. }
        )
    }
}
