//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid construction argument or precondition violation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Vector/matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Both sensitive groups must be present for group-covariance work.
    #[error("dataset contains a single sensitive group (z = {0})")]
    SingleGroup(u8),

    /// A solver produced or encountered a non-finite value.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Constraint targets cannot be met under the requested rule family.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// CSV / schema ingestion problem.
    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
