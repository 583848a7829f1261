use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("p = {p} exceeds the materialization guard of {limit}; use the Gram-matrix path")]
    DimensionGuard { p: usize, limit: usize },

    #[error("dimension mismatch: expected {expected} columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("within-class covariance estimate is singular")]
    SingularWithinEstimate,

    #[error("eigen-gap {gap:e} at the split index is too small")]
    GapTooSmall { gap: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
