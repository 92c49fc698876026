use alloc::string::String;
use alloc::vec::Vec;

use crate::num::Q;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("linear forms do not have full column rank {0}")]
    RankDeficient(usize),
    #[error("enumeration truncated at {limit} points")]
    Truncated { limit: usize },
    #[error("guard exceeded: {0}")]
    Guard(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("group mismatch: {0}")]
    GroupMismatch(String),
    #[error("acceptance rate of rejection sampling fell below 1e-6")]
    LowAcceptance,
    #[error("volume mismatch: {0} vs {1}")]
    VolumeMismatch(f64, f64),
    #[error("A is not covered by P + X; uncovered element {witness:?}")]
    NotCovered { witness: Vec<Q> },
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("resampling budget exhausted: {0}")]
    ResampleExhausted(&'static str),
    #[error("internal error: {0}")]
    Internal(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
