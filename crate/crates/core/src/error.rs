use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not a supported prime (need a prime p with 2 <= p <= 251)")]
    InvalidPrime(u32),

    #[error("enumeration of {needed} points exceeds the exact budget of {budget}; use Monte Carlo mode")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("search space exceeded: {0}")]
    SearchCutoff(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("function is not measurable with respect to the factor: {0}")]
    NotMeasurable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
