use thiserror::Error;

/// Errors raised by the estimators and their supporting geometry.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter rho must be positive, got {0}")]
    NonPositiveRho(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector must be nonzero")]
    ZeroVector,
    #[error("exponent q must lie in (0, 1], got {0}")]
    InvalidOrder(f64),
    #[error("invalid norm: {0}")]
    InvalidNorm(String),
    #[error("point is not on the graph of the mapping")]
    OffGraph,
    #[error("no candidate points were sampled")]
    EmptySample,
    #[error("the mapping has no coderivative oracle")]
    MissingCoderivative,
    #[error("y coincides with the reference value ybar")]
    AtReferenceValue,
    #[error("unknown catalog problem `{0}`")]
    UnknownProblem(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("condition (P2) fails: liminf f/d(y, ybar) appears to vanish (last ratio {0})")]
    P2Violated(f64),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveRho(rho))
    }
}

pub(crate) fn check_order(q: f64) -> Result<()> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidOrder(q))
    }
}
