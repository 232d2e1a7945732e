use thiserror::Error;

/// Failures raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("threshold {d} lies beyond the severity support (S_Y(d) = 0)")]
    ThresholdBeyondSupport { d: f64 },

    #[error("exponent {a} is not below the tail radius {radius}")]
    ExponentBeyondRadius { a: f64, radius: f64 },

    #[error("scale n = {n} must be at least 1")]
    InvalidScale { n: f64 },

    #[error("claim {y} is not above the full-retention threshold {threshold}")]
    BranchMisuse { y: f64, threshold: f64 },

    #[error("net-profit condition fails: p_R - lambda E[R] = {margin}")]
    NetProfitViolated { margin: f64 },

    #[error("root solver could not bracket {what}")]
    SolverNoBracket { what: &'static str },

    #[error("tail condition on the excess variable is not certifiably finite: {0}")]
    TailConditionFailed(String),

    #[error("state (x = {x}, m = {m}) lies outside the drawdown domain")]
    StateOutsideDomain { x: f64, m: f64 },

    #[error("scale n = {n} is below the validity threshold {required}")]
    ScaleTooSmall { n: f64, required: f64 },

    #[error("net drift {drift} is not positive")]
    DriftNonpositive { drift: f64 },

    #[error("iteration did not converge within {0} steps")]
    MaxIterations(usize),

    #[error("invalid market: {0}")]
    InvalidMarket(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid study: {0}")]
    InvalidStudy(String),
}

pub type Result<T> = std::result::Result<T, Error>;
