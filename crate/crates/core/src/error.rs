use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("Levinson breakdown at step {step}: prediction-error variance {variance:e}")]
    Breakdown { step: usize, variance: f64 },

    #[error("index ({k}, {l}) outside [0, {order}]^2")]
    Index { k: usize, l: usize, order: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("order {order} exceeds the dense limit of {limit}")]
    OrderGuard { order: usize, limit: usize },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("empty index region: {0}")]
    EmptyRegion(String),
}

pub type Result<T> = std::result::Result<T, Error>;
