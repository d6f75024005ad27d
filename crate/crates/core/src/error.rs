use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} of size {size} exceeds the cap of {cap}")]
    SizeCap {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("series truncation: tail diagnostic {diagnostic:.4} exceeds {limit}")]
    Truncation { diagnostic: f64, limit: f64 },

    #[error("bound integrand is not integrable at t = 0 (local exponent {exponent:.3})")]
    NonIntegrable { exponent: f64 },

    #[error("series diverges: order-{k} term {term:e} does not decrease")]
    SeriesDivergence { k: usize, term: f64 },

    #[error("diffusion matrix is not positive definite at a probed point")]
    NotPositiveDefinite,

    #[error("pair sampler is not exchangeable")]
    NotExchangeable,

    #[error("graph is not strongly connected ({reached} of {total} vertices reachable)")]
    Disconnected { reached: usize, total: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("rejection sampling acceptance rate {rate:e} is below {min:e}")]
    LowAcceptance { rate: f64, min: f64 },

    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("potential check failed: {0}")]
    Potential(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
