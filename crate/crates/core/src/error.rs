use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("orbit reached x = {value:e} < 2^-60 at step {step}")]
    LaminarUnderflow { step: u64, value: f64 },

    #[error("gamma mismatch: {left} vs {right}")]
    GammaMismatch { left: f64, right: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("density estimate rejected: {0}")]
    BadDensity(String),

    #[error("insufficient signal: {0}")]
    InsufficientSignal(String),

    #[error("malformed orbit file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
