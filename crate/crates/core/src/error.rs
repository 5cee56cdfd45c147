use thiserror::Error;

/// Errors raised by the copula, vine, margin and estimation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("numerical failure: {what} (residual {residual:e})")]
    Numerical { what: String, residual: f64 },

    #[error("non-finite log-density at t={t}, k={k}")]
    NonFiniteTerm { t: usize, k: usize },

    #[error("degenerate margin: {0}")]
    DegenerateMargin(String),

    #[error("estimation failed: {0}")]
    Fit(String),

    #[error("sampler diagnostics: {0}")]
    Diagnostics(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
