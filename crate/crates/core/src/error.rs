use thiserror::Error;

/// Errors raised by the frame construction and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("length mismatch: {what} (expected {expected}, got {got})")]
    Mismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("quadrature did not converge: {0}")]
    Convergence(String),
    #[error("polynomial fit residual {residual:.3e} exceeds {tolerance:.1e}")]
    FitResidual { residual: f64, tolerance: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("grid too large: {size} elements exceeds cap {cap}")]
    GridTooLarge { size: u128, cap: usize },
    #[error("band limit mismatch: {0}")]
    BandLimit(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
