use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("{what} = {value} outside [{lo}, {hi}]")]
    Range { what: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("domain error: {0}")]
    Domain(String),
    /// A jump below the path cutoff could have crossed the counting threshold.
    #[error("cutoff {cutoff:e} exceeds threshold/|b| = {limit:e}")]
    Truncation { cutoff: f64, limit: f64 },
    #[error("evaluation at t = {t} beyond process horizon {horizon}")]
    Horizon { t: f64, horizon: f64 },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
