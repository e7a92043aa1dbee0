//! Error type shared by every module.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("coordinate singularity: {0}")]
    Singularity(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("trace failed at t={t}: {msg} (last state {state:?})")]
    Trace { t: f64, state: Vec<f64>, msg: String },
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numeric(_) | Error::Trace { .. })
    }

    /// Short machine-readable tag used by the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Singularity(_) => "singularity",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::Numeric(_) => "numeric",
            Error::Trace { .. } => "trace",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
