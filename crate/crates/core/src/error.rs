use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration (basis size, grid, run parameters).
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument outside the domain of an operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Iterative solver failed to converge.
    #[error("numerical failure: {message} (iterations: {iterations}, max residual: {residual:e})")]
    Convergence {
        message: String,
        iterations: usize,
        residual: f64,
    },

    /// The state left the representable range during time integration.
    #[error("blow-up at t = {t}: {reason}")]
    BlowUp {
        t: f64,
        reason: String,
        last_checkpoint: Option<PathBuf>,
    },

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// True for the error kinds the CLI reports with the numerical-failure exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Convergence { .. } | Error::BlowUp { .. })
    }
}
