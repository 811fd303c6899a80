use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}", path = path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid parameter `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },

    #[error("{what}: {reason}")]
    Domain { what: &'static str, reason: String },

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("non-finite value in {what} at flat index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("no admissible wage on the grid (w_min = {w_min})")]
    NoAdmissibleWage { w_min: f64 },

    #[error("zero probability mass in productivity group {eta}")]
    EmptyGroup { eta: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("export failed: {0}")]
    Export(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            what,
            reason: reason.into(),
        }
    }
}
