use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
///
/// The variants map onto the CLI exit codes: parse and validation problems are
/// input errors, domain and estimation failures are reported as validation
/// errors too, and numerical breakdowns get their own code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("selection error: {0}")]
    Selection(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for failures caused by numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
