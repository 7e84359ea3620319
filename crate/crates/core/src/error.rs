use std::path::PathBuf;

use thiserror::Error;

use crate::density::ValidationReport;
use crate::executor::RunRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Evaluation outside the nonnegative quadrant, or a non-finite input.
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller broke an operation precondition (length mismatch, bad parameter).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid density: {0}")]
    InvalidDensity(ValidationReport),

    /// The operation is not available for this density form.
    #[error("unsupported: {0}")]
    Capability(String),

    #[error("sample #{index} ({x}, {y}) is not covered by any box of the partition")]
    Coverage { index: usize, x: f64, y: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("expected time does not exist: {0}")]
    Divergent(String),

    #[error("stage {index} ({id}) failed: {message}")]
    StageFailed {
        index: usize,
        id: String,
        message: String,
        partial: Box<RunRecord>,
    },

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for malformed input files and I/O trouble, as opposed to domain failures.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Parse(_))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
