use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the estimators, simulators and file readers.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("parse error at line {line}, column {column}: cannot read {cell:?} as a number")]
    Parse {
        line: usize,
        column: usize,
        cell: String,
    },

    #[error("empty input")]
    EmptyInput,

    /// Input is well-formed but carries no usable spread (all samples equal, all zeros).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient data: {what} (need {needed}, have {have})")]
    InsufficientData {
        what: String,
        needed: usize,
        have: usize,
    },

    #[error("input too large: {0}")]
    Size(String),

    /// Adaptive quadrature ran out of budget; `estimate` is the best value reached.
    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error:e}")]
    Convergence { estimate: f64, error: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by how the operation was called rather than by the data.
    pub fn is_argument_error(&self) -> bool {
        matches!(self, Error::Argument(_) | Error::Size(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
