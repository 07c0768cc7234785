use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure category, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("degenerate element {element}: {message}")]
    DegenerateElement { element: usize, message: String },

    #[error("dimension mismatch: expected {expected}, got {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("index {index} out of range for {context} of size {bound}")]
    IndexOutOfRange {
        index: usize,
        bound: usize,
        context: &'static str,
    },

    #[error("preconditioner: zero diagonal entry in row {row}")]
    ZeroDiagonal { row: usize },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("parameter error: {quantity} = {value} ({reason})")]
    Parameter {
        quantity: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("unknown unit `{unit}` for {quantity}")]
    UnknownUnit { quantity: String, unit: String },

    #[error("config: {0}")]
    Config(String),

    #[error("missing tissue entry for label {label}: {what}")]
    MissingLabel { label: u32, what: &'static str },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::DegenerateElement { .. }
            | Error::ZeroDiagonal { .. }
            | Error::NotConverged { .. } => ErrorKind::Numerical,
            Error::Io { .. } => ErrorKind::Io,
            Error::Stage { source, .. } => source.kind(),
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
