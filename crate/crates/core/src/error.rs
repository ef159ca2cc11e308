use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// A receiver or transmitter sits on (or numerically at) an element.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("codebook is not reachable by row/column flips of the all -1 state")]
    NotReachable,

    #[error("label length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("search space of 2^{bits} candidates exceeds budget of 2^{budget}")]
    BudgetExceeded { bits: usize, budget: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("config mismatch: {0}")]
    ConfigMismatch(String),

    #[error("{0} partition is empty although its fraction is nonzero")]
    EmptyPartition(&'static str),

    #[error("evaluation set is empty")]
    EmptyTestSet,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("version mismatch: expected {expected:?}, found {found:?}")]
    VersionMismatch { expected: String, found: String },

    #[error("at grid point {index}: {source}")]
    AtPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short stable identifier used in machine-readable CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGeometry(_) => "InvalidGeometry",
            Error::DegenerateGeometry(_) => "DegenerateGeometry",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NotReachable => "NotReachable",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::ConfigMismatch(_) => "ConfigMismatch",
            Error::EmptyPartition(_) => "EmptyPartition",
            Error::EmptyTestSet => "EmptyTestSet",
            Error::Parse { .. } => "ParseError",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::AtPoint { source, .. } => source.kind(),
            Error::Io { .. } => "Io",
            Error::Csv(_) => "Io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
