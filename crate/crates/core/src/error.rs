use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension {0} is outside the supported range 1..=4")]
    UnsupportedDimension(u8),
    #[error("invalid coordinate vector {coords:?} for dimension {dim}")]
    InvalidCoordinate { dim: u8, coords: Vec<u8> },
    #[error("point index {index} out of range for dimension {dim}")]
    InvalidPoint { dim: u8, index: usize },
    #[error("point {0} paired with itself does not determine a line")]
    DegeneratePair(u8),
    #[error("point set is not a cap")]
    NotACap,
    #[error("cap has {size} points, maximal caps in dimension {dim} have {expected}")]
    NotMaximal { dim: u8, size: usize, expected: usize },
    #[error("maximal caps in dimension {0} have no anchor point")]
    NoAnchor(u8),
    #[error("point {0} is already in the cap")]
    Membership(u8),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(u8, u8),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("capacity exceeded: {what} needs {needed}, limit is {limit}")]
    Capacity {
        what: &'static str,
        needed: u64,
        limit: u64,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}
