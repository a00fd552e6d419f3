use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("square core side must be odd, got {0}")]
    EvenSquareCore(usize),

    #[error("inner depth must be at least 1")]
    InvalidInnerDepth,

    #[error("cell id {id} out of range for a core of {len} cells")]
    InvalidCell { id: usize, len: usize },

    #[error("layout is not closed under {group}: cell {id} at ({x}, {y}) has no image")]
    AsymmetricLayout {
        group: String,
        id: usize,
        x: i32,
        y: i32,
    },

    #[error("malformed layout: {0}")]
    MalformedLayout(String),

    #[error("unknown core `{0}`")]
    UnknownCore(String),

    #[error("fuel counts sum to {sum} but the core has {cells} cells")]
    CountsMismatch { sum: usize, cells: usize },

    #[error("penalty weight {index} is negative or not finite ({value})")]
    InvalidWeight { index: usize, value: f64 },

    #[error("assignment has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("value {value} at position {index} is not a valid {alphabet}")]
    OutOfAlphabet {
        index: usize,
        value: i64,
        alphabet: &'static str,
    },

    #[error("cells {cells:?} do not hold exactly one burn level")]
    Decode { cells: Vec<usize> },

    #[error("pattern does not match layout: {0}")]
    PatternMismatch(String),

    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),

    #[error("unknown solver `{0}`")]
    UnknownSolver(String),

    #[error("model has {n} variables, brute force is capped at {cap}; use a heuristic solver")]
    BruteForceCap { n: usize, cap: usize },

    #[error("model has no variables")]
    EmptyModel,

    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("single-run time must be positive, got {0}")]
    InvalidRunTime(f64),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem rather than by inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
