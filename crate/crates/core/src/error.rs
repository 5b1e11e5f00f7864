use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // --- file formats ---
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("corpus {0} contains no records")]
    EmptyCorpus(PathBuf),
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("bad magic bytes (expected \"EMB1\")")]
    BadMagic,
    #[error("unsupported EMB1 version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated payload: header declares {expected} bytes, file holds {actual}")]
    TruncatedPayload { expected: u64, actual: u64 },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(u64),
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    // --- numerics ---
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("too few points: need more than {needed}, got {actual}")]
    TooFewPoints { needed: usize, actual: usize },
    #[error("empty k-means cluster could not be re-seeded")]
    EmptyClusterUnrecoverable,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid mixture spec: {0}")]
    InvalidSpec(String),

    // --- lexical / stats ---
    #[error("need at least 2 documents, got {0}")]
    TooFewDocs(usize),
    #[error("pool of {available} rows is too small to draw {requested}")]
    PoolTooSmall { requested: usize, available: usize },
    #[error("need at least 2 seeds, got {0}")]
    TooFewSeeds(usize),
    #[error("rows span several (n, k) cells; select one cell first")]
    MixedCells,
    #[error("series is constant")]
    ConstantSeries,
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }
}
