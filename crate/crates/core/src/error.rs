use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate vocabulary word {0:?}")]
    DuplicateWord(String),
    #[error("invalid corpus: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("embedding file is empty")]
    Empty,
    #[error("line {line}: expected {expected} dimensions, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: cannot parse {token:?} as a number")]
    Parse { line: usize, token: String },
    #[error("line {line}: missing vector values")]
    MissingValues { line: usize },
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("vectors have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("threshold must lie in (0, 1], got {0}")]
pub struct InvalidThreshold(pub f64);

#[derive(Debug, Error)]
pub enum IndexFormatError {
    #[error("not an index file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported index format version {0}")]
    UnsupportedVersion(u32),
    #[error("index file is truncated")]
    Truncated,
    #[error("index invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(io::Error),
}

impl From<io::Error> for IndexFormatError {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            IndexFormatError::Truncated
        } else {
            IndexFormatError::Io(e)
        }
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("query is empty after normalization")]
    EmptyQuery,
    #[error("limit must be at least 1")]
    InvalidLimit,
    #[error(transparent)]
    Threshold(#[from] InvalidThreshold),
}

#[derive(Debug, Error)]
pub enum Bm25Error {
    #[error("no query patterns given")]
    NoPatterns,
    #[error("pattern {0} is empty after normalization")]
    EmptyPattern(usize),
    #[error("k1 must be a finite value >= 0, got {0}")]
    InvalidK1(f64),
    #[error("b must lie in [0, 1], got {0}")]
    InvalidB(f64),
}
