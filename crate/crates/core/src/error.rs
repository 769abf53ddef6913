use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty query: at least one text token is required")]
    EmptyQuery,

    #[error("oversize query: {len} tokens exceeds the hard cap of {cap}")]
    OversizeQuery { len: usize, cap: usize },

    #[error("malformed token sequence: {0}")]
    MalformedSequence(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },

    #[error("empty document")]
    EmptyDocument,

    #[error("empty index")]
    EmptyIndex,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no text rows available as remap targets")]
    NoRemapTargets,

    #[error("mask row {row} does not duplicate any non-mask row")]
    UnmappedMask { row: usize },

    #[error("ineligible query: {0}")]
    IneligibleQuery(String),

    #[error("unknown document id {0}")]
    UnknownDocument(u32),

    #[error("bad magic")]
    BadMagic,

    #[error("truncated file")]
    Truncated,

    #[error("store dimension must be non-zero")]
    ZeroDim,

    #[error("duplicate document id {0}")]
    DuplicateDocument(u32),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
