//! Crate-wide error type. Recoverable conditions only; tensor shape abuse
//! and non-finite values panic instead (see `tensor`).

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("empty structure: {0}")]
    EmptyStructure(String),

    #[error("line {line}: face with {arity} vertices, only triangles are supported")]
    NonTriangleFace { line: usize, arity: usize },

    #[error("index {index} out of range, {len} entries")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("bad counts line: {0}")]
    BadCountsLine(String),

    #[error("face {face} has zero area")]
    ZeroAreaFace { face: usize },

    #[error("unknown element symbol {0:?}")]
    UnknownElement(String),

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("schema version {found}, this reader supports version {expected}")]
    SchemaVersionMismatch { expected: u32, found: u32 },

    #[error("checksum mismatch: stored {stored}, computed {computed}")]
    ChecksumMismatch { stored: String, computed: String },

    #[error("no van der Waals radius for element {0:?}")]
    UnknownVdwRadius(String),

    #[error("feature dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("total edge weight is zero")]
    ZeroTotalWeight,

    #[error("graph has {components} connected components, cannot reach k = {k}")]
    DisconnectedInput { components: usize, k: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("zero variance: correlation undefined")]
    ZeroVariance,

    #[error("{0} split is empty")]
    EmptySplit(&'static str),

    #[error("{0} layer is empty")]
    EmptyLayer(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
