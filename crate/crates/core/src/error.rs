use std::io;

use thiserror::Error;

use crate::graph::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("graph failed validation: {0}")]
    Validation(ValidationReport),

    #[error("vertex index {index} out of range for graph with {num_vertices} vertices")]
    VertexOutOfRange { index: usize, num_vertices: usize },

    #[error("not a permutation of 0..{len}: {reason}")]
    InvalidPermutation { len: usize, reason: String },

    #[error("schema fingerprint mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: String, found: String },

    #[error("graph has {num_vertices} vertices, above the enumeration cap of {cap}; use graph_embed instead")]
    EnumerationCap { num_vertices: usize, cap: usize },

    #[error("integer arithmetic overflow while accumulating walk products")]
    Overflow,

    #[error("embedding entry at ({row}, {col}) is not an integer: {value}")]
    NonInteger { row: usize, col: usize, value: f64 },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("operator too large to materialize: {entries} entries exceeds cap {cap}")]
    OperatorTooLarge { entries: usize, cap: usize },

    #[error("identity precondition violated: {0}")]
    Precondition(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}
