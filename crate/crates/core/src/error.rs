use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("cycle detected through node `{node}`")]
    Cycle { node: String },
    #[error("row {row} of the table for `{node}` sums to {sum}, expected 1")]
    RowSum { node: String, row: usize, sum: f64 },
    #[error("table for `{node}` has {found} entries, expected {expected}")]
    Dimension {
        node: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{node}` has no value `{value}`")]
    UnknownValue { node: String, value: String },
    #[error("assignment covers {found} of {expected} nodes")]
    IncompleteAssignment { expected: usize, found: usize },
    #[error("evidence has zero probability")]
    ImpossibleEvidence,
    #[error("node `{node}` is already observed with a different value")]
    Conflict { node: String },
    #[error("node `{node}` belongs to the loop cutset and cannot be observed")]
    CutsetEvidence { node: String },
    #[error("node `{node}` belongs to the loop cutset; read it from the cutset posterior")]
    CutsetQuery { node: String },
    #[error("node `{0}` is not contained in any clique")]
    NodeNotInForest(String),
    #[error("invalid cutset: {0}")]
    InvalidCutset(String),
    #[error("invalid retention policy: {0}")]
    InvalidPolicy(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T, E = InferenceError> = std::result::Result<T, E>;
