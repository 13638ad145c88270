//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid edge weight {weight} at line {line}: weights must be positive and finite")]
    InvalidWeight { line: usize, weight: f64 },

    #[error("graph is disconnected: no path between nodes {a} and {b}")]
    Disconnected { a: usize, b: usize },

    #[error("dimension mismatch: expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("nodes {i} and {j} are coincident")]
    CoincidentNodes { i: usize, j: usize },

    #[error("degenerate layout: all nodes coincident")]
    DegenerateLayout,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("part count {k} out of range for a graph with {n} nodes")]
    PartCountOutOfRange { k: usize, n: usize },

    #[error("invalid partition matrix: {0}")]
    InvalidPartitionMatrix(crate::fuzzy::PartitionViolation),

    #[error("non-finite coordinate detected at iteration {iteration}")]
    NumericFailure { iteration: usize },

    #[error("shortest-path distances are required for the {rule:?} rule")]
    DistancesRequired { rule: crate::forces::ForceRule },
}
