use thiserror::Error;

/// Errors produced by the clustering primitives and evaluators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point set must contain at least one point")]
    EmptyPointSet,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {point} has a non-finite coordinate")]
    NonFiniteCoordinate { point: usize },

    #[error("centers {a} and {b} are identical; centers must be pairwise distinct")]
    DuplicateCenters { a: usize, b: usize },

    #[error("assignment[{row}] = {value} is out of range for {k} centers")]
    InvalidAssignment { row: usize, value: usize, k: usize },

    #[error("assignment has {got} entries but the point set has {expected}")]
    AssignmentLength { expected: usize, got: usize },

    #[error("tree does not separate the given centers")]
    NonSeparatingTree,

    #[error("subset must be nonempty")]
    EmptySubset,

    #[error("subset 0x{mask:x} is not contained in the {n}-point universe")]
    SubsetOutOfRange { mask: u32, n: usize },

    #[error("exact evaluation is limited to {max} points, got {got}; use the Monte Carlo estimators for larger sets")]
    ExactCapExceeded { max: usize, got: usize },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("caps exceeded: {0}")]
    CapsExceeded(String),
}

pub type Result<T> = std::result::Result<T, Error>;
