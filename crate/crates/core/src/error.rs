use alloc::string::String;

/// Errors raised by model construction and the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid graph family: {0}")]
    InvalidFamily(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("node {node} is out of range for a model with {nodes} nodes")]
    NodeOutOfRange { node: usize, nodes: usize },

    #[error("({i}, {j}) is not an edge of the model")]
    NotAnEdge { i: usize, j: usize },

    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A quantity that is positive in exact arithmetic came out non-positive.
    #[error("numerical domain failure: {0}")]
    NumericalDomain(&'static str),

    #[error("model has {nodes} nodes; exact enumeration is limited to {limit}")]
    TooLarge { nodes: usize, limit: usize },

    #[error("search direction is not a descent direction (slope {0})")]
    NotDescent(f64),
}

pub type Result<T> = core::result::Result<T, Error>;
