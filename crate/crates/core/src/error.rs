use thiserror::Error;

use crate::family::NodeType;

#[derive(Debug, Error)]
pub enum Error {
    /// The natural parameter left the domain of the log-partition function.
    #[error("{kind} log-partition undefined at eta = {eta}")]
    Domain { kind: NodeType, eta: f64 },

    #[error("node index {index} out of range for p = {p}")]
    IndexOutOfRange { index: usize, p: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("value {value} outside the support of {kind} node {node}")]
    Support {
        kind: NodeType,
        node: usize,
        value: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("model is not strongly compatible: {0}")]
    NotStronglyCompatible(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
