use thiserror::Error;

use crate::index::NodeIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} is not supported")]
    Dimension(usize),
    #[error("depth {0} is not supported")]
    Depth(u32),
    #[error("invalid node index: {0}")]
    InvalidIndex(String),
    #[error("{0:?} is a unit cell and has no children")]
    NoChildren(NodeIndex),
    #[error("point {0:?} is outside the world")]
    OutOfBounds(Vec<f64>),
    #[error("grid has {actual} cells, expected {expected}")]
    GridSize { expected: usize, actual: usize },
    #[error("node {0:?} is not a vertex of the reduced tree")]
    NotAVertex(NodeIndex),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("map format: {0}")]
    Format(String),
    #[error("predicate syntax: {0}")]
    Predicate(String),
    #[error("internal consistency: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
