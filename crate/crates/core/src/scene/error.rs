use thiserror::Error;

use super::NodeId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("duplicate node id `{0}`")]
    DuplicateNode(NodeId),
    #[error("node `{0}` has a zero-volume bounding box")]
    DegenerateGeometry(NodeId),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("delta does not match graph: {0}")]
    DeltaMismatch(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation: {0}")]
    Schema(String),
}

pub type Result<T, E = SceneError> = std::result::Result<T, E>;
