use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("cycle detected through node `{0}`")]
    CycleDetected(String),
    #[error("nest `{0}` has no children")]
    EmptyNest(String),
    #[error("lambda of nest `{id}` is {value}, must lie in (0, 1]")]
    LambdaOutOfRange { id: String, value: f64 },
    #[error("root nest `{id}` has lambda {value}, must be exactly 1")]
    RootLambdaNotOne { id: String, value: f64 },
    #[error("node `{0}` is not reachable from the root")]
    OrphanNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` is not a nest")]
    NotANest(String),
    #[error("node `{0}` is not a leaf")]
    NotALeaf(String),
    #[error("root node `{0}` has no parent")]
    RootHasNoParent(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("series did not converge within {terms} terms")]
    NoConvergence { terms: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("parse error: {0}")]
    Parse(String),
}
