use thiserror::Error;

use crate::graph::Vertex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid vertex id {0} (graph has {1} vertices)")]
    InvalidVertex(Vertex, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(Vertex),
    #[error("edge {0}-{1} has non-positive or non-finite length {2}")]
    NonPositiveLength(Vertex, Vertex, f64),
    #[error("graph is disconnected: vertex {0} is unreachable from vertex 0")]
    Disconnected(Vertex),
    #[error("{0} labels supplied for {1} vertices")]
    LabelCount(usize, usize),
    #[error("vertices {0} and {1} are not joined by an edge")]
    NotAnEdge(Vertex, Vertex),
    #[error("paths do not meet: {0} != {1}")]
    Discontinuous(Vertex, Vertex),
    #[error("empty path")]
    EmptyPath,
    #[error("empty vertex set")]
    EmptySet,
    #[error("vertex {0} lies in the forbidden set")]
    Forbidden(Vertex),
    #[error("paths do not share endpoints: {0}-{1} vs {2}-{3}")]
    EndpointMismatch(Vertex, Vertex, Vertex, Vertex),
    #[error("no entry for pair {0}-{1}")]
    MissingPair(Vertex, Vertex),
    #[error("horoball depth must be positive")]
    ZeroDepth,
    #[error("approximation graph is disconnected: net vertices {0} and {1} lie in different components ({2} components)")]
    NetDisconnected(Vertex, Vertex, usize),
    #[error("vertex {0} is not a vertex of the ambient space")]
    NotInAmbient(Vertex),
    #[error("landmark metric is not tree-like: realization error {0} at landmarks {1:?}")]
    NotTreeLike(f64, [Vertex; 4]),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl GraphError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        GraphError::Parse {
            line,
            msg: msg.into(),
        }
    }
}
