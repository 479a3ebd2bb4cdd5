//! Error types shared across the crate.

use thiserror::Error;

use crate::graph::{EdgeId, NodeId};

/// Graph construction, generation, mutation, and file-format errors.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("node id {node} out of range for graph with {node_count} nodes")]
    NodeOutOfRange { node: NodeId, node_count: usize },
    #[error("self-loop on node {node} is not allowed")]
    SelfLoop { node: NodeId },
    #[error("duplicate edge ({tail}, {head})")]
    DuplicateEdge { tail: NodeId, head: NodeId },
    #[error("edge ({tail}, {head}) has non-positive length")]
    NonPositiveLength { tail: NodeId, head: NodeId },
    #[error("unknown edge id {edge}")]
    UnknownEdge { edge: EdgeId },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("graph file parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Linear-solve errors for the grounded Kirchhoff system.
#[derive(Debug, Error)]
pub enum SolveError {
    /// Nodes carrying current that the conductance support does not connect
    /// to the grounded node.
    #[error("conductance network disconnects nodes {nodes:?} from the ground node {ground}")]
    Disconnected { ground: NodeId, nodes: Vec<NodeId> },
    /// The iterative solver ran out of budget before meeting the tolerance.
    #[error("linear solver stalled at relative residual {achieved:e} (target {target:e})")]
    NoConvergence { achieved: f64, target: f64 },
    /// The factorization hit a non-positive pivot (numerically singular).
    #[error("factorization broke down at pivot {pivot}")]
    SingularPivot { pivot: usize },
}

/// Errors from the adaptive solver drivers.
#[derive(Debug, Error)]
pub enum PhysarumError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("nodes {nodes:?} are not reachable from the source {source_node}")]
    Unreachable { source_node: NodeId, nodes: Vec<NodeId> },
    #[error("warm-start state does not match this graph (expected {expected} edges, state has {actual})")]
    StateShape { expected: usize, actual: usize },
    #[error("updated graph must keep the original topology: {0}")]
    TopologyMismatch(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}
