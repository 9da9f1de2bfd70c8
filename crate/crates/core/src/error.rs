use thiserror::Error;

use crate::ir::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("malformed fraction `{0}`")]
    BadFraction(String),
    #[error("interval [{a}, {b}] is not inside [0, 1] or is inverted")]
    BadInterval { a: String, b: String },
    #[error("value fraction {0} is outside [0, 1]")]
    BadLambda(String),
    #[error("invalid valuation: {0}")]
    InvalidValuation(String),
    #[error("expected {expected} agents, got {got}")]
    AgentMismatch { expected: usize, got: usize },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("protocol is invalid: {0}")]
    InvalidProtocol(String),
    #[error("agent {agent} at node {node}: {detail}")]
    IllegalAction {
        node: NodeId,
        agent: usize,
        detail: String,
    },
    #[error("agent {agent} at node {node} aborted: {reason}")]
    Aborted {
        node: NodeId,
        agent: usize,
        reason: String,
    },
    #[error("GCC leaf {node} reached with unallocated cake {detail}")]
    Unallocated { node: NodeId, detail: String },
    #[error("trace does not match protocol: {0}")]
    TraceMismatch(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("input rejected by validator: {0}")]
    Invalid(String),
    #[error("output would exceed the node budget of {limit}")]
    Budget { limit: usize },
    #[error("piece {piece} is never allocated on the path to GCC leaf {node}")]
    Unallocated { node: NodeId, piece: usize },
    #[error("unknown conversion `{0}`")]
    UnknownOp(String),
    #[error("no size bound is available for `{0}`")]
    NoBound(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("inconclusive: node-evaluation budget of {budget} exceeded")]
    Inconclusive { budget: u64 },
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}
