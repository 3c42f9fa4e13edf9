use thiserror::Error;

use crate::mesh::{ElemId, NodeId};

/// Errors raised by mesh operations, discretization, solvers and the adaptive loops.
#[derive(Debug, Error)]
pub enum AvemError {
    #[error("element {0} is not alive in the current partition")]
    ElementNotAlive(ElemId),
    #[error("element id {0} is out of range")]
    UnknownElement(ElemId),
    #[error("node id {0} is out of range")]
    UnknownNode(NodeId),
    #[error("elements {0} and {1} are not adjacent")]
    NotAdjacent(ElemId, ElemId),
    #[error("refinement chain invariant violated at element {element}: {reason}")]
    ChainInvariant { element: ElemId, reason: String },
    #[error("coordinate resolution exhausted while bisecting the edge ({0}, {1})")]
    ResolutionExhausted(NodeId, NodeId),
    #[error("meshes do not share the same root partition")]
    RootMismatch,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("degenerate element with area {0:e}")]
    DegenerateElement(f64),
    #[error("diffusion tensor is not symmetric positive definite: {0:?}")]
    NotSpd([[f64; 2]; 2]),
    #[error("data does not match the mesh: {0}")]
    DataMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("matrix is not positive definite (p^T A p = {0:e})")]
    Indefinite(f64),
    #[error("{stage} exceeded its iteration cap of {cap}")]
    IterationCap { stage: &'static str, cap: usize },
    #[error("empty estimator field")]
    EmptyEstimator,
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = AvemError> = std::result::Result<T, E>;
