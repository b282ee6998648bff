//! Integer program over family variables, cluster constraints, and the
//! digraph view of integral assignments.

mod digraph;
mod model;

pub use digraph::{Digraph, Immoralities, Skeleton};
pub use model::{
    build_model, signature_from_surplus, surplus, FamilyVar, IpModel, LinearConstraint,
    RowOrigin, Sense, INTEGRALITY_TOL,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("clusters need at least two vertices, got {0}")]
    ClusterTooSmall(usize),
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
    #[error("cluster level k={k} outside 1..={size}")]
    BadClusterLevel { k: usize, size: usize },
    #[error("column {column} has fractional value {value}")]
    Fractional { column: usize, value: f64 },
    #[error("convexity row of variable {child} sums to {sum}")]
    Convexity { child: usize, sum: f64 },
    #[error("bad assignment: {0}")]
    Assignment(String),
    #[error("digraph has a cycle")]
    Cyclic,
}
