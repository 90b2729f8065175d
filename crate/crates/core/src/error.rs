use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quad {quad} is not strictly convex: {reason}")]
    NonConvexQuad { quad: usize, reason: String },

    #[error("edge ({0}, {1}) is shared by {2} quads (non-manifold mesh)")]
    NonManifoldEdge(usize, usize, usize),

    #[error("quad {quad} references vertex {index}, mesh has {count} vertices")]
    VertexOutOfRange { quad: usize, index: usize, count: usize },

    #[error("malformed mesh file: {0}")]
    MeshFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("polynomial degree k = {0} is not supported (need k >= 3)")]
    UnsupportedDegree(usize),

    #[error("local element system is singular or rank deficient (condition estimate {condition:.3e})")]
    SingularLocalSystem { condition: f64 },

    #[error("quad {quad}: sub-triangle {triangle} straddles the coefficient interface x = 1/2")]
    Misaligned { quad: usize, triangle: usize },

    #[error("non-positive pivot {pivot:.3e} at dof {dof}")]
    NonPositivePivot { dof: usize, pivot: f64 },

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
