use thiserror::Error;

use crate::tree::VertexId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The input document does not match the tree-file schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// The document parsed but describes an invalid tree.
    #[error("validation error at {location}: {message}")]
    Validation { location: String, message: String },

    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular matrix: pivot {pivot:e} below threshold (scale {scale:e})")]
    SingularMatrix { pivot: f64, scale: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("QL iteration did not converge for eigenvalue {index}")]
    NoConvergence { index: usize },

    /// The operation is not defined for the tree's weight class.
    #[error("operation `{operation}` is not defined for {class} weights")]
    Class {
        operation: &'static str,
        class: &'static str,
    },

    #[error("branch is based at vertex {branch_base}, expected {vertex}")]
    BranchMismatch {
        vertex: VertexId,
        branch_base: VertexId,
    },

    #[error("vertices {0} and {1} are not adjacent")]
    NotAdjacent(VertexId, VertexId),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    /// The Perron walk did not settle; usually a tie tolerance problem.
    #[error("characteristic-like walk did not terminate: trace {trace:?}")]
    NonTermination { trace: Vec<VertexId> },

    #[error(
        "no sign change on [0, 1]: f(0)={f0}, g(0)={g0}, f(1)={f1}, g(1)={g1}; \
         the edge is not characteristic-like"
    )]
    Bracket { f0: f64, g0: f64, f1: f64, g1: f64 },

    #[error("first nonzero Laplacian eigenvalue {value:e} is numerically zero")]
    RankAnomaly { value: f64 },

    #[error(
        "Moore-Penrose certification failed: residuals {residuals:?}, tolerance {tolerance:e}"
    )]
    PenroseFailure { residuals: [f64; 4], tolerance: f64 },

    /// Two independent computations of the same quantity disagree.
    #[error("consistency check `{check}` failed: {left} vs {right}")]
    Inconsistent {
        check: &'static str,
        left: f64,
        right: f64,
    },
}

impl Error {
    pub(crate) fn validation(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            location: location.into(),
            message: message.into(),
        }
    }
}
