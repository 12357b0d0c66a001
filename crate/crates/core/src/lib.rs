//! Spectral analysis of trees whose edges carry square matrix weights.
//!
//! The crate builds block Laplacians, grounded inverses and bottleneck
//! matrices in closed form, locates the characteristic-like vertex or edge
//! through Perron branches, bounds the first nonzero Laplacian eigenvalue
//! from below, and assembles the Moore-Penrose inverse of the Laplacian.

pub mod balance;
pub mod bottleneck;
pub mod charlike;
pub mod error;
pub mod harness;
pub mod laplacian;
pub mod matrix;
pub mod pseudoinverse;
pub mod random;
pub mod report;
pub mod scalar_tree;
pub mod tree;

pub use bottleneck::{
    bottleneck, perron_report, perron_value, BottleneckMatrix, PerronReport, DEFAULT_TIE_TOL,
};
pub use charlike::{
    bound_report, kappa, locate, locate_from, mu, rank_one_grounding_identity, solve_nu,
    split_identity_check, verify_result2, CharLike, CharLikeResult, SpectralReport,
};
pub use error::{Error, Result};
pub use laplacian::{
    grounded, grounded_det, grounded_inverse_analytic, incidence, laplacian, path_matrix,
    BlockMatrix,
};
pub use matrix::{kron, lu_inverse, sqrt_pd, sym_eig, vec_permutation, Matrix, Spectrum};
pub use pseudoinverse::{m_inverse_check, pinv, projector_check, PinvResult};
pub use report::ReportDocument;
pub use scalar_tree::{
    algebraic_connectivity, induce, scalar_characteristic, triangular_equivalence_check,
    ScalarCharResult, ScalarKind, ScalarTree,
};
pub use tree::{parse_tree, Branch, EdgeId, Tree, VertexId, WeightClass};
