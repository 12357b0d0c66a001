//! Characteristic-like vertices and edges, the lower bound `κ(T) ≤ μ(T)` on
//! the first nonzero Laplacian eigenvalue, and the algebraic identities
//! behind it.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::{balance, Balance};
use crate::bottleneck::{perron_report, require_perron_class, shifted_radius, PerronReport};
use crate::error::{Error, Result};
use crate::laplacian::laplacian;
use crate::matrix::{kron, lu_inverse, sym_eig, Matrix};
use crate::scalar_tree::{algebraic_connectivity, induce};
use crate::tree::{EdgeId, Tree, VertexId, WeightClass};

/// Slack allowed when certifying `κ ≤ μ`.
pub const BOUND_TOL: f64 = 1e-9;
/// Eigenvalues below this count as zero when reading `μ` off the spectrum.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CharLike {
    Vertex {
        vertex: VertexId,
    },
    /// `u < v`; `nu` balances the branch at `u` containing `v` against the
    /// branch at `v` containing `u`.
    Edge {
        u: VertexId,
        v: VertexId,
        nu: f64,
    },
}

impl CharLike {
    /// The vertices making up the characteristic-like set.
    pub fn vertices(&self) -> Vec<VertexId> {
        match *self {
            CharLike::Vertex { vertex } => vec![vertex],
            CharLike::Edge { u, v, .. } => vec![u, v],
        }
    }

    /// Same vertex or edge, ignoring `nu`.
    pub fn same_location(&self, other: &CharLike) -> bool {
        self.vertices() == other.vertices()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharLikeResult {
    pub kind: CharLike,
    /// Vertices visited by the walk, starting vertex first.
    pub walk_trace: Vec<VertexId>,
    /// `ρ(M_v)` at a vertex, `f(ν)` at an edge; `κ` is its reciprocal.
    pub value: f64,
    /// Number of tied Perron branches at a vertex result.
    pub tie_count: usize,
}

/// Runs the Perron-branch walk from vertex 0.
pub fn locate(tree: &Tree, tie_tol: f64) -> Result<CharLikeResult> {
    locate_from(tree, 0, tie_tol)
}

/// Walks from `start` towards the unique Perron branch until a vertex with
/// two or more Perron branches is found, or the walk turns back on itself.
pub fn locate_from(tree: &Tree, start: VertexId, tie_tol: f64) -> Result<CharLikeResult> {
    require_perron_class(tree, "locate")?;
    tree.check_vertex(start)?;
    if tree.n() == 2 {
        let sol = solve_nu(tree, 0, 1)?;
        return Ok(CharLikeResult {
            kind: CharLike::Edge {
                u: 0,
                v: 1,
                nu: sol.nu,
            },
            walk_trace: vec![start],
            value: sol.value,
            tie_count: 1,
        });
    }
    let mut trace = vec![start];
    let mut previous = None;
    let mut current = start;
    while trace.len() <= tree.n() + 1 {
        let report = perron_report(tree, current, tie_tol)?;
        let next = match report.unique_perron_branch() {
            Some(b) => b.root,
            None => {
                return Ok(CharLikeResult {
                    kind: CharLike::Vertex { vertex: current },
                    walk_trace: trace,
                    value: report.rho_max,
                    tie_count: report.tie_count(),
                })
            }
        };
        if previous == Some(next) {
            let (u, v) = (current.min(next), current.max(next));
            let sol = solve_nu(tree, u, v)?;
            return Ok(CharLikeResult {
                kind: CharLike::Edge { u, v, nu: sol.nu },
                walk_trace: trace,
                value: sol.value,
                tie_count: 1,
            });
        }
        previous = Some(current);
        current = next;
        trace.push(current);
    }
    Err(Error::NonTermination { trace })
}

fn edge_id(tree: &Tree, u: VertexId, v: VertexId) -> Result<EdgeId> {
    tree.check_vertex(u)?;
    tree.check_vertex(v)?;
    tree.edge_between(u, v).ok_or(Error::NotAdjacent(u, v))
}

/// Bottleneck matrix at `u` of the branch containing its neighbour `v`,
/// with `v` as the first block.
fn bottleneck_toward(tree: &Tree, u: VertexId, v: VertexId) -> Result<Matrix> {
    let b = tree.branch_containing(u, v)?;
    debug_assert_eq!(b.members[0], v);
    Ok(tree.path_inverse_sums(u, &b.members))
}

/// Crossing point of `f(t) = ρ(M_u(v) - t J⊗W⁻¹)` and
/// `g(t) = ρ(M_v(u) - (1-t) J⊗W⁻¹)` for the edge `uv`.
pub fn edge_balance(tree: &Tree, u: VertexId, v: VertexId) -> Result<Balance> {
    require_perron_class(tree, "solve_nu")?;
    let e = edge_id(tree, u, v)?;
    let (class, s) = (tree.class(), tree.s());
    let inv = tree.weight_inverse(e);
    let toward_v = bottleneck_toward(tree, u, v)?;
    let toward_u = bottleneck_toward(tree, v, u)?;
    balance(
        |t| shifted_radius(class, s, &toward_v, inv, t),
        |t| shifted_radius(class, s, &toward_u, inv, 1.0 - t),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuSolution {
    pub nu: f64,
    /// `f(ν)`.
    pub value: f64,
    /// `|f(ν) - g(ν)|`.
    pub residual: f64,
}

pub fn solve_nu(tree: &Tree, u: VertexId, v: VertexId) -> Result<NuSolution> {
    let b = edge_balance(tree, u, v)?;
    Ok(NuSolution {
        nu: b.t,
        value: b.f,
        residual: (b.f - b.g).abs(),
    })
}

/// `f` and `g` of [`edge_balance`] evaluated at `t`.
pub fn edge_functions(tree: &Tree, u: VertexId, v: VertexId, t: f64) -> Result<(f64, f64)> {
    require_perron_class(tree, "edge_functions")?;
    let e = edge_id(tree, u, v)?;
    let (class, s) = (tree.class(), tree.s());
    let inv = tree.weight_inverse(e);
    let f = shifted_radius(class, s, &bottleneck_toward(tree, u, v)?, inv, t)?;
    let g = shifted_radius(class, s, &bottleneck_toward(tree, v, u)?, inv, 1.0 - t)?;
    Ok((f, g))
}

pub fn kappa(tree: &Tree, tie_tol: f64) -> Result<f64> {
    Ok(1.0 / locate(tree, tie_tol)?.value)
}

/// First nonzero Laplacian eigenvalue: `λ_{s+1}` for positive definite
/// weights, the smallest induced algebraic connectivity for triangular ones.
pub fn mu(tree: &Tree) -> Result<f64> {
    require_perron_class(tree, "mu")?;
    let value = if tree.class() == WeightClass::PositiveDefinite {
        let spectrum = sym_eig(&laplacian(tree).data)?;
        let zeros = spectrum.lambda(tree.s());
        if zeros.abs() >= RANK_TOL {
            return Err(Error::Inconsistent {
                check: "Laplacian null space",
                left: zeros,
                right: 0.0,
            });
        }
        spectrum.lambda(tree.s() + 1)
    } else {
        induce(tree)?
            .iter()
            .map(algebraic_connectivity)
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    };
    if value < RANK_TOL {
        return Err(Error::RankAnomaly { value });
    }
    Ok(value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub charlike: CharLikeResult,
    pub kappa: f64,
    pub mu: f64,
    pub bound_holds: bool,
    /// Perron report of every vertex, indexed by vertex id.
    pub per_vertex: Vec<PerronReport>,
}

pub fn bound_report(tree: &Tree, tie_tol: f64) -> Result<SpectralReport> {
    bound_report_from(tree, 0, tie_tol)
}

pub fn bound_report_from(tree: &Tree, start: VertexId, tie_tol: f64) -> Result<SpectralReport> {
    let charlike = locate_from(tree, start, tie_tol)?;
    let kappa = 1.0 / charlike.value;
    let mu = mu(tree)?;
    let per_vertex = (0..tree.n())
        .into_par_iter()
        .map(|x| perron_report(tree, x, tie_tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralReport {
        charlike,
        kappa,
        mu,
        bound_holds: kappa <= mu + BOUND_TOL,
        per_vertex,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Result2Entry {
    pub vertex: VertexId,
    pub perron_count: usize,
    /// The unique Perron branch contains the whole characteristic-like set.
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Result2Report {
    pub entries: Vec<Result2Entry>,
}

impl Result2Report {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

/// Checks that every vertex outside the characteristic-like set has a single
/// Perron branch and that it contains the set.
pub fn verify_result2(tree: &Tree, result: &CharLikeResult, tie_tol: f64) -> Result<Result2Report> {
    let center = result.kind.vertices();
    let entries = (0..tree.n())
        .filter(|x| !center.contains(x))
        .map(|x| {
            let report = perron_report(tree, x, tie_tol)?;
            let pass = report
                .unique_perron_branch()
                .is_some_and(|b| center.iter().all(|&c| b.contains(c)));
            Ok(Result2Entry {
                vertex: x,
                perron_count: report.tie_count(),
                pass,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Result2Report { entries })
}

/// Vertices of the smallest subtree containing all of `vertices`.
pub fn spanning_subtree(tree: &Tree, vertices: &[VertexId]) -> Result<BTreeSet<VertexId>> {
    let mut out = BTreeSet::new();
    let Some((&first, rest)) = vertices.split_first() else {
        return Ok(out);
    };
    out.insert(first);
    for &x in rest {
        out.extend(tree.vertex_path(first, x)?);
    }
    Ok(out)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// `M_u(v)⁻¹ + e_v e_vᵀ ⊗ (α/(1-α)) W`, the claimed inverse of
/// `M_u(v) - α J⊗W⁻¹`, with the branch at `u` containing `v` in BFS order.
fn perturbed_inverse(
    tree: &Tree,
    u: VertexId,
    v: VertexId,
    e: EdgeId,
    alpha: f64,
) -> Result<(Matrix, Matrix)> {
    let s = tree.s();
    let m = bottleneck_toward(tree, u, v)?;
    let k = m.rows() / s;
    let (mut rhs, _) = lu_inverse(&m)?;
    rhs.add_submatrix(0, 0, &tree.weight(e).scale(alpha / (1.0 - alpha)));
    let shifted = &m - &kron(&Matrix::ones(k, k), &tree.weight_inverse(e).scale(alpha));
    Ok((shifted, rhs))
}

/// `‖(M_u(v) - α J⊗W⁻¹)·(M_u(v)⁻¹ + e_v e_vᵀ ⊗ (α/(1-α))W) - I‖_max`.
pub fn rank_one_grounding_identity(
    tree: &Tree,
    u: VertexId,
    v: VertexId,
    alpha: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let e = edge_id(tree, u, v)?;
    let (shifted, rhs) = perturbed_inverse(tree, u, v, e, alpha)?;
    let product = shifted.matmul(&rhs)?;
    Ok(product.max_abs_diff(&Matrix::identity(product.rows())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitIdentity {
    /// `‖L + E⊗W - blockdiag(...)‖_max`.
    pub residual: f64,
    /// Smallest eigenvalue of `L + E⊗W`, for positive definite weights.
    pub min_eigenvalue: Option<f64>,
}

/// Compares `L + E⊗W(e)` with the block-diagonal matrix assembled from the
/// closed-form inverses of the two shifted bottleneck matrices across `uv`.
pub fn split_identity_check(
    tree: &Tree,
    u: VertexId,
    v: VertexId,
    alpha: f64,
) -> Result<SplitIdentity> {
    check_alpha(alpha)?;
    let e = edge_id(tree, u, v)?;
    let (n, s) = (tree.n(), tree.s());
    let w = tree.weight(e);

    let mut perturbed = laplacian(tree).data;
    let diag_v = w.scale(alpha / (1.0 - alpha));
    let diag_u = w.scale((1.0 - alpha) / alpha);
    perturbed.add_submatrix(v * s, v * s, &diag_v);
    perturbed.add_submatrix(u * s, u * s, &diag_u);
    perturbed.add_submatrix(u * s, v * s, w);
    perturbed.add_submatrix(v * s, u * s, w);

    let mut assembled = Matrix::zeros(n * s, n * s);
    for (base, far, side_alpha) in [(u, v, alpha), (v, u, 1.0 - alpha)] {
        let members = tree.branch_containing(base, far)?.members;
        let (_, block) = perturbed_inverse(tree, base, far, e, side_alpha)?;
        for (a, &x) in members.iter().enumerate() {
            for (b, &y) in members.iter().enumerate() {
                assembled.set_submatrix(x * s, y * s, &block.submatrix(a * s, b * s, s, s));
            }
        }
    }
    let residual = perturbed.max_abs_diff(&assembled);
    let min_eigenvalue = if tree.class() == WeightClass::PositiveDefinite {
        Some(sym_eig(&perturbed)?.min())
    } else {
        None
    };
    Ok(SplitIdentity {
        residual,
        min_eigenvalue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bottleneck::DEFAULT_TIE_TOL;
    use crate::tree::parse_tree;

    fn fixture(name: &str) -> Tree {
        let path = format!("{}/../../fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"));
        parse_tree(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    #[test]
    fn fig2a_edge() {
        let t = fixture("FIG2A");
        let r = locate(&t, DEFAULT_TIE_TOL).unwrap();
        match r.kind {
            CharLike::Edge { u, v, nu } => {
                assert_eq!((u, v), (2, 3));
                assert!((nu - 0.5).abs() < 1e-6);
            }
            other => panic!("expected edge, got {other:?}"),
        }
        assert!((r.value - 1.104741).abs() < 1e-4);
        let report = bound_report(&t, DEFAULT_TIE_TOL).unwrap();
        assert!((report.mu - 1.0).abs() < 1e-8);
        assert!((report.kappa - 0.905189).abs() < 1e-4);
        assert!(report.bound_holds);
        assert!(verify_result2(&t, &r, DEFAULT_TIE_TOL).unwrap().all_pass());
    }

    #[test]
    fn path5_vertex() {
        let t = fixture("PATH5");
        let r = locate(&t, DEFAULT_TIE_TOL).unwrap();
        assert_eq!(r.kind, CharLike::Vertex { vertex: 2 });
        assert_eq!(r.walk_trace, vec![0, 1, 2]);
        assert!((r.value - 2.618034).abs() < 1e-4);
        assert!((kappa(&t, DEFAULT_TIE_TOL).unwrap() - 0.381966).abs() < 1e-4);
        assert!((mu(&t).unwrap() - 0.58963).abs() < 1e-4);
        let r2 = verify_result2(&t, &r, DEFAULT_TIE_TOL).unwrap();
        assert_eq!(r2.entries.len(), 4);
        assert!(r2.all_pass());
    }

    #[test]
    fn k2s_equality_case() {
        let t = fixture("K2S");
        let sol = solve_nu(&t, 0, 1).unwrap();
        assert_eq!((sol.nu, sol.value), (0.5, 0.5));
        let report = bound_report(&t, DEFAULT_TIE_TOL).unwrap();
        assert!((report.kappa - 2.0).abs() < 1e-12);
        assert!((report.mu - 2.0).abs() < 1e-12);
        assert!(report.bound_holds);
        let r = locate(&t, DEFAULT_TIE_TOL).unwrap();
        assert!(verify_result2(&t, &r, DEFAULT_TIE_TOL)
            .unwrap()
            .entries
            .is_empty());
    }

    #[test]
    fn symmetric_star_is_vertex() {
        let w = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let edges = (1..=4).map(|x| (0, x, w.clone()));
        let t = Tree::new(WeightClass::PositiveDefinite, 5, edges).unwrap();
        let r = locate_from(&t, 3, DEFAULT_TIE_TOL).unwrap();
        assert_eq!(r.kind, CharLike::Vertex { vertex: 0 });
        assert_eq!(r.tie_count, 4);
    }

    #[test]
    fn mirror_symmetric_tree_balances_at_half() {
        let w1 = Matrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let w2 = Matrix::diag(&[1.0, 4.0]);
        let t = Tree::new(
            WeightClass::PositiveDefinite,
            4,
            [(0, 1, w1.clone()), (1, 2, w2), (2, 3, w1)],
        )
        .unwrap();
        let r = locate(&t, DEFAULT_TIE_TOL).unwrap();
        match r.kind {
            CharLike::Edge { u: 1, v: 2, nu } => assert!((nu - 0.5).abs() < 1e-9),
            other => panic!("expected middle edge, got {other:?}"),
        }
    }

    #[test]
    fn identities_on_fixtures() {
        let k = fixture("K2S");
        assert!(rank_one_grounding_identity(&k, 0, 1, 0.5).unwrap() < 1e-12);
        assert!(split_identity_check(&k, 0, 1, 0.5).unwrap().residual < 1e-12);

        let t = fixture("FIG2A");
        for alpha in [0.25, 0.5, 0.75] {
            assert!(rank_one_grounding_identity(&t, 2, 3, alpha).unwrap() < 1e-8);
            assert!(rank_one_grounding_identity(&t, 3, 2, alpha).unwrap() < 1e-8);
        }
        let split = split_identity_check(&t, 2, 3, 0.5).unwrap();
        assert!(split.residual < 1e-8);
        let kappa = kappa(&t, DEFAULT_TIE_TOL).unwrap();
        assert!((split.min_eigenvalue.unwrap() - kappa).abs() < 1e-6);

        assert!(matches!(
            rank_one_grounding_identity(&t, 0, 5, 0.5),
            Err(Error::NotAdjacent(0, 5))
        ));
        assert!(matches!(
            split_identity_check(&t, 2, 3, 1.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn triangular_fixture() {
        let t = fixture("FIGA1");
        let report = bound_report(&t, DEFAULT_TIE_TOL).unwrap();
        assert!(report.bound_holds);
        let r = &report.charlike;
        assert!(verify_result2(&t, r, DEFAULT_TIE_TOL).unwrap().all_pass());
        for start in 0..t.n() {
            let other = locate_from(&t, start, DEFAULT_TIE_TOL).unwrap();
            assert!(other.kind.same_location(&r.kind));
        }
    }

    #[test]
    fn wrong_edge_has_no_bracket() {
        let t = fixture("PATH5");
        assert!(matches!(solve_nu(&t, 0, 1), Err(Error::Bracket { .. })));
    }

    #[test]
    fn spanning_subtree_of_leaves() {
        let t = fixture("FIG2A");
        let span = spanning_subtree(&t, &[0, 5]).unwrap();
        assert_eq!(span.into_iter().collect::<Vec<_>>(), vec![0, 2, 3, 5]);
    }
}
