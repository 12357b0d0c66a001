//! Trees with positive scalar edge weights, and the induced scalar trees of a
//! triangular-weight tree.

use serde::{Deserialize, Serialize};

use crate::bottleneck::{perron_report, PerronReport, DEFAULT_TIE_TOL};
use crate::charlike::edge_balance;
use crate::error::{Error, Result};
use crate::laplacian::laplacian;
use crate::matrix::{regroup_blocks, sym_eig, vec_permutation, Matrix};
use crate::tree::{Tree, VertexId, WeightClass};

/// Maximum disagreement tolerated between the Perron formula and the second
/// smallest Laplacian eigenvalue, relative to `max(1, λ₂)`.
pub const CONNECTIVITY_TOL: f64 = 1e-6;

/// A tree with one positive weight per edge. Stored as a `1 x 1` positive
/// definite matrix-weighted tree so every matrix routine applies unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTree {
    pub tree: Tree,
    /// Diagonal index this tree was induced from, if any.
    pub origin: Option<usize>,
}

impl ScalarTree {
    /// Wraps a tree with `s = 1` and positive weights.
    pub fn new(tree: Tree) -> Result<Self> {
        if tree.s() != 1 {
            return Err(Error::Dimension(format!(
                "scalar tree needs s = 1, got s = {}",
                tree.s()
            )));
        }
        let weights = tree.edges().iter().map(|e| (e.u, e.v, e.weight.clone()));
        let tree = Tree::with_labels(
            WeightClass::PositiveDefinite,
            tree.labels().to_vec(),
            weights,
        )?;
        Ok(Self { tree, origin: None })
    }

    pub fn from_weights(
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (VertexId, VertexId, f64)>,
    ) -> Result<Self> {
        let edges = edges
            .into_iter()
            .map(|(u, v, w)| (u, v, Matrix::diag(&[w])));
        let tree = Tree::with_labels(WeightClass::PositiveDefinite, labels, edges)?;
        Ok(Self { tree, origin: None })
    }

    pub fn weights(&self) -> Vec<f64> {
        self.tree.edges().iter().map(|e| e.weight[(0, 0)]).collect()
    }
}

/// The `s` scalar trees carrying the diagonal entries of a triangular tree's
/// weights, in diagonal order.
pub fn induce(tree: &Tree) -> Result<Vec<ScalarTree>> {
    if !tree.class().is_triangular() {
        return Err(Error::Class {
            operation: "induce",
            class: tree.class().name(),
        });
    }
    (0..tree.s())
        .map(|j| {
            let st = ScalarTree::from_weights(
                tree.labels().to_vec(),
                tree.edges().iter().map(|e| (e.u, e.v, e.weight[(j, j)])),
            )?;
            Ok(ScalarTree {
                origin: Some(j),
                ..st
            })
        })
        .collect()
}

/// Second smallest eigenvalue of the scalar Laplacian.
pub fn algebraic_connectivity(st: &ScalarTree) -> Result<f64> {
    Ok(sym_eig(&laplacian(&st.tree).data)?.lambda(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScalarKind {
    Vertex {
        vertex: VertexId,
    },
    Edge {
        u: VertexId,
        v: VertexId,
        gamma: f64,
    },
}

impl ScalarKind {
    pub fn vertices(&self) -> Vec<VertexId> {
        match *self {
            ScalarKind::Vertex { vertex } => vec![vertex],
            ScalarKind::Edge { u, v, .. } => vec![u, v],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarCharResult {
    pub kind: ScalarKind,
    /// Algebraic connectivity from the Perron values at the characteristic
    /// vertex or edge.
    pub alg_connectivity: f64,
    /// Algebraic connectivity from the Laplacian spectrum.
    pub lambda2: f64,
}

pub fn scalar_characteristic(st: &ScalarTree) -> Result<ScalarCharResult> {
    scalar_characteristic_with(st, DEFAULT_TIE_TOL)
}

/// Characteristic vertex or edge found by inspecting every vertex (no walk),
/// with the algebraic connectivity computed both ways.
pub fn scalar_characteristic_with(st: &ScalarTree, tie_tol: f64) -> Result<ScalarCharResult> {
    let tree = &st.tree;
    let reports = (0..tree.n())
        .map(|x| perron_report(tree, x, tie_tol))
        .collect::<Result<Vec<PerronReport>>>()?;
    let (kind, rho) = if let Some(r) = reports.iter().find(|r| r.tie_count() >= 2) {
        (ScalarKind::Vertex { vertex: r.vertex }, r.rho_max)
    } else {
        let pointing = |x: VertexId| reports[x].unique_perron_branch().map(|b| b.root);
        let (u, v) = (0..tree.n())
            .find_map(|x| {
                let y = pointing(x)?;
                (pointing(y) == Some(x)).then_some((x.min(y), x.max(y)))
            })
            .ok_or(Error::NonTermination { trace: Vec::new() })?;
        let b = edge_balance(tree, u, v)?;
        (ScalarKind::Edge { u, v, gamma: b.t }, b.f)
    };
    let alg_connectivity = 1.0 / rho;
    let lambda2 = algebraic_connectivity(st)?;
    if (alg_connectivity - lambda2).abs() > CONNECTIVITY_TOL * lambda2.max(1.0) {
        return Err(Error::Inconsistent {
            check: "algebraic connectivity",
            left: alg_connectivity,
            right: lambda2,
        });
    }
    Ok(ScalarCharResult {
        kind,
        alg_connectivity,
        lambda2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceCheck {
    /// `max |L - P X̃ Pᵀ|` with `X̃` the regrouped Laplacian.
    pub residual: f64,
    /// Each diagonal block of `X̃` equals the induced scalar Laplacian exactly.
    pub diagonal_blocks_match: bool,
    /// The blocks of `X̃` on the zero side of the triangle are exactly zero.
    pub block_triangular: bool,
}

impl EquivalenceCheck {
    pub fn passed(&self) -> bool {
        self.residual == 0.0 && self.diagonal_blocks_match && self.block_triangular
    }
}

/// Regroups the Laplacian of a triangular tree by diagonal index and checks
/// that the result is a block-triangular permutation of the original whose
/// diagonal blocks are the induced scalar Laplacians.
pub fn triangular_equivalence_check(tree: &Tree) -> Result<EquivalenceCheck> {
    let induced = induce(tree)?;
    let (n, s) = (tree.n(), tree.s());
    let l = laplacian(tree).data;
    let regrouped = regroup_blocks(&l, n, s);
    let p = vec_permutation(n, s);
    let back = p.matmul(&regrouped)?.matmul(&p.transpose())?;
    let residual = l.max_abs_diff(&back);
    let diagonal_blocks_match = induced
        .iter()
        .enumerate()
        .all(|(j, st)| regrouped.submatrix(j * n, j * n, n, n) == laplacian(&st.tree).data);
    let lower = tree.class() == WeightClass::LowerTriangular;
    let block_triangular = (0..s).all(|a| {
        (0..s).all(|b| {
            let zero_side = if lower { b > a } else { a > b };
            !zero_side || regrouped.submatrix(a * n, b * n, n, n).max_abs() == 0.0
        })
    });
    Ok(EquivalenceCheck {
        residual,
        diagonal_blocks_match,
        block_triangular,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_tree;

    fn fixture(name: &str) -> Tree {
        let path = format!("{}/../../fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"));
        parse_tree(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    fn relabel(tree: &Tree, class: WeightClass) -> Tree {
        let edges = tree.edges().iter().map(|e| (e.u, e.v, e.weight.clone()));
        Tree::with_labels(class, tree.labels().to_vec(), edges).unwrap()
    }

    fn unit(n: usize, edges: &[(usize, usize)]) -> ScalarTree {
        let labels = (0..n).map(|i| i.to_string()).collect();
        ScalarTree::from_weights(labels, edges.iter().map(|&(u, v)| (u, v, 1.0))).unwrap()
    }

    #[test]
    fn figa1_induced_weights() {
        let t = fixture("FIGA1");
        let induced = induce(&t).unwrap();
        assert_eq!(induced.len(), 3);
        assert_eq!(induced[0].weights(), vec![3.0, 9.0, 1.0, 11.0, 15.0, 7.0]);
        assert_eq!(induced[1].weights(), vec![2.0, 4.0, 12.0, 1.0, 6.0, 8.0]);
        assert_eq!(induced[2].weights(), vec![5.0, 17.0, 4.0, 3.0, 9.0, 6.0]);
        assert_eq!(induced[2].origin, Some(2));
    }

    #[test]
    fn fig2a_as_lower_triangular() {
        let t = relabel(&fixture("FIG2A"), WeightClass::LowerTriangular);
        let induced = induce(&t).unwrap();
        assert_eq!(induced[0].weights(), vec![1.0, 1.0, 10.0, 10.0, 10.0]);
        assert_eq!(induced[1].weights(), vec![10.0, 10.0, 10.0, 1.0, 1.0]);
        let c = scalar_characteristic(&induced[0]).unwrap();
        assert_eq!(c.kind, ScalarKind::Vertex { vertex: 2 });
        assert!((c.alg_connectivity - 1.0).abs() < 1e-9);
        assert!(matches!(
            induce(&fixture("FIG2A")),
            Err(Error::Class { .. })
        ));
    }

    #[test]
    fn scalar_triangular_induces_itself() {
        let w = |x: f64| Matrix::diag(&[x]);
        let t = Tree::new(
            WeightClass::LowerTriangular,
            3,
            [(0, 1, w(2.0)), (1, 2, w(3.0))],
        )
        .unwrap();
        let induced = induce(&t).unwrap();
        assert_eq!(induced.len(), 1);
        assert_eq!(induced[0].weights(), vec![2.0, 3.0]);
        assert_eq!(laplacian(&induced[0].tree), laplacian(&t));
    }

    #[test]
    fn unit_star_and_path() {
        let star = unit(4, &[(0, 1), (0, 2), (0, 3)]);
        let c = scalar_characteristic(&star).unwrap();
        assert_eq!(c.kind, ScalarKind::Vertex { vertex: 0 });
        assert!((c.lambda2 - 1.0).abs() < 1e-12);

        let k2 = unit(2, &[(0, 1)]);
        let c = scalar_characteristic(&k2).unwrap();
        assert_eq!(
            c.kind,
            ScalarKind::Edge {
                u: 0,
                v: 1,
                gamma: 0.5
            }
        );
        assert!((c.alg_connectivity - 2.0).abs() < 1e-12);
        assert!((algebraic_connectivity(&k2).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn path5_second_induced_connectivity() {
        let t = relabel(&fixture("PATH5"), WeightClass::UpperTriangular);
        let induced = induce(&t).unwrap();
        let mu = algebraic_connectivity(&induced[1]).unwrap();
        assert!((mu - 0.58963).abs() < 1e-4);
    }

    #[test]
    fn figa1_equivalence_is_exact() {
        let check = triangular_equivalence_check(&fixture("FIGA1")).unwrap();
        assert_eq!(check.residual, 0.0);
        assert!(check.passed());
        let upper = relabel(&fixture("PATH5"), WeightClass::UpperTriangular);
        assert!(triangular_equivalence_check(&upper).unwrap().passed());
    }
}
