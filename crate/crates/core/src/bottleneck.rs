//! Bottleneck matrices, Perron values and Perron branches.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{sym_eig, Matrix};
use crate::tree::{Branch, Tree, VertexId, WeightClass};

/// Default relative tolerance under which two Perron values count as tied.
pub const DEFAULT_TIE_TOL: f64 = 1e-9;

/// Bottleneck matrix of a branch; blocks follow `branch.members`.
#[derive(Debug, Clone, PartialEq)]
pub struct BottleneckMatrix {
    pub branch: Branch,
    pub data: Matrix,
}

impl BottleneckMatrix {
    /// Scalar bottleneck matrix of the `j`-th induced tree: the `(j, j)`
    /// entry of every block.
    pub fn diagonal_slice(&self, s: usize, j: usize) -> Matrix {
        let idx: Vec<usize> = (0..self.branch.len()).map(|x| x * s + j).collect();
        self.data.select(&idx, &idx)
    }
}

/// Bottleneck matrix of branch `b` at `v`: block `(x, y)` sums `W(e)⁻¹` over
/// the edges shared by the paths `x→v` and `y→v`.
pub fn bottleneck(tree: &Tree, v: VertexId, b: &Branch) -> Result<BottleneckMatrix> {
    tree.check_vertex(v)?;
    if b.base != v {
        return Err(Error::BranchMismatch {
            vertex: v,
            branch_base: b.base,
        });
    }
    Ok(BottleneckMatrix {
        branch: b.clone(),
        data: tree.path_inverse_sums(v, &b.members),
    })
}

pub(crate) fn require_perron_class(tree: &Tree, operation: &'static str) -> Result<()> {
    if tree.class().supports_perron() {
        Ok(())
    } else {
        Err(Error::Class {
            operation,
            class: tree.class().name(),
        })
    }
}

/// Spectral radius of `m - t * (J ⊗ inv_weight)` where `m` is a bottleneck
/// matrix of the tree's class. Positive definite weights give a symmetric
/// matrix; triangular weights reduce to the maximum over the diagonal
/// (induced scalar) slices.
pub(crate) fn shifted_radius(
    class: WeightClass,
    s: usize,
    m: &Matrix,
    inv_weight: &Matrix,
    t: f64,
) -> Result<f64> {
    let k = m.rows() / s;
    match class {
        WeightClass::PositiveDefinite => {
            let mut shifted = m.clone();
            if t != 0.0 {
                let step = inv_weight.scale(t);
                for x in 0..k {
                    for y in 0..k {
                        shifted.add_submatrix(x * s, y * s, &-&step);
                    }
                }
            }
            Ok(sym_eig(&shifted)?.max())
        }
        WeightClass::LowerTriangular | WeightClass::UpperTriangular => {
            let mut best = f64::NEG_INFINITY;
            for j in 0..s {
                let idx: Vec<usize> = (0..k).map(|x| x * s + j).collect();
                let mut slice = m.select(&idx, &idx);
                let step = t * inv_weight[(j, j)];
                if step != 0.0 {
                    for x in 0..k {
                        for y in 0..k {
                            slice[(x, y)] -= step;
                        }
                    }
                }
                best = best.max(sym_eig(&slice)?.max());
            }
            Ok(best)
        }
        WeightClass::GeneralNonsingular => Err(Error::Class {
            operation: "perron_value",
            class: class.name(),
        }),
    }
}

/// Perron value (spectral radius) of the bottleneck matrix of `b` at `v`.
pub fn perron_value(tree: &Tree, v: VertexId, b: &Branch) -> Result<f64> {
    require_perron_class(tree, "perron_value")?;
    let m = bottleneck(tree, v, b)?;
    let s = tree.s();
    shifted_radius(tree.class(), s, &m.data, &Matrix::zeros(s, s), 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronReport {
    pub vertex: VertexId,
    pub branches: Vec<Branch>,
    /// Perron value of each branch, aligned with `branches`.
    pub values: Vec<f64>,
    pub rho_max: f64,
    /// Indices into `branches` of the Perron branches.
    pub perron: Vec<usize>,
    /// `rho_max` minus the largest value of a non-Perron branch, if any.
    pub gap: Option<f64>,
}

impl PerronReport {
    pub fn tie_count(&self) -> usize {
        self.perron.len()
    }

    pub fn perron_branches(&self) -> impl Iterator<Item = &Branch> {
        self.perron.iter().map(|&i| &self.branches[i])
    }

    /// The Perron branch when it is unique.
    pub fn unique_perron_branch(&self) -> Option<&Branch> {
        match self.perron.as_slice() {
            [i] => Some(&self.branches[*i]),
            _ => None,
        }
    }
}

/// Perron values of all branches at `v` and the Perron branches among them.
pub fn perron_report(tree: &Tree, v: VertexId, tie_tol: f64) -> Result<PerronReport> {
    require_perron_class(tree, "perron_report")?;
    if !(tie_tol >= 0.0 && tie_tol.is_finite()) {
        return Err(Error::Parameter(format!(
            "tie tolerance must be finite and >= 0, got {tie_tol}"
        )));
    }
    let branches = tree.branches_at(v)?;
    let values = branches
        .iter()
        .map(|b| perron_value(tree, v, b))
        .collect::<Result<Vec<_>>>()?;
    let rho_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let perron: Vec<usize> = (0..values.len())
        .filter(|&i| rho_max - values[i] <= tie_tol * rho_max)
        .collect();
    let gap = (0..values.len())
        .filter(|i| !perron.contains(i))
        .map(|i| rho_max - values[i])
        .reduce(f64::min);
    Ok(PerronReport {
        vertex: v,
        branches,
        values,
        rho_max,
        perron,
        gap,
    })
}
