//! Block Laplacians, grounded Laplacians and their closed-form inverses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{lu_inverse, sqrt_pd, Matrix};
use crate::tree::{EdgeId, Tree, VertexId, WeightClass};

/// A dense matrix partitioned into `s x s` blocks.
///
/// Block rows and columns carry an index (usually a vertex id, for incidence
/// and path matrices one side is indexed by edge ids).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMatrix {
    pub s: usize,
    pub row_index: Vec<usize>,
    pub col_index: Vec<usize>,
    pub data: Matrix,
}

impl BlockMatrix {
    pub fn new(s: usize, row_index: Vec<usize>, col_index: Vec<usize>, data: Matrix) -> Self {
        debug_assert_eq!(data.rows(), row_index.len() * s);
        debug_assert_eq!(data.cols(), col_index.len() * s);
        Self {
            s,
            row_index,
            col_index,
            data,
        }
    }

    fn row_position(&self, x: usize) -> Result<usize> {
        self.row_index
            .iter()
            .position(|&r| r == x)
            .ok_or(Error::UnknownVertex(x))
    }

    fn col_position(&self, y: usize) -> Result<usize> {
        self.col_index
            .iter()
            .position(|&c| c == y)
            .ok_or(Error::UnknownVertex(y))
    }

    /// The `s x s` block at block-row index `x` and block-column index `y`.
    pub fn block(&self, x: usize, y: usize) -> Result<Matrix> {
        let (i, j) = (self.row_position(x)?, self.col_position(y)?);
        Ok(self.block_at(i, j))
    }

    /// Block by position rather than by index label.
    pub fn block_at(&self, i: usize, j: usize) -> Matrix {
        self.data.submatrix(i * self.s, j * self.s, self.s, self.s)
    }

    /// Sub-block-matrix on the given row and column labels, in that order.
    pub fn select_blocks(&self, rows: &[usize], cols: &[usize]) -> Result<BlockMatrix> {
        let ri = rows
            .iter()
            .map(|&x| self.row_position(x))
            .collect::<Result<Vec<_>>>()?;
        let ci = cols
            .iter()
            .map(|&y| self.col_position(y))
            .collect::<Result<Vec<_>>>()?;
        let data = self.data.select(&expand(&ri, self.s), &expand(&ci, self.s));
        Ok(BlockMatrix::new(self.s, rows.to_vec(), cols.to_vec(), data))
    }

    pub fn block_rows(&self) -> usize {
        self.row_index.len()
    }

    pub fn block_cols(&self) -> usize {
        self.col_index.len()
    }

    /// Largest max-abs entry over the block-row sums and block-column sums.
    pub fn max_block_sum(&self) -> f64 {
        let s = self.s;
        let mut worst: f64 = 0.0;
        for i in 0..self.block_rows() {
            let mut sum = Matrix::zeros(s, s);
            for j in 0..self.block_cols() {
                sum.add_submatrix(0, 0, &self.block_at(i, j));
            }
            worst = worst.max(sum.max_abs());
        }
        for j in 0..self.block_cols() {
            let mut sum = Matrix::zeros(s, s);
            for i in 0..self.block_rows() {
                sum.add_submatrix(0, 0, &self.block_at(i, j));
            }
            worst = worst.max(sum.max_abs());
        }
        worst
    }
}

/// Scalar indices covered by the listed block positions.
pub(crate) fn expand(blocks: &[usize], s: usize) -> Vec<usize> {
    blocks.iter().flat_map(|&b| (b * s)..(b * s + s)).collect()
}

/// Vertices other than `v`, grouped by branch at `v` (branches by ascending
/// root id, members in BFS order from the root).
pub fn branch_order(tree: &Tree, v: VertexId) -> Result<Vec<VertexId>> {
    Ok(tree
        .branches_at(v)?
        .into_iter()
        .flat_map(|b| b.members)
        .collect())
}

/// The `ns x ns` block Laplacian.
pub fn laplacian(tree: &Tree) -> BlockMatrix {
    let (n, s) = (tree.n(), tree.s());
    let mut data = Matrix::zeros(n * s, n * s);
    for e in tree.edges() {
        let neg = -&e.weight;
        data.add_submatrix(e.u * s, e.u * s, &e.weight);
        data.add_submatrix(e.v * s, e.v * s, &e.weight);
        data.add_submatrix(e.u * s, e.v * s, &neg);
        data.add_submatrix(e.v * s, e.u * s, &neg);
    }
    let idx: Vec<usize> = (0..n).collect();
    BlockMatrix::new(s, idx.clone(), idx, data)
}

/// The Laplacian with the block row and column of `v` deleted, in branch order.
pub fn grounded(tree: &Tree, v: VertexId) -> Result<BlockMatrix> {
    let order = branch_order(tree, v)?;
    laplacian(tree).select_blocks(&order, &order)
}

/// Determinant of the grounded Laplacian by LU.
pub fn grounded_det(tree: &Tree, v: VertexId) -> Result<f64> {
    let g = grounded(tree, v)?;
    lu_inverse(&g.data).map(|(_, det)| det)
}

/// Product of the edge weight determinants.
pub fn weight_det_product(tree: &Tree) -> f64 {
    tree.edges()
        .iter()
        .map(|e| match tree.class() {
            WeightClass::LowerTriangular | WeightClass::UpperTriangular => {
                (0..tree.s()).map(|i| e.weight[(i, i)]).product()
            }
            _ => lu_inverse(&e.weight).map(|(_, d)| d).unwrap_or(0.0),
        })
        .product()
}

/// Inverse of the grounded Laplacian from path intersections: block `(x, y)`
/// is the sum of `W(e)⁻¹` over edges on both `x→v` and `y→v`.
pub fn grounded_inverse_analytic(tree: &Tree, v: VertexId) -> Result<BlockMatrix> {
    let order = branch_order(tree, v)?;
    let data = tree.path_inverse_sums(v, &order);
    Ok(BlockMatrix::new(tree.s(), order.clone(), order, data))
}

fn require_pd(tree: &Tree, operation: &'static str) -> Result<()> {
    if tree.class() == WeightClass::PositiveDefinite {
        Ok(())
    } else {
        Err(Error::Class {
            operation,
            class: tree.class().name(),
        })
    }
}

/// Vertex-edge incidence matrix with blocks `±√W(e)`; each edge is oriented
/// from its lower vertex id to the higher one.
pub fn incidence(tree: &Tree) -> Result<BlockMatrix> {
    require_pd(tree, "incidence")?;
    let (n, s, m) = (tree.n(), tree.s(), tree.edges().len());
    let mut data = Matrix::zeros(n * s, m * s);
    for (id, e) in tree.edges().iter().enumerate() {
        let root = sqrt_pd(&e.weight)?;
        let (lo, hi) = (e.u.min(e.v), e.u.max(e.v));
        data.set_submatrix(lo * s, id * s, &root);
        data.set_submatrix(hi * s, id * s, &-&root);
    }
    Ok(BlockMatrix::new(
        s,
        (0..n).collect(),
        (0..m).collect(),
        data,
    ))
}

/// Incidence matrix with the block row of `v` removed (rows ascending).
pub fn incidence_grounded(tree: &Tree, v: VertexId) -> Result<BlockMatrix> {
    tree.check_vertex(v)?;
    let q = incidence(tree)?;
    let rows: Vec<VertexId> = (0..tree.n()).filter(|&x| x != v).collect();
    let cols: Vec<EdgeId> = (0..tree.edges().len()).collect();
    q.select_blocks(&rows, &cols)
}

/// Path matrix at `v`: block rows are edges, block columns the vertices other
/// than `v` (ascending). Column `u` carries `±(√W(e))⁻¹` on the edges of the
/// `u→v` path, signed by the orientation used in [`incidence`]. It is the
/// inverse of [`incidence_grounded`].
pub fn path_matrix(tree: &Tree, v: VertexId) -> Result<BlockMatrix> {
    require_pd(tree, "path_matrix")?;
    tree.check_vertex(v)?;
    let (s, m) = (tree.s(), tree.edges().len());
    let inv_roots = (0..m)
        .map(|e| sqrt_pd(tree.weight_inverse(e)))
        .collect::<Result<Vec<_>>>()?;
    let cols: Vec<VertexId> = (0..tree.n()).filter(|&x| x != v).collect();
    let mut data = Matrix::zeros(m * s, cols.len() * s);
    for (c, &u) in cols.iter().enumerate() {
        let walk = tree.vertex_path(u, v)?;
        for pair in walk.windows(2) {
            let (far, near) = (pair[0], pair[1]);
            let e = tree
                .edge_between(far, near)
                .expect("consecutive path vertices are adjacent");
            let block = if far < near {
                inv_roots[e].clone()
            } else {
                -&inv_roots[e]
            };
            data.set_submatrix(e * s, c * s, &block);
        }
    }
    Ok(BlockMatrix::new(s, (0..m).collect(), cols, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{lu_inverse, Matrix};
    use crate::tree::parse_tree;

    fn fixture(name: &str) -> Tree {
        let path = format!("{}/../../fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"));
        parse_tree(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    #[test]
    fn k2s_laplacian() {
        let t = fixture("K2S");
        let l = laplacian(&t);
        let i = Matrix::identity(2);
        assert_eq!(l.block(0, 0).unwrap(), i);
        assert_eq!(l.block(0, 1).unwrap(), -&i);
        assert_eq!(l.max_block_sum(), 0.0);
        assert_eq!(grounded(&t, 0).unwrap().data, i);
        assert_eq!(grounded_det(&t, 0).unwrap(), 1.0);
        assert_eq!(grounded_inverse_analytic(&t, 0).unwrap().data, i);
    }

    #[test]
    fn fig2a_laplacian_blocks() {
        let t = fixture("FIG2A");
        let l = laplacian(&t);
        assert_eq!(l.block(2, 3).unwrap(), Matrix::diag(&[-10.0, -10.0]));
        assert_eq!(l.block(2, 2).unwrap(), Matrix::diag(&[12.0, 30.0]));
        assert_eq!(l.max_block_sum(), 0.0);
        for v in 0..t.n() {
            let det = grounded_det(&t, v).unwrap();
            assert!((det - 1e6).abs() <= 1e-8 * 1e6, "det at {v} = {det}");
        }
    }

    #[test]
    fn figa1_grounded_det_is_diagonal_product() {
        let t = fixture("FIGA1");
        let expected = weight_det_product(&t);
        for v in 0..t.n() {
            let det = grounded_det(&t, v).unwrap();
            assert!((det - expected).abs() <= 1e-10 * expected.abs());
        }
    }

    #[test]
    fn path5_grounded_structure() {
        let t = fixture("PATH5");
        let g = grounded(&t, 2).unwrap();
        assert_eq!(g.row_index, vec![1, 0, 3, 4]);
        // no coupling between the two branches
        assert_eq!(g.block(1, 3).unwrap(), Matrix::zeros(2, 2));
        let inv = grounded_inverse_analytic(&t, 2).unwrap();
        assert_eq!(inv.block(0, 1).unwrap(), Matrix::diag(&[0.1, 1.0]));
    }

    #[test]
    fn analytic_inverse_matches_lu() {
        for name in ["FIG2A", "PATH5", "FIGA1"] {
            let t = fixture(name);
            for v in 0..t.n() {
                let g = grounded(&t, v).unwrap();
                let analytic = grounded_inverse_analytic(&t, v).unwrap();
                let (lu, _) = lu_inverse(&g.data).unwrap();
                assert!(analytic.data.max_abs_diff(&lu) < 1e-8, "{name} at {v}");
            }
        }
    }

    #[test]
    fn incidence_and_path_matrix() {
        for name in ["K2S", "FIG2A", "PATH5"] {
            let t = fixture(name);
            let q = incidence(&t).unwrap();
            let qqt = q.data.matmul(&q.data.transpose()).unwrap();
            assert!(qqt.max_abs_diff(&laplacian(&t).data) < 1e-8);
            for v in 0..t.n() {
                let qv = incidence_grounded(&t, v).unwrap();
                let pv = path_matrix(&t, v).unwrap();
                let id = Matrix::identity(qv.data.rows());
                assert!(pv.data.matmul(&qv.data).unwrap().max_abs_diff(&id) < 1e-8);
                let ptp = pv.data.transpose().matmul(&pv.data).unwrap();
                let analytic = grounded_inverse_analytic(&t, v).unwrap();
                let reordered = analytic
                    .select_blocks(&pv.col_index, &pv.col_index)
                    .unwrap();
                assert!(ptp.max_abs_diff(&reordered.data) < 1e-8);
            }
        }
        let p5 = fixture("PATH5");
        let pv = path_matrix(&p5, 0).unwrap();
        let col = pv.col_index.iter().position(|&c| c == 4).unwrap();
        let nonzero = (0..4)
            .filter(|&e| pv.block_at(e, col).max_abs() > 0.0)
            .count();
        assert_eq!(nonzero, 4);
    }

    #[test]
    fn incidence_rejects_triangular() {
        let t = fixture("FIGA1");
        assert!(matches!(incidence(&t), Err(Error::Class { .. })));
        assert!(matches!(path_matrix(&t, 0), Err(Error::Class { .. })));
    }
}
