//! Moore-Penrose inverse of the block Laplacian, assembled from the
//! closed-form grounded inverse.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplacian::{laplacian, BlockMatrix};
use crate::matrix::{kron, Matrix};
use crate::tree::{Tree, VertexId};

/// Absolute Penrose tolerance, multiplied by `max(1, ‖L‖_max)`.
pub const PENROSE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinvResult {
    pub pinv: BlockMatrix,
    /// Max-abs residuals of `LXL = L`, `XLX = X`, `(LX)ᵀ = LX`, `(XL)ᵀ = XL`.
    pub penrose_residuals: [f64; 4],
    pub projector_residual: f64,
    pub tolerance: f64,
}

/// `I_{(n-1)s} - J_{n-1} ⊗ (1/n) I_s`.
pub fn centering(n: usize, s: usize) -> Matrix {
    let m = n - 1;
    &Matrix::identity(m * s)
        - &kron(
            &Matrix::ones(m, m),
            &Matrix::identity(s).scale(1.0 / n as f64),
        )
}

/// Pseudoinverse obtained by grounding at the last vertex.
pub fn pinv(tree: &Tree) -> Result<PinvResult> {
    pinv_grounded_at(tree, tree.n() - 1)
}

/// Pseudoinverse obtained by grounding at `v`, certified by the four Penrose
/// conditions.
pub fn pinv_grounded_at(tree: &Tree, v: VertexId) -> Result<PinvResult> {
    tree.check_vertex(v)?;
    let (n, s) = (tree.n(), tree.s());
    let order: Vec<VertexId> = (0..n).filter(|&x| x != v).collect();
    let grounded_inv = tree.path_inverse_sums(v, &order);
    let m = centering(n, s);
    let core = m.matmul(&grounded_inv)?.matmul(&m)?;

    // The deleted block row and column are fixed by requiring every block
    // row and column of the result to sum to zero.
    let mut data = Matrix::zeros(n * s, n * s);
    let mut last_col = Matrix::zeros(s, s);
    for (a, &x) in order.iter().enumerate() {
        let mut row_sum = Matrix::zeros(s, s);
        for (b, &y) in order.iter().enumerate() {
            let block = core.submatrix(a * s, b * s, s, s);
            row_sum.add_submatrix(0, 0, &block);
            data.set_submatrix(x * s, y * s, &block);
        }
        let neg = -&row_sum;
        last_col.add_submatrix(0, 0, &row_sum);
        data.set_submatrix(x * s, v * s, &neg);
    }
    data.set_submatrix(v * s, v * s, &last_col);
    for &y in &order {
        let mut col_sum = Matrix::zeros(s, s);
        for &x in &order {
            col_sum.add_submatrix(0, 0, &data.submatrix(x * s, y * s, s, s));
        }
        data.set_submatrix(v * s, y * s, &-&col_sum);
    }

    let lap = laplacian(tree);
    let l = &lap.data;
    let lx = l.matmul(&data)?;
    let xl = data.matmul(l)?;
    let penrose_residuals = [
        lx.matmul(l)?.max_abs_diff(l),
        xl.matmul(&data)?.max_abs_diff(&data),
        lx.asymmetry(),
        xl.asymmetry(),
    ];
    let tolerance = PENROSE_TOL * l.max_abs().max(1.0);
    let idx: Vec<usize> = (0..n).collect();
    let pinv = BlockMatrix::new(s, idx.clone(), idx, data);
    let projector_residual = projector_residual(&lx, n, s);
    // negated so that a NaN residual also fails
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    let failed = penrose_residuals.iter().any(|r| !(*r < tolerance));
    if failed {
        return Err(Error::PenroseFailure {
            residuals: penrose_residuals,
            tolerance,
        });
    }
    Ok(PinvResult {
        pinv,
        penrose_residuals,
        projector_residual,
        tolerance,
    })
}

fn projector_residual(lx: &Matrix, n: usize, s: usize) -> f64 {
    let complement = &Matrix::identity(n * s) - lx;
    let expected = kron(
        &Matrix::ones(n, n),
        &Matrix::identity(s).scale(1.0 / n as f64),
    );
    complement.max_abs_diff(&expected)
}

/// `‖(I - L L⁺) - J_n ⊗ (1/n) I_s‖_max`.
pub fn projector_check(tree: &Tree, result: &PinvResult) -> Result<f64> {
    let lx = laplacian(tree).data.matmul(&result.pinv.data)?;
    Ok(projector_residual(&lx, tree.n(), tree.s()))
}

/// `‖M (I + D Dᵀ) - I‖_max` with `M` from [`centering`] and `D = 𝟙 ⊗ I_s`.
pub fn m_inverse_check(n: usize, s: usize) -> Result<f64> {
    if n < 2 || s < 1 {
        return Err(Error::Parameter(format!(
            "need n >= 2 and s >= 1, got n = {n}, s = {s}"
        )));
    }
    let m = n - 1;
    let d = kron(&Matrix::ones(m, 1), &Matrix::identity(s));
    let claimed = &Matrix::identity(m * s) + &d.matmul(&d.transpose())?;
    let product = centering(n, s).matmul(&claimed)?;
    Ok(product.max_abs_diff(&Matrix::identity(m * s)))
}
