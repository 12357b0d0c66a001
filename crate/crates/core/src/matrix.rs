//! Dense real matrix kernel.
//!
//! Row-major `f64` storage with the handful of operations the tree analysis
//! needs: products, Kronecker products, LU inversion, a symmetric eigensolver
//! (Householder tridiagonalization followed by implicit-shift QL), the
//! positive definite square root and the vec-permutation matrix.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetry tolerance accepted by [`sym_eig`].
pub const SYM_EIG_TOL: f64 = 1e-8;
/// Relative pivot threshold for [`lu_inverse`].
pub const PIVOT_TOL: f64 = 1e-12;
/// Relative deflation threshold for the QL sweep.
const DEFLATION_TOL: f64 = 1e-14;
const MAX_QL_ITERATIONS: usize = 60;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// All-ones matrix `J`.
    pub fn ones(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![1.0; rows * cols],
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Ragged input is rejected.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {c}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.cols.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    /// Largest absolute entry, `0` for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `max |self - other|` entrywise. Panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "shape mismatch in max_abs_diff"
        );
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Largest entrywise deviation from symmetry.
    pub fn asymmetry(&self) -> f64 {
        assert!(self.is_square(), "asymmetry of a non-square matrix");
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Copies the `rows x cols` submatrix starting at `(r0, c0)`.
    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            let src = (r0 + i) * self.cols + c0;
            out.data[i * cols..(i + 1) * cols].copy_from_slice(&self.data[src..src + cols]);
        }
        out
    }

    /// Writes `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_submatrix(&mut self, r0: usize, c0: usize, block: &Matrix) {
        for i in 0..block.rows {
            let dst = (r0 + i) * self.cols + c0;
            self.data[dst..dst + block.cols]
                .copy_from_slice(&block.data[i * block.cols..(i + 1) * block.cols]);
        }
    }

    /// Adds `block` into `self` at `(r0, c0)`.
    pub fn add_submatrix(&mut self, r0: usize, c0: usize, block: &Matrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] += block[(i, j)];
            }
        }
    }

    /// Principal submatrix on the given index list, in that order.
    pub fn select(&self, row_idx: &[usize], col_idx: &[usize]) -> Self {
        let mut out = Self::zeros(row_idx.len(), col_idx.len());
        for (a, &i) in row_idx.iter().enumerate() {
            for (b, &j) in col_idx.iter().enumerate() {
                out[(a, b)] = self[(i, j)];
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, r) in dst.iter_mut().zip(row) {
                    *d += a * r;
                }
            }
        }
        Ok(out)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

fn zip_with(a: &Matrix, b: &Matrix, op: impl Fn(f64, f64) -> f64) -> Matrix {
    assert_eq!(
        (a.rows, a.cols),
        (b.rows, b.cols),
        "shape mismatch in elementwise op"
    );
    Matrix {
        rows: a.rows,
        cols: a.cols,
        data: a
            .data
            .iter()
            .zip(&b.data)
            .map(|(x, y)| op(*x, *y))
            .collect(),
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        zip_with(self, rhs, |a, b| a + b)
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        zip_with(self, rhs, |a, b| a - b)
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

/// Panics on dimension mismatch; use [`Matrix::matmul`] for a checked product.
impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs).expect("matrix product dimension mismatch")
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for row in self.data.chunks(self.cols.max(1)) {
            write!(f, "  ")?;
            for x in row {
                write!(f, "{x:>12.6} ")?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product `A ⊗ B = [a_ij B]`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            for p in 0..b.rows {
                for q in 0..b.cols {
                    out[(i * b.rows + p, j * b.cols + q)] = aij * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Vec-permutation matrix `I_{m,n} = Σ_i e_i ⊗ I_n ⊗ e_iᵀ` of order `mn`.
///
/// Satisfies `P (B ⊗ A) Pᵀ = A ⊗ B` for `A` of order `m` and `B` of order `n`.
pub fn vec_permutation(m: usize, n: usize) -> Matrix {
    let mut p = Matrix::zeros(m * n, m * n);
    for i in 0..m {
        for a in 0..n {
            p[(i * n + a, a * m + i)] = 1.0;
        }
    }
    p
}

/// Regroups a block matrix with `m x m` blocks of order `s` into the matrix
/// with `s x s` blocks of order `m` whose `(l, k)` block collects the `(l, k)`
/// entries of every original block: `(X̃_lk)_ij = (X_ij)_lk`.
pub fn regroup_blocks(x: &Matrix, m: usize, s: usize) -> Matrix {
    assert_eq!(x.rows(), m * s);
    assert_eq!(x.cols(), m * s);
    let mut out = Matrix::zeros(m * s, m * s);
    for i in 0..m {
        for j in 0..m {
            for l in 0..s {
                for k in 0..s {
                    out[(l * m + i, k * m + j)] = x[(i * s + l, j * s + k)];
                }
            }
        }
    }
    out
}

/// LU factorization with partial pivoting; returns the inverse and determinant.
pub fn lu_inverse(a: &Matrix) -> Result<(Matrix, f64)> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "lu_inverse needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let scale = a.max_abs();
    if scale == 0.0 && n > 0 {
        return Err(Error::SingularMatrix { pivot: 0.0, scale });
    }
    let threshold = PIVOT_TOL * scale;
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut det = 1.0;

    for col in 0..n {
        let (pivot_row, pivot_abs) =
            (col..n)
                .map(|r| (r, lu[(r, col)].abs()))
                .fold(
                    (col, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if pivot_abs < threshold {
            return Err(Error::SingularMatrix {
                pivot: pivot_abs,
                scale,
            });
        }
        if pivot_row != col {
            for j in 0..n {
                lu.data.swap(col * n + j, pivot_row * n + j);
            }
            perm.swap(col, pivot_row);
            det = -det;
        }
        let pivot = lu[(col, col)];
        det *= pivot;
        for r in (col + 1)..n {
            let factor = lu[(r, col)] / pivot;
            lu[(r, col)] = factor;
            if factor != 0.0 {
                for j in (col + 1)..n {
                    let v = lu[(col, j)];
                    lu[(r, j)] -= factor * v;
                }
            }
        }
    }

    // Solve LU x = P e_k for every unit vector.
    let mut inv = Matrix::zeros(n, n);
    let mut x = vec![0.0; n];
    for k in 0..n {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = if perm[i] == k { 1.0 } else { 0.0 };
        }
        for i in 0..n {
            let mut sum = x[i];
            for j in 0..i {
                sum -= lu[(i, j)] * x[j];
            }
            x[i] = sum;
        }
        for i in (0..n).rev() {
            let mut sum = x[i];
            for j in (i + 1)..n {
                sum -= lu[(i, j)] * x[j];
            }
            x[i] = sum / lu[(i, i)];
        }
        for i in 0..n {
            inv[(i, k)] = x[i];
        }
    }
    Ok((inv, det))
}

/// Inverse of a triangular matrix by substitution. The triangular structure is
/// preserved exactly and the diagonal of the result is `1 / a_ii`.
pub fn triangular_inverse(a: &Matrix, lower: bool) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::Dimension(
            "triangular_inverse needs a square matrix".into(),
        ));
    }
    let n = a.rows;
    let scale = a.max_abs();
    for i in 0..n {
        if a[(i, i)].abs() <= PIVOT_TOL * scale || a[(i, i)] == 0.0 {
            return Err(Error::SingularMatrix {
                pivot: a[(i, i)].abs(),
                scale,
            });
        }
    }
    let t = if lower { a.clone() } else { a.transpose() };
    // Forward substitution on the lower triangular factor, column by column.
    let mut inv = Matrix::zeros(n, n);
    for k in 0..n {
        inv[(k, k)] = 1.0 / t[(k, k)];
        for i in (k + 1)..n {
            let mut sum = 0.0;
            for j in k..i {
                sum += t[(i, j)] * inv[(j, k)];
            }
            inv[(i, k)] = -sum / t[(i, i)];
        }
    }
    Ok(if lower { inv } else { inv.transpose() })
}

/// Ascending eigenvalues of a symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `λ_k` with 1-based `k`, matching the usual ascending convention.
    pub fn lambda(&self, k: usize) -> f64 {
        self.0[k - 1]
    }

    pub fn min(&self) -> f64 {
        self.0.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.0.last().copied().unwrap_or(f64::NAN)
    }

    /// Spectral radius `max |λ|`.
    pub fn radius(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }
}

/// Eigenpairs of a symmetric matrix; eigenvector `k` is column `k`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Spectrum,
    pub vectors: Matrix,
}

impl EigenDecomposition {
    /// `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.vectors.rows();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let lambda = self.values.0[j];
            for i in 0..n {
                scaled[(i, j)] *= lambda;
            }
        }
        &scaled * &self.vectors.transpose()
    }
}

/// Full ascending spectrum of a symmetric matrix.
pub fn sym_eig(a: &Matrix) -> Result<Spectrum> {
    sym_eig_vectors(a).map(|e| e.values)
}

/// Symmetric eigendecomposition: Householder tridiagonalization followed by
/// the implicit-shift QL iteration, eigenvalues sorted ascending.
pub fn sym_eig_vectors(a: &Matrix) -> Result<EigenDecomposition> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "sym_eig needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let asym = a.asymmetry();
    if asym > SYM_EIG_TOL * a.max_abs().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let n = a.rows;
    if n == 0 {
        return Ok(EigenDecomposition {
            values: Spectrum(Vec::new()),
            vectors: Matrix::zeros(0, 0),
        });
    }
    // Work on the symmetrized copy so round-off asymmetry does not leak in.
    let mut z: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| 0.5 * (a[(i, j)] + a[(j, i)])).collect())
        .collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut z, &mut d, &mut e);
    ql_implicit(&mut z, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = z[row][src];
        }
    }
    let values = order.iter().map(|&i| d[i]).collect();
    Ok(EigenDecomposition {
        values: Spectrum(values),
        vectors,
    })
}

/// Householder reduction to tridiagonal form, accumulating the orthogonal
/// transform in `z`. On return `d` holds the diagonal and `e[1..]` the
/// sub-diagonal.
#[allow(clippy::needless_range_loop)]
fn tridiagonalize(z: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = z[i][..i].iter().map(|x| x.abs()).sum();
            if scale == 0.0 {
                e[i] = z[i][l];
            } else {
                for k in 0..i {
                    z[i][k] /= scale;
                    h += z[i][k] * z[i][k];
                }
                let f = z[i][l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[i][l] = f - g;
                let mut f = 0.0;
                for j in 0..i {
                    z[j][i] = z[i][j] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += z[j][k] * z[i][k];
                    }
                    for k in (j + 1)..i {
                        g += z[k][j] * z[i][k];
                    }
                    e[j] = g / h;
                    f += e[j] * z[i][j];
                }
                let hh = f / (h + h);
                for j in 0..i {
                    let f = z[i][j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        z[j][k] -= f * e[k] + g * z[i][k];
                    }
                }
            }
        } else {
            e[i] = z[i][l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += z[i][k] * z[k][j];
                }
                for k in 0..i {
                    z[k][j] -= g * z[k][i];
                }
            }
        }
        d[i] = z[i][i];
        z[i][i] = 1.0;
        for j in 0..i {
            z[j][i] = 0.0;
            z[i][j] = 0.0;
        }
    }
}

/// Implicit-shift QL on the tridiagonal `(d, e)`, rotating the columns of `z`.
#[allow(clippy::needless_range_loop)]
fn ql_implicit(z: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= DEFLATION_TOL * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(Error::NoConvergence { index: l });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Symmetric positive definite square root `S` with `S·S = A`.
pub fn sqrt_pd(a: &Matrix) -> Result<Matrix> {
    let eig = sym_eig_vectors(a)?;
    let smallest = eig.values.min();
    if smallest <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: smallest,
        });
    }
    let n = a.rows();
    let mut scaled = eig.vectors.clone();
    for j in 0..n {
        let root = eig.values.0[j].sqrt();
        for i in 0..n {
            scaled[(i, j)] *= root;
        }
    }
    let s = &scaled * &eig.vectors.transpose();
    // Exact symmetry for downstream products.
    let mut sym = s.clone();
    for i in 0..n {
        for j in 0..n {
            sym[(i, j)] = 0.5 * (s[(i, j)] + s[(j, i)]);
        }
    }
    Ok(sym)
}
