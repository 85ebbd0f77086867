//! Dense row-major matrices and the handful of vector kernels the optimizers
//! need. Factorizations delegate to `nalgebra`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major storage.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid_input!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(invalid_input!("row {i} has {} entries, expected {cols}", r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Exact (bitwise) symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
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

    /// `out = self * v`
    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.iter_rows()) {
            *o = dot(row, v);
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(v, &mut out);
        out
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(invalid_input!("matrix shapes differ"));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Result of a power iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorNorm {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest absolute eigenvalue of a symmetric linear operator given only
/// through `apply(v, out)`, by power iteration.
///
/// With `v` of unit norm, `‖Mv‖² = vᵀM²v` is the Rayleigh quotient of `M²`,
/// so the estimate converges to `|λ|max` whether the dominant eigenvalue is
/// positive, negative, or a `±λ` pair.
pub fn operator_norm_with<F>(dim: usize, mut apply: F, tol: f64, max_iters: usize) -> OperatorNorm
where
    F: FnMut(&[f64], &mut [f64]),
{
    if dim == 0 {
        return OperatorNorm { value: 0.0, iterations: 0, converged: true };
    }
    // Fixed pseudo-random start; never orthogonal to the top eigenvector
    // except on a measure-zero set.
    let mut start_rng = rng::stream(0x5EED_0F_F0E7, rng::streams::PROBES);
    let mut v: Vec<f64> = (0..dim).map(|_| start_rng.sample::<f64, _>(StandardNormal)).collect();
    let n0 = norm2(&v);
    scale(1.0 / n0, &mut v);
    let mut w = vec![0.0; dim];

    let mut estimate = 0.0;
    for it in 1..=max_iters.max(1) {
        apply(&v, &mut w);
        let nw = norm2(&w);
        if nw == 0.0 {
            // v landed in the null space; for a nonzero operator this only
            // happens on the first step from an unlucky start.
            return OperatorNorm { value: 0.0, iterations: it, converged: true };
        }
        let converged = it > 1 && (nw - estimate).abs() <= tol * nw;
        estimate = nw;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
        if converged {
            return OperatorNorm { value: estimate, iterations: it, converged: true };
        }
    }
    OperatorNorm { value: estimate, iterations: max_iters, converged: false }
}

/// Operator (spectral) norm of a symmetric matrix by power iteration.
pub fn operator_norm(m: &Matrix, tol: f64, max_iters: usize) -> Result<OperatorNorm> {
    if !m.is_square() {
        return Err(invalid_input!("operator_norm needs a square matrix"));
    }
    if !all_finite(m.as_slice()) {
        return Err(invalid_input!("matrix has non-finite entries"));
    }
    if m.max_abs() == 0.0 {
        return Ok(OperatorNorm { value: 0.0, iterations: 0, converged: true });
    }
    Ok(operator_norm_with(m.rows(), |v, out| m.mul_vec_into(v, out), tol, max_iters))
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(invalid_input!("eigendecomposition needs a square matrix"));
    }
    let eig = nalgebra::SymmetricEigen::new(m.to_nalgebra());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Lower-triangular Cholesky factor.
pub fn cholesky(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::Factorization("Cholesky needs a square matrix".into()));
    }
    let chol = m
        .to_nalgebra()
        .cholesky()
        .ok_or_else(|| Error::Factorization("matrix is not positive definite".into()))?;
    Ok(Matrix::from_nalgebra(&chol.l()))
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `diag(R)` folded into `Q`.
pub fn random_orthogonal(p: usize, rng: &mut rng::Rng) -> Matrix {
    let g = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            for i in 0..p {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Matrix::from_nalgebra(&q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operator_norm_of_diagonal_with_negative_dominant() {
        let m = Matrix::from_diagonal(&[1.0, -3.0, 2.0]);
        let r = operator_norm(&m, 1e-14, 10_000).unwrap();
        assert!(r.converged);
        assert!((r.value - 3.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn operator_norm_of_identity_and_zero() {
        let r = operator_norm(&Matrix::identity(4), 1e-14, 100).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
        let z = operator_norm(&Matrix::zeros(3, 3), 1e-14, 100).unwrap();
        assert_eq!(z.value, 0.0);
        assert_eq!(z.iterations, 0);
    }

    #[test]
    fn operator_norm_handles_plus_minus_pair() {
        let m = Matrix::from_diagonal(&[2.0, -2.0, 0.5]);
        let r = operator_norm(&m, 1e-14, 10_000).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = Matrix::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(cholesky(&m), Err(Error::Factorization(_))));
    }

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut r = rng::stream(3, 0);
        let q = random_orthogonal(6, &mut r);
        let qt = q.transpose();
        for i in 0..6 {
            for j in 0..6 {
                let v = dot(qt.row(i), qt.row(j));
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((v - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn from_rows_checks_lengths() {
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(m.row(1), &[3.0, 4.0]);
        assert_eq!(m.transpose()[(0, 1)], 3.0);
    }
}
