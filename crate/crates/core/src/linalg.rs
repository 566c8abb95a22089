//! Dense row-major vectors and matrices plus the handful of kernels the
//! strategies and diagnostics need: products, LU solves, Gram-Schmidt and a
//! cyclic Jacobi eigensolver for symmetric matrices.

use std::fmt;
use std::ops::{Deref, DerefMut, Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for the symmetry precondition of [`symmetric_eigen`].
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Off-diagonal Frobenius norm, relative to `‖C‖_F`, at which Jacobi stops.
pub const JACOBI_TOL: f64 = 1e-12;
/// Maximum number of cyclic Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Column norm floor (relative to the input column) for Gram-Schmidt.
pub const GRAM_SCHMIDT_FLOOR: f64 = 1e-12;
/// Pivot floor for LU, relative to the largest entry of the matrix.
pub const PIVOT_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix is singular to working precision (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("rank-deficient input: column {column} collapsed during orthogonalization")]
    Degenerate { column: usize },
    #[error("matrix is not symmetric: |C[{row}][{col}] - C[{col}][{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<(), LinalgError> {
    if expected == found {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

/// A dense real vector.
#[derive(Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Vector(data)
    }

    /// The `i`-th standard basis vector of dimension `n`.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[i] = 1.0;
        v
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Vector {
        Vector(self.0.iter().map(|x| x * factor).collect())
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: f64, x: &Vector) {
        debug_assert_eq!(self.len(), x.len());
        for (a, b) in self.0.iter_mut().zip(&x.0) {
            *a += alpha * b;
        }
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Vector {
    fn from(data: Vec<f64>) -> Self {
        Vector(data)
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A dense row-major real matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = *d;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        check_dim("Matrix::from_row_major", rows * cols, data.len())?;
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows; panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.as_ref().len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.as_ref().len(), c, "ragged rows");
            data.extend_from_slice(row.as_ref());
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        check_dim("Matrix::matmul", self.cols, other.rows)?;
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · selfᵀ`
    pub fn gram(&self) -> Matrix {
        let n = self.rows;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = dot(self.row(i), self.row(j));
                out.data[i * n + j] = v;
                out.data[j * n + i] = v;
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// `self ← alpha·self + beta·p vᵀ`, the shape of every rank-one update here.
    pub fn scale_add_outer(&mut self, alpha: f64, beta: f64, p: &[f64], v: &[f64]) {
        debug_assert_eq!(p.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for (i, pi) in p.iter().enumerate() {
            let coef = beta * pi;
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (a, vj) in row.iter_mut().zip(v) {
                *a = alpha * *a + coef * vj;
            }
        }
    }

    /// `out ← self · x` without allocating.
    pub fn mat_vec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    /// `xᵀ · self`
    pub fn vec_mat(&self, x: &[f64]) -> Vector {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        Vector(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn diagonal(&self) -> Vector {
        Vector((0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub fn mat_vec(a: &Matrix, x: &Vector) -> Result<Vector, LinalgError> {
    check_dim("mat_vec", a.cols, x.len())?;
    let mut out = Vector::zeros(a.rows);
    a.mat_vec_into(x, &mut out);
    Ok(out)
}

/// Outer product `p vᵀ`.
pub fn outer(p: &Vector, v: &Vector) -> Matrix {
    let mut m = Matrix::zeros(p.len(), v.len());
    m.scale_add_outer(0.0, 1.0, p, v);
    m
}

/// LU factorization with partial pivoting, `P A = L U`, stored packed.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    parity: f64,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Lu, LinalgError> {
        check_dim("Lu::factor", a.rows, a.cols)?;
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut parity = 1.0;
        let scale = a.max_abs();
        let floor = PIVOT_FLOOR * scale;

        for k in 0..n {
            let (pivot_row, pivot) = (k..n).map(|i| (i, lu[i * n + k])).fold((k, 0.0f64), |best, (i, v)| {
                if v.abs() > best.1.abs() {
                    (i, v)
                } else {
                    best
                }
            });
            if !(pivot.abs() > floor) || !pivot.is_finite() {
                return Err(LinalgError::Singular { column: k, pivot });
            }
            if pivot_row != k {
                for j in 0..n {
                    lu.swap(k * n + j, pivot_row * n + j);
                }
                perm.swap(k, pivot_row);
                parity = -parity;
            }
            for i in k + 1..n {
                let factor = lu[i * n + k] / pivot;
                lu[i * n + k] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= factor * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm, parity })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vector, LinalgError> {
        check_dim("Lu::solve", self.n, b.len())?;
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = dot(&self.lu[i * n..i * n + i], &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s = dot(&self.lu[i * n + i + 1..(i + 1) * n], &x[i + 1..]);
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        Ok(Vector(x))
    }

    pub fn determinant(&self) -> f64 {
        (0..self.n).fold(self.parity, |d, i| d * self.lu[i * self.n + i])
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &Matrix, b: &Vector) -> Result<Vector, LinalgError> {
    check_dim("solve", a.rows, b.len())?;
    Lu::factor(a)?.solve(b)
}

/// Orthonormalizes the columns of `g` in order (modified Gram-Schmidt with
/// one re-orthogonalization pass).
pub fn gram_schmidt_rotation(g: &Matrix) -> Result<Matrix, LinalgError> {
    check_dim("gram_schmidt_rotation", g.rows, g.cols)?;
    let n = g.rows;
    let mut basis: Vec<Vector> = Vec::with_capacity(n);
    for j in 0..n {
        let mut col = g.column(j);
        let original = col.norm();
        for _pass in 0..2 {
            for q in &basis {
                let proj = q.dot(&col);
                col.axpy(-proj, q);
            }
        }
        let norm = col.norm();
        if !(original > 0.0) || norm < GRAM_SCHMIDT_FLOOR * original {
            return Err(LinalgError::Degenerate { column: j });
        }
        basis.push(col.scaled(1.0 / norm));
    }
    let mut r = Matrix::zeros(n, n);
    for (j, q) in basis.iter().enumerate() {
        for i in 0..n {
            r[(i, j)] = q[i];
        }
    }
    Ok(r)
}

/// Eigen-decomposition of a symmetric matrix: eigenvalues in descending
/// order and the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub eigenvalues: Vector,
    pub eigenvectors: Matrix,
    pub sweeps: usize,
}

/// Cyclic Jacobi rotations until the off-diagonal mass is below
/// `JACOBI_TOL·‖C‖_F`.
pub fn symmetric_eigen(c: &Matrix) -> Result<SymmetricEigen, LinalgError> {
    check_dim("symmetric_eigen", c.rows, c.cols)?;
    let n = c.rows;
    let scale = c.max_abs();
    for i in 0..n {
        for j in i + 1..n {
            let gap = (c[(i, j)] - c[(j, i)]).abs();
            if gap > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) || gap.is_nan() {
                return Err(LinalgError::NotSymmetric { row: i, col: j, gap });
            }
        }
    }

    let mut a = c.clone();
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let total = a.frobenius_norm();
    let threshold = JACOBI_TOL * total;
    let mut vecs = Matrix::identity(n);
    let off_norm = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&a) > threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(LinalgError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = cos * akp - sin * akq;
                    a[(k, q)] = sin * akp + cos * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = cos * apk - sin * aqk;
                    a[(q, k)] = sin * apk + cos * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = vecs[(k, p)];
                    let vkq = vecs[(k, q)];
                    vecs[(k, p)] = cos * vkp - sin * vkq;
                    vecs[(k, q)] = sin * vkp + cos * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let eigenvalues = Vector(order.iter().map(|&i| a[(i, i)]).collect());
    let mut eigenvectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            eigenvectors[(k, dst)] = vecs[(k, src)];
        }
    }
    Ok(SymmetricEigen {
        eigenvalues,
        eigenvectors,
        sweeps,
    })
}
