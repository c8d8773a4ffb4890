//! Dense complex linear algebra.
//!
//! [`ComplexMatrix`] is the single numeric carrier used across the crate:
//! gates, Kraus operators, superoperators, reservoir matrices and the
//! normal equations of the ridge readout all live in it. Storage is
//! row-major.

mod eigen;

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use thiserror::Error;

pub use eigen::{eig_general, spectral_radius};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix must have at least one row and column")]
    Empty,
    #[error("entries length {len} does not match shape {rows}x{cols}")]
    BadLength { rows: usize, cols: usize, len: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("eigenvalue iteration did not converge within {cap} sweeps")]
    NoConvergence { cap: usize },
    #[error("matrix is not Hermitian positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("matrix is singular to working precision (pivot {pivot})")]
    Singular { pivot: usize },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting NaN and infinities.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::BadLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: k / cols.max(1),
                col: k % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Builds a matrix from complex rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        Self {
            rows: n_rows,
            cols: n_cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    /// Builds a matrix from real rows. Panics on ragged input.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        Self {
            rows: n_rows,
            cols: n_cols,
            data: rows.iter().flatten().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    /// Column vector from entries.
    pub fn column(entries: &[C64]) -> Self {
        Self {
            rows: entries.len(),
            cols: 1,
            data: entries.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().into_iter().sum()
    }

    /// Real parts as nested rows.
    pub fn to_real_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| z.re).collect())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        t
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, op: &'static str, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(mismatch(op, self, other));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(mismatch("max_abs_diff", self, other));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Frobenius distance of `self^H self` from the identity.
    pub fn unitarity_defect(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let g = matmul(&self.adjoint(), self)?;
        Ok(g.sub(&Self::identity(self.rows))?.frobenius_norm())
    }

    /// Frobenius distance of `self` from its adjoint.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.sub(&self.adjoint())
            .map(|d| d.frobenius_norm())
            .unwrap_or(f64::INFINITY)
    }

    /// Block-diagonal assembly of square or rectangular blocks.
    pub fn block_diag(blocks: &[ComplexMatrix]) -> Self {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out[(r0 + i, c0 + j)] = b[(i, j)];
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "mul_vec",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: v.len(),
                right_cols: 1,
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Dense complex vector; also used for eigenvalue lists.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexVector(Vec<C64>);

impl ComplexVector {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if let Some(k) = entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite { row: k, col: 0 });
        }
        Ok(Self(entries))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.0
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.norm()).collect()
    }
}

impl std::ops::Deref for ComplexVector {
    type Target = [C64];
    fn deref(&self) -> &[C64] {
        &self.0
    }
}

fn mismatch(op: &'static str, a: &ComplexMatrix, b: &ComplexMatrix) -> LinalgError {
    LinalgError::DimensionMismatch {
        op,
        left_rows: a.rows,
        left_cols: a.cols,
        right_rows: b.rows,
        right_cols: b.cols,
    }
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.cols != b.rows {
        return Err(mismatch("matmul", a, b));
    }
    let mut out = ComplexMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == ZERO {
                continue;
            }
            for (o, &bkj) in out_row.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// Kronecker product with `(A ⊗ B)[i*Br + k, j*Bc + l] = A[i,j] * B[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..b.rows {
                let base = (i * b.rows + k) * cols + j * b.cols;
                for (l, &bkl) in b.row(k).iter().enumerate() {
                    out.data[base + l] = aij * bkl;
                }
            }
        }
    }
    out
}

/// Solves `A X = B` for Hermitian positive definite `A` by Cholesky
/// factorization. One factorization serves every column of `B`.
pub fn solve_hpd(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    if a.rows != b.rows {
        return Err(mismatch("solve_hpd", a, b));
    }
    let n = a.rows;
    // Lower factor L with A = L L^H.
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || a[(j, j)].im.abs() > 1e-8 * a[(j, j)].re.abs().max(1.0) {
            return Err(LinalgError::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    let mut x = b.clone();
    let m = b.cols;
    for c in 0..m {
        // Forward: L y = b.
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        // Backward: L^H x = y.
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

/// Solves `A X = B` for general square `A` by LU with partial pivoting.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    if a.rows != b.rows {
        return Err(mismatch("solve", a, b));
    }
    let n = a.rows;
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| lu[(i, k)].norm().total_cmp(&lu[(j, k)].norm()))
            .unwrap_or(k);
        if lu[(p, k)].norm() <= f64::EPSILON * scale * n as f64 {
            return Err(LinalgError::Singular { pivot: k });
        }
        if p != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
            for j in 0..x.cols {
                let t = x[(k, j)];
                x[(k, j)] = x[(p, j)];
                x[(p, j)] = t;
            }
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / pivot;
            if f == ZERO {
                continue;
            }
            lu[(i, k)] = f;
            for j in k + 1..n {
                let t = lu[(k, j)];
                lu[(i, j)] -= f * t;
            }
            for j in 0..x.cols {
                let t = x[(k, j)];
                x[(i, j)] -= f * t;
            }
        }
    }
    for c in 0..x.cols {
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= lu[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}

pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    solve(a, &ComplexMatrix::identity(a.rows))
}

/// Real orthogonal factor of a thin QR decomposition (modified Gram-Schmidt,
/// two passes), with column signs fixed so that `R` has a positive diagonal.
/// Only the real parts of `a` are used.
pub fn real_orthogonal_factor(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let n = a.rows;
    let mut q: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| a[(i, j)].re).collect()).collect();
    for j in 0..n {
        let original_norm = q[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        for _ in 0..2 {
            for k in 0..j {
                let proj: f64 = q[k].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
                let qk = q[k].clone();
                for (x, y) in q[j].iter_mut().zip(&qk) {
                    *x -= proj * y;
                }
            }
        }
        let norm = q[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-12 * original_norm.max(f64::MIN_POSITIVE) {
            return Err(LinalgError::Singular { pivot: j });
        }
        // Positive R diagonal: the projection of the original column on q_j
        // is `norm` when q_j is not flipped, so normalizing by +norm suffices.
        for x in q[j].iter_mut() {
            *x /= norm;
        }
    }
    let mut out = ComplexMatrix::zeros(n, n);
    for (j, col) in q.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            out[(i, j)] = C64::new(v, 0.0);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])
    }

    fn lcg_matrix(n: usize, m: usize, seed: u64) -> ComplexMatrix {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let data = (0..n * m).map(|_| c(next(), next())).collect();
        ComplexMatrix::from_vec(n, m, data).unwrap()
    }

    #[test]
    fn matmul_identity_and_projectors() {
        let m = ComplexMatrix::from_rows(&[vec![c(1.0, 2.0), c(-3.0, 0.5)], vec![c(0.0, 1.0), c(4.0, 0.0)]]);
        assert_eq!(matmul(&ComplexMatrix::identity(2), &m).unwrap(), m);
        let b0 = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
        let b1 = ComplexMatrix::from_real_diag(&[0.0, 1.0]);
        assert_eq!(matmul(&b0, &b1).unwrap(), ComplexMatrix::zeros(2, 2));
        assert_eq!(matmul(&pauli_x(), &pauli_x()).unwrap(), ComplexMatrix::identity(2));
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let err = matmul(&ComplexMatrix::zeros(2, 3), &ComplexMatrix::zeros(2, 3)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3 vs 2x3"), "{msg}");
    }

    #[test]
    fn kron_examples() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let b0 = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
        assert_eq!(kron(&b0, &b0), ComplexMatrix::from_real_diag(&[1.0, 0.0, 0.0, 0.0]));
        let a = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let k = kron(&a, &i2);
        assert_eq!(k[(2, 0)], c(3.0, 0.0));
        assert_eq!(k[(3, 1)], c(3.0, 0.0));
        assert_eq!(k[(0, 2)], c(2.0, 0.0));
    }

    #[test]
    fn kron_mixed_product() {
        for seed in 0..10 {
            let a = lcg_matrix(2, 2, seed);
            let b = lcg_matrix(2, 2, seed + 100);
            let cm = lcg_matrix(2, 2, seed + 200);
            let d = lcg_matrix(2, 2, seed + 300);
            let lhs = matmul(&kron(&a, &b), &kron(&cm, &d)).unwrap();
            let rhs = kron(&matmul(&a, &cm).unwrap(), &matmul(&b, &d).unwrap());
            assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
        }
    }

    #[test]
    fn from_vec_rejects_nan() {
        let err = ComplexMatrix::from_vec(1, 2, vec![ONE, c(f64::NAN, 0.0)]).unwrap_err();
        assert_eq!(err, LinalgError::NonFinite { row: 0, col: 1 });
    }

    #[test]
    fn solve_hpd_examples() {
        let b = lcg_matrix(3, 2, 4);
        let x = solve_hpd(&ComplexMatrix::identity(3), &b).unwrap();
        assert!(x.max_abs_diff(&b).unwrap() < 1e-15);

        let a = ComplexMatrix::from_real_diag(&[2.0, 4.0]);
        let rhs = ComplexMatrix::from_real_rows(&[vec![2.0], vec![8.0]]);
        let x = solve_hpd(&a, &rhs).unwrap();
        assert!(x.max_abs_diff(&ComplexMatrix::from_real_rows(&[vec![1.0], vec![2.0]])).unwrap() < 1e-15);
    }

    #[test]
    fn solve_hpd_residual_on_random_gram_matrices() {
        for seed in 0..5 {
            let m = lcg_matrix(12, 12, seed);
            let a = matmul(&m.adjoint(), &m).unwrap().add(&ComplexMatrix::identity(12)).unwrap();
            let b = lcg_matrix(12, 3, seed + 50);
            let x = solve_hpd(&a, &b).unwrap();
            let r = matmul(&a, &x).unwrap().sub(&b).unwrap();
            assert!(r.frobenius_norm() / b.frobenius_norm() < 1e-10);
        }
    }

    #[test]
    fn solve_hpd_rejects_indefinite() {
        let a = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
        let err = solve_hpd(&a, &ComplexMatrix::identity(2)).unwrap_err();
        assert!(matches!(err, LinalgError::NotPositiveDefinite { pivot: 1, .. }));
    }

    #[test]
    fn lu_inverse_roundtrip() {
        let a = lcg_matrix(6, 6, 9).add(&ComplexMatrix::identity(6).scale_real(3.0)).unwrap();
        let inv = inverse(&a).unwrap();
        let p = matmul(&a, &inv).unwrap();
        assert!(p.max_abs_diff(&ComplexMatrix::identity(6)).unwrap() < 1e-12);
        assert!(matches!(
            inverse(&ComplexMatrix::zeros(2, 2)),
            Err(LinalgError::Singular { pivot: 0 })
        ));
    }

    #[test]
    fn orthogonal_factor_is_orthogonal() {
        let a = lcg_matrix(7, 7, 3);
        let q = real_orthogonal_factor(&a).unwrap();
        assert!(q.unitarity_defect().unwrap() < 1e-12);
        // R = Q^T A must be upper triangular with positive diagonal.
        let real_a = ComplexMatrix::from_real_rows(&a.to_real_rows());
        let r = matmul(&q.transpose(), &real_a).unwrap();
        for i in 0..7 {
            assert!(r[(i, i)].re > 0.0);
            for j in 0..i {
                assert!(r[(i, j)].norm() < 1e-12);
            }
        }
    }
}
