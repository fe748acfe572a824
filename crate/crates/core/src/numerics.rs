//! Dense symmetric linear algebra shared by the SDP solver, the walk engine
//! and the subspace oracles.
//!
//! Storage is plain row-major `Vec<f64>`; the decompositions are delegated to
//! `faer` and then checked against their defining identities, so a
//! decomposition that comes back inaccurate is reported rather than trusted.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default absolute tolerance for eigen and PSD checks on unit-scaled input.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("decomposition did not converge (residual {residual:.3e})")]
    NonConvergence { residual: f64 },
    #[error("matrix is not positive semidefinite (lambda_min = {lambda_min:.3e})")]
    NotPsd { lambda_min: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix must have order at least 1")]
    Empty,
}

/// Symmetric matrix with full row-major storage; every write is mirrored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    order: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            data: vec![0.0; order * order],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m.data[i * order + i] = 1.0;
        }
        m
    }

    /// Builds from `f(i, j)` evaluated on the lower triangle (`j <= i`).
    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds from row-major data, symmetrizing as `(A + Aᵀ)/2`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericsError> {
        let order = rows.len();
        if order == 0 {
            return Err(NumericsError::Empty);
        }
        for r in rows {
            if r.len() != order {
                return Err(NumericsError::DimensionMismatch {
                    expected: order,
                    got: r.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(NumericsError::NonFinite);
            }
        }
        Ok(Self::from_fn(order, |i, j| 0.5 * (rows[i][j] + rows[j][i])))
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Gram matrix `G[i][j] = <v_i, v_j>` of the rows of `vectors`.
    pub fn gram(vectors: &Matrix) -> Self {
        let n = vectors.rows();
        Self::from_fn(n, |i, j| dot(vectors.row(i), vectors.row(j)))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.order + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.order + j] = v;
        self.data[j * self.order + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.order..(i + 1) * self.order]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.order).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.order).map(|i| dot(self.row(i), x)).collect()
    }

    /// `xᵀ A x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            order: self.order,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `a·self + b·other`
    pub fn combine(&self, a: f64, other: &SymMatrix, b: f64) -> Self {
        assert_eq!(self.order, other.order);
        Self {
            order: self.order,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.order, other.order);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.order).map(|i| self.row(i).to_vec()).collect()
    }

    pub(crate) fn to_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.order, self.order, |i, j| self.get(i, j))
    }

    pub(crate) fn from_faer(m: &Mat<f64>) -> Self {
        Self::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = NumericsError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Self::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.to_rows()
    }
}

/// General dense matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
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
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericsError> {
        let cols = rows.first().map_or(0, Vec::len);
        for r in rows {
            if r.len() != cols {
                return Err(NumericsError::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>], rows: usize) -> Self {
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ x`
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                for (o, a) in out.iter_mut().zip(self.row(i)) {
                    *o += xi * a;
                }
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        Self::from_faer(&(self.to_faer() * other.to_faer()))
    }

    pub fn column_norms(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j).powi(2)).sum::<f64>().sqrt())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub(crate) fn to_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j))
    }

    pub(crate) fn from_faer(m: &Mat<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Eigen-decomposition with ascending eigenvalues; `vectors` holds one
/// orthonormal eigenvector per column.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }

    /// `‖V·diag(λ)·Vᵀ − A‖_max`
    pub fn reconstruction_residual(&self, a: &SymMatrix) -> f64 {
        let n = a.order();
        let v = &self.vectors;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                let r: f64 = (0..n).map(|k| v.get(i, k) * self.values[k] * v.get(j, k)).sum();
                worst = worst.max((r - a.get(i, j)).abs());
            }
        }
        worst
    }

    /// `‖VᵀV − I‖_max`
    pub fn orthonormality_residual(&self) -> f64 {
        orthonormality_residual(&self.vectors)
    }
}

/// `‖QᵀQ − I‖_max` for a matrix with orthonormal columns expected.
pub fn orthonormality_residual(q: &Matrix) -> f64 {
    let k = q.cols();
    let mut worst: f64 = 0.0;
    for a in 0..k {
        for b in 0..=a {
            let s: f64 = (0..q.rows()).map(|i| q.get(i, a) * q.get(i, b)).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((s - target).abs());
        }
    }
    worst
}

/// Symmetric eigen-decomposition, eigenvalues ascending.
///
/// The decomposition is checked against its reconstruction and
/// orthonormality identities at `tol_eig` (relative to `‖A‖_max`).
pub fn sym_eig(a: &SymMatrix, tol_eig: f64) -> Result<Spectrum, NumericsError> {
    if a.order() == 0 {
        return Err(NumericsError::Empty);
    }
    if !a.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let spectrum = sym_eig_unchecked(a)?;
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let residual = spectrum.reconstruction_residual(a) / scale;
    let ortho = spectrum.orthonormality_residual();
    let worst = residual.max(ortho);
    if worst > tol_eig {
        return Err(NumericsError::NonConvergence { residual: worst });
    }
    Ok(spectrum)
}

/// Eigen-decomposition without the post-hoc identity checks; used on hot paths
/// where the caller validates the result by other means.
pub(crate) fn sym_eig_unchecked(a: &SymMatrix) -> Result<Spectrum, NumericsError> {
    let evd = a
        .to_faer()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| NumericsError::NonConvergence {
            residual: f64::INFINITY,
        })?;
    let n = a.order();
    let s = evd.S().column_vector();
    let u = evd.U();
    Ok(Spectrum {
        values: (0..n).map(|k| s[k]).collect(),
        vectors: Matrix::from_fn(n, n, |i, j| u[(i, j)]),
    })
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &SymMatrix) -> Result<f64, NumericsError> {
    if a.order() == 0 {
        return Ok(0.0);
    }
    if !a.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let vals = a
        .to_faer()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| NumericsError::NonConvergence {
            residual: f64::INFINITY,
        })?;
    Ok(vals[0])
}

/// Factor vectors of a PSD matrix: row `i` is `u_i`, with `<u_i, u_j> = X_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub vectors: Matrix,
}

impl Factor {
    pub fn len(&self) -> usize {
        self.vectors.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.rows() == 0
    }

    /// Dimension of the ambient space of the `u_i`.
    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        self.vectors.row(i)
    }

    pub fn norms(&self) -> Vec<f64> {
        (0..self.len()).map(|i| norm(self.vector(i))).collect()
    }

    pub fn gram(&self) -> SymMatrix {
        SymMatrix::gram(&self.vectors)
    }
}

/// Factors `x = UᵀU` through its spectrum, clamping eigenvalues in
/// `[-tol_psd·(1+‖x‖_max), 0)` to zero. Directions with zero eigenvalue are
/// dropped, so each `u_i` lives in a space of dimension `rank(x)`.
pub fn psd_factor(x: &SymMatrix, tol_psd: f64) -> Result<Factor, NumericsError> {
    if x.order() == 0 {
        return Err(NumericsError::Empty);
    }
    if !x.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let spectrum = sym_eig_unchecked(x)?;
    factor_from_spectrum(&spectrum, x.max_abs(), tol_psd)
}

pub(crate) fn factor_from_spectrum(
    spectrum: &Spectrum,
    scale: f64,
    tol_psd: f64,
) -> Result<Factor, NumericsError> {
    let threshold = tol_psd * (1.0 + scale);
    if spectrum.min() < -threshold {
        return Err(NumericsError::NotPsd {
            lambda_min: spectrum.min(),
        });
    }
    let n = spectrum.vectors.rows();
    let keep: Vec<usize> = (0..spectrum.values.len())
        .filter(|&k| spectrum.values[k] > 0.0)
        .collect();
    let roots: Vec<f64> = keep.iter().map(|&k| spectrum.values[k].sqrt()).collect();
    let vectors = Matrix::from_fn(n, keep.len(), |i, c| {
        spectrum.vectors.get(i, keep[c]) * roots[c]
    });
    Ok(Factor { vectors })
}

/// Singular triples `(σ_i, p_i, q_i)` of an `m × n` matrix, `σ` ascending.
///
/// Exactly `n` triples are returned so that the right vectors `q_i` form an
/// orthonormal basis of `ℝⁿ`; when `m < n` the surplus triples have `σ = 0`
/// and a zero left vector.
#[derive(Debug, Clone)]
pub struct Svd {
    pub values: Vec<f64>,
    /// `m × n`, column `i` is `p_i`.
    pub left: Matrix,
    /// `n × n`, column `i` is `q_i`.
    pub right: Matrix,
}

impl Svd {
    /// `‖M − Σ σ_i p_i q_iᵀ‖_max`
    pub fn reconstruction_residual(&self, m: &Matrix) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                let s: f64 = (0..self.values.len())
                    .map(|k| self.values[k] * self.left.get(r, k) * self.right.get(c, k))
                    .sum();
                worst = worst.max((s - m.get(r, c)).abs());
            }
        }
        worst
    }
}

pub fn svd(m: &Matrix) -> Result<Svd, NumericsError> {
    if !m.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let (rows, cols) = (m.rows(), m.cols());
    if cols == 0 {
        return Err(NumericsError::Empty);
    }
    if rows == 0 {
        return Ok(Svd {
            values: vec![0.0; cols],
            left: Matrix::zeros(0, cols),
            right: Matrix::identity(cols),
        });
    }
    let dec = m.to_faer().svd().map_err(|_| NumericsError::NonConvergence {
        residual: f64::INFINITY,
    })?;
    let s = dec.S().column_vector();
    let u = dec.U();
    let v = dec.V();
    let k = rows.min(cols);
    // faer sorts descending; reverse into ascending, padding zeros first.
    let mut values = vec![0.0; cols];
    let mut left = Matrix::zeros(rows, cols);
    let mut right = Matrix::zeros(cols, cols);
    let pad = cols - k;
    for slot in 0..cols {
        // slot < pad: surplus null directions v[:, k..cols] (only when rows < cols)
        let (src, sigma) = if slot < pad {
            (k + slot, 0.0)
        } else {
            let idx = cols - 1 - slot;
            (idx, s[idx])
        };
        values[slot] = sigma;
        for c in 0..cols {
            right.set(c, slot, v[(c, src)]);
        }
        if src < k {
            for r in 0..rows {
                left.set(r, slot, u[(r, src)]);
            }
        }
    }
    Ok(Svd {
        values,
        left,
        right,
    })
}

/// Orthonormal basis (as columns of an `n × r` matrix) of the orthogonal
/// complement of `span(vectors)` in `ℝⁿ`. Singular values below
/// `rank_tol · σ_max` count as zero.
pub fn orthogonal_complement(vectors: &[Vec<f64>], n: usize, rank_tol: f64) -> Matrix {
    if vectors.is_empty() {
        return Matrix::identity(n);
    }
    let w = Matrix::from_rows(vectors).expect("constraint vectors have equal length");
    let dec = svd(&w).expect("finite constraint vectors");
    let smax = dec.values.iter().fold(0.0f64, |a, &b| a.max(b));
    let cut = rank_tol * smax.max(f64::MIN_POSITIVE);
    let null: Vec<usize> = (0..n).filter(|&k| dec.values[k] <= cut).collect();
    Matrix::from_fn(n, null.len(), |i, c| dec.right.get(i, null[c]))
}

/// Orthonormalizes the given columns (modified Gram-Schmidt, two passes),
/// dropping columns that become numerically dependent.
pub fn orthonormalize(columns: &[Vec<f64>], n: usize, drop_tol: f64) -> Matrix {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for col in columns {
        let mut v = col.clone();
        let original = norm(&v);
        if original == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let nv = norm(&v);
        if nv > drop_tol * original {
            v.iter_mut().for_each(|x| *x /= nv);
            basis.push(v);
        }
    }
    Matrix::from_columns(&basis, n)
}

/// Cholesky factorization of a symmetric positive definite matrix.
pub(crate) struct SpdSolver {
    llt: faer::linalg::solvers::Llt<f64>,
}

impl SpdSolver {
    pub(crate) fn new(m: &Mat<f64>) -> Option<Self> {
        m.llt(Side::Lower).ok().map(|llt| Self { llt })
    }

    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        use faer::linalg::solvers::Solve;
        let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = self.llt.solve(&b);
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SymMatrix::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_spectrum() {
        let s = sym_eig(&SymMatrix::identity(3), DEFAULT_TOL).unwrap();
        for v in &s.values {
            assert!((v - 1.0).abs() < 1e-14);
        }
        assert!(s.orthonormality_residual() < 1e-12);
    }

    #[test]
    fn swap_matrix_spectrum() {
        let a = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let s = sym_eig(&a, DEFAULT_TOL).unwrap();
        assert!((s.values[0] + 1.0).abs() < 1e-14);
        assert!((s.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_reconstruction_and_trace() {
        let a = random_sym(8, 7);
        let s = sym_eig(&a, DEFAULT_TOL).unwrap();
        assert!(s.reconstruction_residual(&a) <= DEFAULT_TOL * a.max_abs());
        assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
        let sum: f64 = s.values.iter().sum();
        assert!((sum - a.trace()).abs() <= DEFAULT_TOL * 8.0 * a.max_abs());
    }

    #[test]
    fn non_finite_rejected() {
        let mut a = SymMatrix::identity(2);
        a.set(0, 1, f64::NAN);
        assert_eq!(sym_eig(&a, DEFAULT_TOL).unwrap_err(), NumericsError::NonFinite);
    }

    #[test]
    fn rank_one_factor() {
        let x = SymMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let f = psd_factor(&x, DEFAULT_TOL).unwrap();
        assert_eq!(f.dim(), 1);
        let (u1, u2) = (f.vector(0), f.vector(1));
        assert!((norm(u1) - 1.0).abs() < 1e-12);
        assert!((u1[0] + u2[0]).abs() < 1e-12);
    }

    #[test]
    fn identity_factor_is_orthonormal() {
        let f = psd_factor(&SymMatrix::identity(4), DEFAULT_TOL).unwrap();
        assert!(f.gram().max_abs_diff(&SymMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn not_psd_reports_lambda_min() {
        let x = SymMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -0.5]]).unwrap();
        match psd_factor(&x, DEFAULT_TOL) {
            Err(NumericsError::NotPsd { lambda_min }) => assert!((lambda_min + 0.5).abs() < 1e-12),
            other => panic!("expected NotPsd, got {other:?}"),
        }
    }

    #[test]
    fn tiny_negative_eigenvalue_is_clamped() {
        let x = SymMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1e-12]]).unwrap();
        let f = psd_factor(&x, DEFAULT_TOL).unwrap();
        assert_eq!(f.dim(), 1);
    }

    #[test]
    fn svd_identity() {
        let s = svd(&Matrix::identity(2)).unwrap();
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn svd_repeated_column() {
        // four copies of e_1: Gram trace 4, rank one, so σ = (0, 0, 0, 2)
        let m = Matrix::from_fn(4, 4, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let s = svd(&m).unwrap();
        for (got, want) in s.values.iter().zip([0.0, 0.0, 0.0, 2.0]) {
            assert!((got - want).abs() < 1e-12, "{:?}", s.values);
        }
        assert!(s.reconstruction_residual(&m) < 1e-12);
    }

    #[test]
    fn svd_wide_and_tall_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (r, c) in [(6, 4), (3, 5)] {
            let m = Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
            let s = svd(&m).unwrap();
            assert_eq!(s.values.len(), c);
            assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
            assert!(s.reconstruction_residual(&m) <= DEFAULT_TOL);
            assert!(orthonormality_residual(&s.right) < 1e-12);
        }
    }

    #[test]
    fn complement_is_orthogonal() {
        let w = vec![vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]];
        let q = orthogonal_complement(&w, 3, 1e-12);
        assert_eq!(q.cols(), 2);
        for c in 0..2 {
            assert!(dot(&q.column(c), &w[0]).abs() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::{prop_assert, proptest, ProptestConfig};

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn factor_of_gram_is_idempotent(seed in 0u64..1000, n in 1usize..7, k in 1usize..7) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let v = Matrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0));
                let x = SymMatrix::gram(&v);
                let f = psd_factor(&x, DEFAULT_TOL).unwrap();
                let again = psd_factor(&f.gram(), DEFAULT_TOL).unwrap();
                let scale = 1.0 + x.max_abs();
                prop_assert!(again.gram().max_abs_diff(&x) <= 2.0 * DEFAULT_TOL * scale);
            }

            #[test]
            fn unit_columns_bound_squared_singular_values(seed in 0u64..1000, r in 1usize..8, c in 1usize..8) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut m = Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
                let norms = m.column_norms();
                for j in 0..c {
                    for i in 0..r {
                        let v = m.get(i, j) / norms[j];
                        m.set(i, j, v);
                    }
                }
                let s = svd(&m).unwrap();
                let total: f64 = s.values.iter().map(|v| v * v).sum();
                prop_assert!(total <= c as f64 + 1e-9);
            }
        }
    }
}
