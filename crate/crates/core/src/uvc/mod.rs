//! Universal vector colorings: the SDP
//!
//! ```text
//!   maximize tr(X)  s.t.  w_kᵀ X w_k = 0,  X ⪯ (1/β) Diag(X),  X_ii ≤ 1,  X ⪰ 0
//! ```
//!
//! together with an independent verifier, its dual certificate checker and
//! the two subspace constructions that certify the trace guarantee.

mod ipm;
mod subspace;

pub use subspace::{diag_dominated_subspace, low_distortion_subspace};

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    self, min_eigenvalue, norm, orthogonal_complement, orthonormalize, psd_factor, Factor,
    Matrix, NumericsError, SymMatrix,
};
use ipm::{IpmOptions, UvcSdp};

/// Rows of the complement basis shorter than this are treated as forced zero.
const DEAD_ROW_TOL: f64 = 1e-10;
const RANK_TOL: f64 = 1e-10;
const DIRECTIONAL_SAMPLES: usize = 100;
const DIRECTIONAL_SEED: u64 = 0x5eed_0f_b0;

/// Largest `n` the dense solver accepts.
pub const MAX_UVC_N: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UvcError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("solver stalled after {iterations} iterations (trace deficit {:.3e})", report.trace_deficit)]
    Stalled {
        iterations: usize,
        report: Box<FeasibilityReport>,
    },
    #[error("refusing a dense solve with n = {n} (limit {MAX_UVC_N})")]
    RefuseTooLarge { n: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// A coloring problem over `n` elements with `ℓ = constraints.len()`
/// zero-discrepancy directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UvcProblem {
    n: usize,
    constraints: Vec<Vec<f64>>,
    beta: f64,
}

impl UvcProblem {
    pub fn new(n: usize, constraints: Vec<Vec<f64>>, beta: f64) -> Result<Self, UvcError> {
        if n == 0 {
            return Err(UvcError::InvalidProblem("n must be positive".into()));
        }
        if n > MAX_UVC_N {
            return Err(UvcError::RefuseTooLarge { n });
        }
        if constraints.len() >= n {
            return Err(UvcError::InvalidProblem(format!(
                "{} constraints on {n} elements (need fewer than n)",
                constraints.len()
            )));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(UvcError::InvalidProblem(format!("beta = {beta} must be positive")));
        }
        for (k, w) in constraints.iter().enumerate() {
            if w.len() != n {
                return Err(UvcError::DimensionMismatch {
                    expected: n,
                    got: w.len(),
                });
            }
            if w.iter().any(|x| !x.is_finite()) {
                return Err(UvcError::InvalidProblem(format!("constraint {k} is not finite")));
            }
            if w.iter().all(|&x| x == 0.0) {
                return Err(UvcError::InvalidProblem(format!("constraint {k} is zero")));
            }
        }
        let p = Self {
            n,
            constraints,
            beta,
        };
        if p.delta() + beta >= 1.0 {
            return Err(UvcError::InvalidProblem(format!(
                "delta + beta = {} must be below 1",
                p.delta() + beta
            )));
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn constraints(&self) -> &[Vec<f64>] {
        &self.constraints
    }

    pub fn ell(&self) -> usize {
        self.constraints.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.ell() as f64 / self.n as f64
    }

    /// The guaranteed trace `(1 − δ − β) n`.
    pub fn guaranteed_trace(&self) -> f64 {
        (1.0 - self.delta() - self.beta) * self.n as f64
    }

    fn unit_constraints(&self) -> Vec<Vec<f64>> {
        self.constraints
            .iter()
            .map(|w| {
                let s = norm(w);
                w.iter().map(|x| x / s).collect()
            })
            .collect()
    }
}

/// Property checks of a candidate coloring. Constraint residuals are
/// measured on unit-normalized directions as `‖Σ_i w_k(i) u_i‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub max_constraint_residual: f64,
    pub lmi_min_eig: f64,
    pub max_diag: f64,
    pub trace_deficit: f64,
    pub gram_min_eig: f64,
    /// Largest `(‖Σ b_i u_i‖² − (1/β) Σ b_i² ‖u_i‖²) / ‖b‖²` over random `b`.
    pub directional_violation: f64,
}

impl FeasibilityReport {
    /// Whether every property holds at tolerance `tol` on an `n`-element problem.
    pub fn passes(&self, tol: f64, n: usize) -> bool {
        self.max_constraint_residual <= tol * (n as f64).sqrt()
            && self.lmi_min_eig >= -tol
            && self.max_diag <= 1.0 + tol
            && self.trace_deficit <= tol * n as f64
            && self.gram_min_eig >= -tol
            && self.directional_violation <= tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorColoring {
    pub gram: SymMatrix,
    pub vectors: Factor,
    pub beta: f64,
    pub trace_value: f64,
    pub report: FeasibilityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub eta: Vec<f64>,
    pub g: SymMatrix,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualVerdict {
    pub feasible: bool,
    pub objective: f64,
    pub lmi_min_eig: f64,
}

/// Solves the coloring SDP to optimality.
pub fn solve_uvc(p: &UvcProblem, tol: f64) -> Result<VectorColoring, UvcError> {
    solve_uvc_with_dual(p, tol).map(|(v, _)| v)
}

/// Solves the coloring SDP and also returns a dual certificate for it.
pub fn solve_uvc_with_dual(
    p: &UvcProblem,
    tol: f64,
) -> Result<(VectorColoring, DualCertificate), UvcError> {
    let n = p.n;
    if p.ell() == 0 {
        let gram = SymMatrix::identity(n);
        let cert = DualCertificate {
            eta: Vec::new(),
            g: SymMatrix::zeros(n),
            q: vec![1.0; n],
        };
        return Ok((coloring_from_gram(p, gram, tol)?, cert));
    }

    let unit = p.unit_constraints();
    let basis = orthogonal_complement(&unit, n, RANK_TOL);
    let r = basis.cols();
    let live: Vec<usize> = (0..n)
        .filter(|&i| norm(basis.row(i)) > DEAD_ROW_TOL)
        .collect();
    let q_live = Mat::from_fn(live.len(), r, |a, c| basis.get(live[a], c));

    let sdp = UvcSdp::new(&q_live, p.beta);
    let sol = sdp.solve(&IpmOptions::default());

    let q_full = Mat::from_fn(n, r, |i, c| if live.contains(&i) { basis.get(i, c) } else { 0.0 });
    let y = clamp_psd(&sol.y)?;
    let x = &q_full * &y * q_full.transpose();
    let mut gram = SymMatrix::from_faer(&x);
    let max_diag = gram.diag().into_iter().fold(0.0f64, f64::max);
    if max_diag > 1.0 {
        gram = gram.scaled(1.0 / max_diag);
    }
    let coloring = coloring_from_gram(p, gram, tol)?;
    if !coloring.report.passes(tol, n) {
        return Err(UvcError::Stalled {
            iterations: sol.iterations,
            report: Box::new(coloring.report),
        });
    }

    let mut g = SymMatrix::zeros(n);
    let mut q = vec![0.0; n];
    for (a, &i) in live.iter().enumerate() {
        q[i] = sol.q[a].max(0.0);
        for (b, &j) in live.iter().enumerate().take(a + 1) {
            g.set(i, j, 0.5 * (sol.g[(a, b)] + sol.g[(b, a)]));
        }
    }
    let g = SymMatrix::from_faer(&clamp_psd(&g.to_faer())?);
    let cert = complete_certificate(p, &unit, &basis, g, q)?;
    Ok((coloring, cert))
}

/// The scaled projection `X = P / max_i P_ii` onto the complement of the
/// constraints. Its trace always meets the guarantee, so it is returned
/// whenever it also satisfies the LMI.
pub fn projection_coloring(p: &UvcProblem, tol: f64) -> Result<Option<VectorColoring>, UvcError> {
    let n = p.n;
    let unit = p.unit_constraints();
    let basis = orthogonal_complement(&unit, n, RANK_TOL);
    let norms2: Vec<f64> = (0..n).map(|i| norm(basis.row(i)).powi(2)).collect();
    let max_p = norms2.iter().copied().fold(0.0f64, f64::max);
    if max_p <= 0.0 {
        return Ok(None);
    }
    // the LMI holds outright when every diagonal entry of P is at least β
    let min_p = norms2.iter().copied().fold(f64::INFINITY, f64::min);
    let s = max_p.sqrt();
    let vectors = Matrix::from_fn(n, basis.cols(), |i, c| basis.get(i, c) / s);
    let gram = SymMatrix::gram(&vectors);
    if min_p < p.beta {
        let lmi = lmi_matrix(&gram, p.beta);
        if min_eigenvalue(&lmi)? < -tol {
            return Ok(None);
        }
    }
    let report = verify_parts(&gram, &Factor { vectors }, p)?;
    if !report.passes(tol, n) {
        return Ok(None);
    }
    let vectors = Factor {
        vectors: Matrix::from_fn(n, basis.cols(), |i, c| basis.get(i, c) / s),
    };
    Ok(Some(VectorColoring {
        trace_value: gram.trace(),
        gram,
        vectors,
        beta: p.beta,
        report,
    }))
}

/// Re-checks every coloring property from the Gram matrix and the vectors.
pub fn verify_uvc(
    v: &VectorColoring,
    p: &UvcProblem,
    _tol: f64,
) -> Result<FeasibilityReport, UvcError> {
    if v.gram.order() != p.n {
        return Err(UvcError::DimensionMismatch {
            expected: p.n,
            got: v.gram.order(),
        });
    }
    if v.vectors.len() != p.n {
        return Err(UvcError::DimensionMismatch {
            expected: p.n,
            got: v.vectors.len(),
        });
    }
    verify_parts(&v.gram, &v.vectors, p)
}

/// Checks `Σ_k η_k w_k w_kᵀ + G − (1/β) Diag(G) + Diag(q) ⪰ I` together
/// with `G ⪰ 0` and `q ≥ 0`, each up to `tol`.
pub fn verify_dual_certificate(
    cert: &DualCertificate,
    p: &UvcProblem,
    tol: f64,
) -> Result<DualVerdict, UvcError> {
    let n = p.n;
    if cert.eta.len() != p.ell() {
        return Err(UvcError::DimensionMismatch {
            expected: p.ell(),
            got: cert.eta.len(),
        });
    }
    if cert.q.len() != n {
        return Err(UvcError::DimensionMismatch {
            expected: n,
            got: cert.q.len(),
        });
    }
    if cert.g.order() != n {
        return Err(UvcError::DimensionMismatch {
            expected: n,
            got: cert.g.order(),
        });
    }
    let mut m = SymMatrix::from_fn(n, |i, j| {
        let mut v = cert.g.get(i, j);
        for (eta, w) in cert.eta.iter().zip(&p.constraints) {
            v += eta * w[i] * w[j];
        }
        v
    });
    for i in 0..n {
        let v = m.get(i, i) - cert.g.get(i, i) / p.beta + cert.q[i] - 1.0;
        m.set(i, i, v);
    }
    let lmi_min_eig = min_eigenvalue(&m)?;
    let g_min = min_eigenvalue(&cert.g)?;
    let q_ok = cert.q.iter().all(|&x| x >= -tol);
    Ok(DualVerdict {
        feasible: lmi_min_eig >= -tol && g_min >= -tol && q_ok,
        objective: cert.q.iter().sum(),
        lmi_min_eig,
    })
}

fn lmi_matrix(gram: &SymMatrix, beta: f64) -> SymMatrix {
    let mut s = gram.scaled(-1.0);
    for i in 0..gram.order() {
        s.set(i, i, gram.get(i, i) * (1.0 / beta - 1.0));
    }
    s
}

fn coloring_from_gram(p: &UvcProblem, gram: SymMatrix, tol: f64) -> Result<VectorColoring, UvcError> {
    let vectors = psd_factor(&gram, tol.max(numerics::DEFAULT_TOL))?;
    let report = verify_parts(&gram, &vectors, p)?;
    Ok(VectorColoring {
        trace_value: gram.trace(),
        gram,
        vectors,
        beta: p.beta,
        report,
    })
}

fn verify_parts(gram: &SymMatrix, vectors: &Factor, p: &UvcProblem) -> Result<FeasibilityReport, UvcError> {
    let n = p.n;
    let dim = vectors.dim();
    let mut max_res = 0.0f64;
    for w in p.unit_constraints() {
        let mut s = vec![0.0; dim];
        for (i, wi) in w.iter().enumerate() {
            for (sk, uk) in s.iter_mut().zip(vectors.vector(i)) {
                *sk += wi * uk;
            }
        }
        max_res = max_res.max(norm(&s));
    }
    let lmi_min_eig = min_eigenvalue(&lmi_matrix(gram, p.beta))?;
    let gram_min_eig = min_eigenvalue(gram)?;
    let diag = gram.diag();
    let max_diag = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let trace_deficit = p.guaranteed_trace() - gram.trace();

    let norms2: Vec<f64> = vectors.norms().iter().map(|x| x * x).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(DIRECTIONAL_SEED);
    let mut directional = f64::NEG_INFINITY;
    for _ in 0..DIRECTIONAL_SAMPLES {
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bb: f64 = b.iter().map(|x| x * x).sum();
        if bb == 0.0 {
            continue;
        }
        let mut s = vec![0.0; dim];
        for (i, bi) in b.iter().enumerate() {
            for (sk, uk) in s.iter_mut().zip(vectors.vector(i)) {
                *sk += bi * uk;
            }
        }
        let lhs: f64 = s.iter().map(|x| x * x).sum();
        let rhs: f64 = b.iter().zip(&norms2).map(|(bi, ni)| bi * bi * ni).sum::<f64>() / p.beta;
        directional = directional.max((lhs - rhs) / bb);
    }

    Ok(FeasibilityReport {
        max_constraint_residual: max_res,
        lmi_min_eig,
        max_diag,
        trace_deficit,
        gram_min_eig,
        directional_violation: directional,
    })
}

fn clamp_psd(m: &Mat<f64>) -> Result<Mat<f64>, UvcError> {
    let n = m.nrows();
    if n == 0 {
        return Ok(m.clone());
    }
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let eig = sym
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| NumericsError::NonConvergence { residual: f64::NAN })?;
    let u = eig.U();
    let s = eig.S();
    let mut scaled = u.to_owned();
    for c in 0..n {
        let lam = s[c].max(0.0);
        for i in 0..n {
            scaled[(i, c)] *= lam;
        }
    }
    Ok(&scaled * u.transpose())
}

/// Extends the block multipliers `(G, q)` to a full dual certificate by
/// choosing a uniform `η` large enough to cover the constraint span.
fn complete_certificate(
    p: &UvcProblem,
    unit: &[Vec<f64>],
    complement: &Matrix,
    g: SymMatrix,
    mut q: Vec<f64>,
) -> Result<DualCertificate, UvcError> {
    let n = p.n;
    let beta = p.beta;
    let mut base = g.clone();
    for i in 0..n {
        base.set(i, i, g.get(i, i) * (1.0 - 1.0 / beta) + q[i] - 1.0);
    }
    let qm = complement.to_faer();
    let mf = base.to_faer();
    let a11 = qm.transpose() * &mf * &qm;
    let a11 = Mat::from_fn(a11.nrows(), a11.ncols(), |i, j| 0.5 * (a11[(i, j)] + a11[(j, i)]));
    let lmin = if a11.nrows() == 0 {
        f64::INFINITY
    } else {
        min_eigenvalue(&SymMatrix::from_faer(&a11))?
    };
    let floor = 1e-7 * (1.0 + base.max_abs());
    let bump = (floor - lmin).max(0.0);
    if bump > 0.0 {
        q.iter_mut().for_each(|x| *x += bump);
    }

    let span = orthonormalize(unit, n, 1e-10);
    let pm = span.to_faer();
    let mut a22 = pm.transpose() * &mf * &pm;
    for k in 0..a22.nrows() {
        a22[(k, k)] += bump;
    }
    let a12 = qm.transpose() * &mf * &pm;
    let mut a11b = a11.clone();
    for k in 0..a11b.nrows() {
        a11b[(k, k)] += bump;
    }
    let schur = if a11b.nrows() == 0 {
        a22
    } else {
        let llt = a11b
            .llt(faer::Side::Lower)
            .map_err(|_| NumericsError::NotPsd { lambda_min: lmin + bump })?;
        use faer::linalg::solvers::Solve;
        let sol = llt.solve(&a12);
        &a22 - a12.transpose() * &sol
    };
    let schur = SymMatrix::from_faer(&Mat::from_fn(schur.nrows(), schur.ncols(), |i, j| {
        0.5 * (schur[(i, j)] + schur[(j, i)])
    }));
    let need = (-min_eigenvalue(&schur)?).max(0.0);

    let wm = Matrix::from_columns(unit, n).to_faer();
    let pw = pm.transpose() * &wm;
    let ww = &pw * pw.transpose();
    let lam_w = min_eigenvalue(&SymMatrix::from_faer(&ww))?;
    let eta_unit = (need * 1.01 + floor) / lam_w.max(f64::MIN_POSITIVE);
    let eta = p
        .constraints
        .iter()
        .map(|w| eta_unit / norm(w).powi(2))
        .collect();
    Ok(DualCertificate { eta, g, q })
}
