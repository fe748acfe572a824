//! Primal-dual interior-point method for the vector-coloring SDP.
//!
//! The zero-discrepancy constraints are eliminated by writing
//! `X = Q Y Qᵀ`, where the columns of `Q` span the orthogonal complement of
//! the constraint vectors. What remains, over the symmetric `r × r` matrix
//! `Y`, is the dual-form problem
//!
//! ```text
//!   maximize tr(Y)
//!   s.t.     Y                                ⪰ 0   (block 1, r × r)
//!            (1/β) Diag(QYQᵀ) − QYQᵀ          ⪰ 0   (block 2, n × n)
//!            1 − diag(QYQᵀ)                   ≥ 0   (block 3, linear)
//! ```
//!
//! whose conic dual is the coloring dual restricted to the complement
//! (block-2 multiplier = `G`, block-3 multiplier = `q`). Iterates follow the
//! HKM direction with a Mehrotra predictor-corrector and an infeasible start.
//! The Schur complement is assembled from its Kronecker and low-rank pieces
//! rather than from dense constraint matrices.

use faer::{Mat, Side};

use crate::numerics::SpdSolver;

#[derive(Debug, Clone, Copy)]
pub(crate) struct IpmOptions {
    pub max_iter: usize,
    pub gap_tol: f64,
    pub feas_tol: f64,
    /// Stop once `μ < mu_floor·(1+|obj|)` and the gap is below `gap_floor`.
    pub mu_floor: f64,
    pub gap_floor: f64,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            gap_tol: 1e-10,
            feas_tol: 1e-10,
            mu_floor: 1e-12,
            gap_floor: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct IpmSolution {
    /// `r × r`, the coloring is `Q Y Qᵀ`.
    pub y: Mat<f64>,
    /// Block-2 primal multiplier (`G`), `n × n`.
    pub g: Mat<f64>,
    /// Block-3 primal multiplier (`q`).
    pub q: Vec<f64>,
    pub iterations: usize,
}

/// Index bookkeeping for the scaled half-vectorization of `r × r` symmetric
/// matrices: basis `E_(a,a) = e_a e_aᵀ`, `E_(a,b) = (e_a e_bᵀ + e_b e_aᵀ)/√2`.
struct SymBasis {
    r: usize,
    pairs: Vec<(usize, usize)>,
    /// `E_k = coef_k (e_a e_bᵀ + e_b e_aᵀ)`
    coef: Vec<f64>,
}

impl SymBasis {
    fn new(r: usize) -> Self {
        let mut pairs = Vec::with_capacity(r * (r + 1) / 2);
        let mut coef = Vec::with_capacity(r * (r + 1) / 2);
        for a in 0..r {
            for b in 0..=a {
                pairs.push((a, b));
                coef.push(if a == b { 0.5 } else { std::f64::consts::FRAC_1_SQRT_2 });
            }
        }
        Self { r, pairs, coef }
    }

    fn len(&self) -> usize {
        self.pairs.len()
    }

    /// `svec(V)_k = tr(E_k V)` using the symmetric part of `V`.
    fn svec(&self, v: &Mat<f64>) -> Vec<f64> {
        self.pairs
            .iter()
            .zip(&self.coef)
            .map(|(&(a, b), &c)| c * (v[(a, b)] + v[(b, a)]) * if a == b { 1.0 } else { 1.0 })
            .collect()
    }

    fn smat(&self, y: &[f64]) -> Mat<f64> {
        let mut m = Mat::zeros(self.r, self.r);
        for (k, &(a, b)) in self.pairs.iter().enumerate() {
            if a == b {
                m[(a, a)] = y[k];
            } else {
                let v = y[k] * std::f64::consts::FRAC_1_SQRT_2;
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        m
    }

    fn trace_vector(&self) -> Vec<f64> {
        self.pairs
            .iter()
            .map(|&(a, b)| if a == b { 1.0 } else { 0.0 })
            .collect()
    }

    /// Adds `tr(E_k P E_l R)` for each `(P, R)` pair into the lower triangle
    /// of `m` (both `P` and `R` symmetric).
    fn add_kron(&self, m: &mut Mat<f64>, terms: &[(&Mat<f64>, &Mat<f64>)]) {
        let p = self.len();
        for k in 0..p {
            let (a, b) = self.pairs[k];
            let ck = self.coef[k];
            for l in 0..=k {
                let (c, d) = self.pairs[l];
                let mut s = 0.0;
                for (pm, rm) in terms {
                    s += pm[(b, c)] * rm[(d, a)]
                        + pm[(b, d)] * rm[(c, a)]
                        + pm[(a, c)] * rm[(d, b)]
                        + pm[(a, d)] * rm[(c, b)];
                }
                m[(k, l)] += ck * self.coef[l] * s;
            }
        }
    }
}

fn symmetrize(m: &Mat<f64>) -> Mat<f64> {
    let n = m.nrows();
    Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

fn frob_dot(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)] * b[(i, j)];
        }
    }
    s
}

fn frob_norm(a: &Mat<f64>) -> f64 {
    frob_dot(a, a).sqrt()
}

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn inverse_spd(m: &Mat<f64>) -> Option<Mat<f64>> {
    let n = m.nrows();
    let llt = m.llt(Side::Lower).ok()?;
    use faer::linalg::solvers::Solve;
    Some(symmetrize(&llt.solve(Mat::<f64>::identity(n, n))))
}

/// Largest `α ≥ 0` with `x + α·dx ⪰ 0` for `x ≻ 0` (infinite if unbounded).
fn max_step_psd(x: &Mat<f64>, dx: &Mat<f64>) -> Option<f64> {
    let llt = x.llt(Side::Lower).ok()?;
    let l = llt.L();
    let mut m = dx.clone();
    l.solve_lower_triangular_in_place(m.as_mut());
    let mut mt = m.transpose().to_owned();
    l.solve_lower_triangular_in_place(mt.as_mut());
    let sym = symmetrize(&mt);
    let vals = sym.self_adjoint_eigenvalues(Side::Lower).ok()?;
    let lmin = vals[0];
    Some(if lmin >= 0.0 { f64::INFINITY } else { -1.0 / lmin })
}

fn max_step_lp(x: &[f64], dx: &[f64]) -> f64 {
    x.iter()
        .zip(dx)
        .filter(|(_, &d)| d < 0.0)
        .map(|(&v, &d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

pub(crate) struct UvcSdp<'a> {
    /// `n × r`, rows `q_i`.
    q: &'a Mat<f64>,
    beta: f64,
    basis: SymBasis,
    /// `n × p`, `L[i][k] = q_iᵀ E_k q_i`.
    l: Mat<f64>,
}

struct Point {
    x1: Mat<f64>,
    x2: Mat<f64>,
    x3: Vec<f64>,
    y: Vec<f64>,
    z1: Mat<f64>,
    z2: Mat<f64>,
    z3: Vec<f64>,
}

struct Direction {
    dx1: Mat<f64>,
    dx2: Mat<f64>,
    dx3: Vec<f64>,
    dy: Vec<f64>,
    dz1: Mat<f64>,
    dz2: Mat<f64>,
    dz3: Vec<f64>,
}

impl<'a> UvcSdp<'a> {
    pub(crate) fn new(q: &'a Mat<f64>, beta: f64) -> Self {
        let r = q.ncols();
        let n = q.nrows();
        let basis = SymBasis::new(r);
        let p = basis.len();
        let mut l = Mat::zeros(n, p);
        for i in 0..n {
            for (k, &(a, b)) in basis.pairs.iter().enumerate() {
                l[(i, k)] = if a == b {
                    q[(i, a)] * q[(i, a)]
                } else {
                    std::f64::consts::SQRT_2 * q[(i, a)] * q[(i, b)]
                };
            }
        }
        Self { q, beta, basis, l }
    }

    fn n(&self) -> usize {
        self.q.nrows()
    }

    fn r(&self) -> usize {
        self.q.ncols()
    }

    /// `(1/β) Diag(QYQᵀ) − QYQᵀ`
    fn lmi_map(&self, y: &Mat<f64>) -> Mat<f64> {
        let x = self.q * y * self.q.transpose();
        let mut s = -&x;
        for i in 0..self.n() {
            s[(i, i)] += x[(i, i)] / self.beta;
        }
        symmetrize(&s)
    }

    fn diag_map(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..y.len()).map(|k| self.l[(i, k)] * y[k]).sum();
        }
        out
    }

    fn l_transpose(&self, v: &[f64]) -> Vec<f64> {
        let p = self.basis.len();
        let mut out = vec![0.0; p];
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                for (k, o) in out.iter_mut().enumerate() {
                    *o += vi * self.l[(i, k)];
                }
            }
        }
        out
    }

    /// The primal operator `A(X1, X2, x3)`.
    fn apply_a(&self, v1: &Mat<f64>, v2: &Mat<f64>, v3: &[f64]) -> Vec<f64> {
        let s1 = self.basis.svec(v1);
        let v2s = symmetrize(v2);
        let qt_v2_q = self.q.transpose() * &v2s * self.q;
        let s2 = self.basis.svec(&qt_v2_q);
        let d2: Vec<f64> = (0..self.n()).map(|i| v2s[(i, i)] / self.beta).collect();
        let l_d2 = self.l_transpose(&d2);
        let l_v3 = self.l_transpose(v3);
        (0..self.basis.len())
            .map(|k| -s1[k] - l_d2[k] + s2[k] + l_v3[k])
            .collect()
    }

    /// Dual residual blocks `C − A*(y) − Z`.
    fn dual_residual(&self, pt: &Point) -> (Mat<f64>, Mat<f64>, Vec<f64>) {
        let ym = self.basis.smat(&pt.y);
        let r1 = &ym - &pt.z1;
        let r2 = &self.lmi_map(&ym) - &pt.z2;
        let d = self.diag_map(&pt.y);
        let r3 = (0..self.n()).map(|i| 1.0 - d[i] - pt.z3[i]).collect();
        (r1, r2, r3)
    }

    fn schur(&self, pt: &Point, z1inv: &Mat<f64>, z2inv: &Mat<f64>) -> Mat<f64> {
        let p = self.basis.len();
        let n = self.n();
        let beta = self.beta;
        let mut m = Mat::zeros(p, p);

        let qt = self.q.transpose();
        let xt = qt * &pt.x2 * self.q;
        let zt = qt * z2inv * self.q;
        self.basis
            .add_kron(&mut m, &[(&pt.x1, z1inv), (&xt, &zt)]);

        // L-weighted terms: Lᵀ H L with H = (1/β²)(X2∘Z2⁻¹) + Diag(x3/z3)
        let mut h = Mat::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                h[(i, j)] = pt.x2[(i, j)] * z2inv[(i, j)] / (beta * beta);
            }
            h[(j, j)] += pt.x3[j] / pt.z3[j];
        }
        let hl = &h * &self.l;
        let lhl = self.l.transpose() * &hl;

        // N[i][l] = a_iᵀ E_l c_i with a_i = (X2 Q)_i, c_i = (Z2⁻¹ Q)_i
        let aq = &pt.x2 * self.q;
        let cq = z2inv * self.q;
        let mut nm = Mat::zeros(n, p);
        for i in 0..n {
            for (k, &(a, b)) in self.basis.pairs.iter().enumerate() {
                let c = self.basis.coef[k];
                nm[(i, k)] = c * (aq[(i, a)] * cq[(i, b)] + aq[(i, b)] * cq[(i, a)]);
            }
        }
        let ltn = self.l.transpose() * &nm;

        let mut full = Mat::zeros(p, p);
        for k in 0..p {
            for l in 0..=k {
                let v = m[(k, l)] + lhl[(k, l)] - (ltn[(k, l)] + ltn[(l, k)]) / beta;
                full[(k, l)] = v;
                full[(l, k)] = v;
            }
        }
        full
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        pt: &Point,
        solver: &SpdSolver,
        z1inv: &Mat<f64>,
        z2inv: &Mat<f64>,
        rd: &(Mat<f64>, Mat<f64>, Vec<f64>),
        target: &(Mat<f64>, Mat<f64>, Vec<f64>),
        b: &[f64],
    ) -> Direction {
        let (t1, t2, t3) = target;
        let (r1, r2, r3) = rd;
        // rhs = b − A(T Z⁻¹) + A(X R_d Z⁻¹)
        let w1 = &(&pt.x1 * r1) * z1inv - t1 * z1inv;
        let w2 = &(&pt.x2 * r2) * z2inv - t2 * z2inv;
        let w3: Vec<f64> = (0..self.n())
            .map(|i| (pt.x3[i] * r3[i] - t3[i]) / pt.z3[i])
            .collect();
        let aw = self.apply_a(&w1, &w2, &w3);
        let rhs: Vec<f64> = b.iter().zip(&aw).map(|(bi, ai)| bi + ai).collect();
        let dy = solver.solve(&rhs);

        let dym = self.basis.smat(&dy);
        let dz1 = r1 + &dym;
        let dz2 = r2 + &self.lmi_map(&dym);
        let ldy = self.diag_map(&dy);
        let dz3: Vec<f64> = (0..self.n()).map(|i| r3[i] - ldy[i]).collect();

        let dx1 = symmetrize(&(&(t1 * z1inv) - &pt.x1 - &(&pt.x1 * &dz1) * z1inv));
        let dx2 = symmetrize(&(&(t2 * z2inv) - &pt.x2 - &(&pt.x2 * &dz2) * z2inv));
        let dx3: Vec<f64> = (0..self.n())
            .map(|i| t3[i] / pt.z3[i] - pt.x3[i] - pt.x3[i] * dz3[i] / pt.z3[i])
            .collect();
        Direction {
            dx1,
            dx2,
            dx3,
            dy,
            dz1,
            dz2,
            dz3,
        }
    }

    fn step_lengths(&self, pt: &Point, d: &Direction) -> Option<(f64, f64)> {
        let ap = max_step_psd(&pt.x1, &d.dx1)?
            .min(max_step_psd(&pt.x2, &d.dx2)?)
            .min(max_step_lp(&pt.x3, &d.dx3));
        let ad = max_step_psd(&pt.z1, &d.dz1)?
            .min(max_step_psd(&pt.z2, &d.dz2)?)
            .min(max_step_lp(&pt.z3, &d.dz3));
        Some((ap, ad))
    }

    fn complementarity(&self, pt: &Point) -> f64 {
        frob_dot(&pt.x1, &pt.z1)
            + frob_dot(&pt.x2, &pt.z2)
            + pt.x3.iter().zip(&pt.z3).map(|(a, b)| a * b).sum::<f64>()
    }

    pub(crate) fn solve(&self, opts: &IpmOptions) -> IpmSolution {
        let n = self.n();
        let r = self.r();
        let p = self.basis.len();
        let cone_dim = (r + 2 * n) as f64;
        let b = self.basis.trace_vector();
        let b_norm = vec_norm(&b);

        let mut pt = Point {
            x1: Mat::identity(r, r),
            x2: Mat::identity(n, n),
            x3: vec![1.0; n],
            y: vec![0.0; p],
            z1: Mat::identity(r, r),
            z2: Mat::identity(n, n),
            z3: vec![1.0; n],
        };

        let mut iterations = 0;
        for iter in 0..opts.max_iter {
            iterations = iter;
            let rd = self.dual_residual(&pt);
            let ax = self.apply_a(&pt.x1, &pt.x2, &pt.x3);
            let rp: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let pobj: f64 = pt.x3.iter().sum();
            let dobj: f64 = b.iter().zip(&pt.y).map(|(bi, yi)| bi * yi).sum();
            let pinf = vec_norm(&rp) / (1.0 + b_norm);
            let dinf = (frob_norm(&rd.0).powi(2) + frob_norm(&rd.1).powi(2) + vec_norm(&rd.2).powi(2))
                .sqrt()
                / (1.0 + (n as f64).sqrt());
            let mu = self.complementarity(&pt) / cone_dim;
            let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            if gap < opts.gap_tol && pinf < opts.feas_tol && dinf < opts.feas_tol {
                break;
            }
            if mu < opts.mu_floor * (1.0 + pobj.abs()) && gap < opts.gap_floor {
                break;
            }

            let (Some(z1inv), Some(z2inv)) = (inverse_spd(&pt.z1), inverse_spd(&pt.z2)) else {
                break;
            };
            let mut m = self.schur(&pt, &z1inv, &z2inv);
            let solver = match SpdSolver::new(&m) {
                Some(s) => s,
                None => {
                    let bump = 1e-12 * (0..p).map(|k| m[(k, k)].abs()).fold(1.0, f64::max);
                    for k in 0..p {
                        m[(k, k)] += bump;
                    }
                    let Some(s) = SpdSolver::new(&m) else {
                        break;
                    };
                    s
                }
            };

            // predictor
            let zero_target = (Mat::zeros(r, r), Mat::zeros(n, n), vec![0.0; n]);
            let pred = self.direction(&pt, &solver, &z1inv, &z2inv, &rd, &zero_target, &b);
            let Some((ap, ad)) = self.step_lengths(&pt, &pred) else {
                break;
            };
            let (ap, ad) = (ap.min(1.0), ad.min(1.0));
            let mu_aff = (frob_dot(&(&pt.x1 + &pred.dx1 * ap), &(&pt.z1 + &pred.dz1 * ad))
                + frob_dot(&(&pt.x2 + &pred.dx2 * ap), &(&pt.z2 + &pred.dz2 * ad))
                + (0..n)
                    .map(|i| (pt.x3[i] + ap * pred.dx3[i]) * (pt.z3[i] + ad * pred.dz3[i]))
                    .sum::<f64>())
                / cone_dim;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            // corrector
            let sm = sigma * mu;
            let t1 = &Mat::<f64>::identity(r, r) * sm - &pred.dx1 * &pred.dz1;
            let t2 = &Mat::<f64>::identity(n, n) * sm - &pred.dx2 * &pred.dz2;
            let t3: Vec<f64> = (0..n).map(|i| sm - pred.dx3[i] * pred.dz3[i]).collect();
            let dir = self.direction(&pt, &solver, &z1inv, &z2inv, &rd, &(t1, t2, t3), &b);
            let Some((ap, ad)) = self.step_lengths(&pt, &dir) else {
                break;
            };
            let ap = (0.95 * ap).min(1.0);
            let ad = (0.95 * ad).min(1.0);

            pt.x1 = &pt.x1 + &dir.dx1 * ap;
            pt.x2 = &pt.x2 + &dir.dx2 * ap;
            for i in 0..n {
                pt.x3[i] += ap * dir.dx3[i];
                pt.z3[i] += ad * dir.dz3[i];
            }
            for k in 0..p {
                pt.y[k] += ad * dir.dy[k];
            }
            pt.z1 = &pt.z1 + &dir.dz1 * ad;
            pt.z2 = &pt.z2 + &dir.dz2 * ad;
        }

        let y = self.basis.smat(&pt.y);
        IpmSolution {
            y,
            g: pt.x2,
            q: pt.x3,
            iterations,
        }
    }
}
