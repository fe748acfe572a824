//! Ground truth for the walk: exhaustive discrepancy, prefix and subset
//! evaluators, exact box discrepancy in the plane, and a Monte-Carlo check
//! of the tail bound `Pr[|disc| ≥ cλ((Σ_{i∈C} a_ji²)^{1/2} + λ)] ≤ 2e^{−λ²/2}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{run, EngineError, InstanceMatrix, MonitoredPair, Strategy, WalkParams};
use crate::geometry::PointSet;
use crate::strategies::VectorSequence;

pub const MAX_BRUTE_FORCE_N: usize = 22;
pub const MIN_TAIL_TRIALS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("refusing brute force for n = {n} (limit {MAX_BRUTE_FORCE_N})")]
    RefuseTooLarge { n: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    pub value: f64,
    pub coloring: Vec<i8>,
}

/// Exact `min_χ max |Σ_{i∈S} a_ji χ(i)|` over all colorings, for every row
/// with `S = [n]` or over the given pairs. The first element is fixed to `+1`
/// (the objective is sign-symmetric).
pub fn brute_force_discrepancy(
    b: &InstanceMatrix,
    pairs: Option<&[MonitoredPair]>,
) -> Result<BruteForceResult, OracleError> {
    let n = b.cols();
    if n > MAX_BRUTE_FORCE_N {
        return Err(OracleError::RefuseTooLarge { n });
    }
    let all: Vec<MonitoredPair>;
    let pairs = match pairs {
        Some(p) => p,
        None => {
            all = (0..b.rows()).map(|j| MonitoredPair::new(j, (0..n).collect())).collect();
            &all
        }
    };
    for p in pairs {
        if p.row >= b.rows() || p.subset.iter().any(|&i| i >= n) {
            return Err(OracleError::InvalidInput("pair outside the instance".into()));
        }
    }
    // coefficient of element i in objective k
    let mut coef = vec![vec![0.0; pairs.len()]; n];
    for (k, p) in pairs.iter().enumerate() {
        for &i in &p.subset {
            coef[i][k] = b.get(p.row, i);
        }
    }
    if pairs.is_empty() {
        return Ok(BruteForceResult {
            value: 0.0,
            coloring: vec![1; n],
        });
    }

    let free = n - 1;
    let total: u64 = 1 << free;
    let chunks = rayon::current_num_threads().max(1) as u64 * 8;
    let chunk = total.div_ceil(chunks).max(1);
    let best = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let start = c * chunk;
            let end = (start + chunk).min(total);
            scan_gray(&coef, free, start, end)
        })
        .reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    let g = best.1 ^ (best.1 >> 1);
    Ok(BruteForceResult {
        value: best.0,
        coloring: gray_coloring(g, n),
    })
}

/// Colorings for Gray codes `gray(k)`, `k ∈ [start, end)`: bit `i` of the
/// code set means element `i+1` is `−1`.
fn scan_gray(coef: &[Vec<f64>], free: usize, start: u64, end: u64) -> (f64, u64) {
    let m = coef[0].len();
    let g0 = start ^ (start >> 1);
    let mut sums = vec![0.0; m];
    for (i, c) in coef.iter().enumerate() {
        let sign = if i > 0 && (g0 >> (i - 1)) & 1 == 1 { -1.0 } else { 1.0 };
        for (s, a) in sums.iter_mut().zip(c) {
            *s += sign * a;
        }
    }
    let value = |sums: &[f64]| sums.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    let mut best = (value(&sums), start);
    let mut g = g0;
    for k in start + 1..end {
        let bit = k.trailing_zeros() as usize;
        debug_assert!(bit < free);
        g ^= 1 << bit;
        let i = bit + 1;
        let sign = if (g >> bit) & 1 == 1 { -2.0 } else { 2.0 };
        for (s, a) in sums.iter_mut().zip(&coef[i]) {
            *s += sign * a;
        }
        let v = value(&sums);
        if v < best.0 {
            best = (v, k);
        }
    }
    best
}

fn gray_coloring(g: u64, n: usize) -> Vec<i8> {
    (0..n)
        .map(|i| if i > 0 && (g >> (i - 1)) & 1 == 1 { -1 } else { 1 })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrefixDisc {
    pub linf: f64,
    pub l2: f64,
}

/// `max_k ‖Σ_{i≤k} χ(i) v_i‖` in the sup norm and in the Euclidean norm.
pub fn prefix_disc(seq: &VectorSequence, chi: &[i8]) -> Result<PrefixDisc, OracleError> {
    if chi.len() != seq.len() {
        return Err(OracleError::InvalidInput(format!(
            "{} colors for {} vectors",
            chi.len(),
            seq.len()
        )));
    }
    let mut s = vec![0.0; seq.d];
    let mut out = PrefixDisc { linf: 0.0, l2: 0.0 };
    for (v, &c) in seq.vectors.iter().zip(chi) {
        for (sk, vk) in s.iter_mut().zip(v) {
            *sk += c as f64 * vk;
        }
        out.linf = out.linf.max(s.iter().fold(0.0f64, |a, x| a.max(x.abs())));
        out.l2 = out.l2.max(s.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    Ok(out)
}

/// `(Σ_j disc(χ, j, S)²)^{1/2}`.
pub fn l2_subset_disc(b: &InstanceMatrix, subset: &[usize], chi: &[i8]) -> f64 {
    (0..b.rows())
        .map(|j| {
            subset
                .iter()
                .map(|&i| b.get(j, i) * chi[i] as f64)
                .sum::<f64>()
                .powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Exact `max_R |Σ_{p_i∈R} χ(i)|` over closed axis-parallel boxes, for
/// `d ≤ 2`. Points sharing a coordinate are kept together.
pub fn max_box_discrepancy(p: &PointSet, chi: &[i8]) -> Result<f64, OracleError> {
    if chi.len() != p.len() {
        return Err(OracleError::InvalidInput("coloring length differs from point count".into()));
    }
    if p.dim() > 2 {
        return Err(OracleError::InvalidInput("exact box discrepancy needs d <= 2".into()));
    }
    let n = p.len();
    if n == 0 {
        return Ok(0.0);
    }
    let rank = |axis: usize| -> (Vec<usize>, usize) {
        let mut vals: Vec<f64> = p.points().iter().map(|x| x[axis]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        let r = p
            .points()
            .iter()
            .map(|x| vals.partition_point(|&v| v < x[axis]))
            .collect();
        (r, vals.len())
    };
    let (xr, nx) = rank(0);
    let (yr, ny) = if p.dim() == 2 { rank(1) } else { (vec![0; n], 1) };
    let mut by_x: Vec<Vec<usize>> = vec![Vec::new(); nx];
    for i in 0..n {
        by_x[xr[i]].push(i);
    }
    let mut best = 0.0f64;
    let mut col = vec![0.0; ny];
    for a in 0..nx {
        col.iter_mut().for_each(|c| *c = 0.0);
        for group in &by_x[a..] {
            for &i in group {
                col[yr[i]] += chi[i] as f64;
            }
            best = best.max(kadane_abs(&col));
        }
    }
    Ok(best)
}

fn kadane_abs(v: &[f64]) -> f64 {
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    let mut best = 0.0f64;
    for &x in v {
        hi = (hi + x).max(x);
        lo = (lo + x).min(x);
        best = best.max(hi).max(-lo);
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheckConfig {
    /// Index into the monitor list.
    pub pair: usize,
    pub trials: usize,
    pub lambdas: Vec<f64>,
    /// `λ` at which `ĉ` is fitted.
    #[serde(default = "default_anchor")]
    pub anchor: f64,
    pub seed: u64,
}

fn default_anchor() -> f64 {
    1.0
}

impl TailCheckConfig {
    pub fn validate(&self) -> Result<(), OracleError> {
        if self.trials < MIN_TAIL_TRIALS {
            return Err(OracleError::InvalidInput(format!(
                "{} trials, need at least {MIN_TAIL_TRIALS}",
                self.trials
            )));
        }
        if self.lambdas.iter().chain([&self.anchor]).any(|&l| !(l >= 0.0 && l.is_finite())) {
            return Err(OracleError::InvalidInput("lambdas must be non-negative".into()));
        }
        Ok(())
    }
}

/// The grid searched for `ĉ`: `0.01 · 1.05^k` up to 100.
pub fn c_grid() -> Vec<f64> {
    let mut out = Vec::new();
    let mut c = 0.01;
    while c <= 100.0 {
        out.push(c);
        c *= 1.05;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSample {
    pub trial: usize,
    pub disc: f64,
    pub corrupted: usize,
    pub corrupted_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaRow {
    pub lambda: f64,
    pub exceedance: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub c_hat: f64,
    pub anchor: f64,
    pub completed: usize,
    pub excluded: usize,
    pub rows: Vec<LambdaRow>,
    pub samples: Vec<TailSample>,
}

impl TailReport {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// `2 e^{−λ²/2}`.
pub fn tail_bound(lambda: f64) -> f64 {
    2.0 * (-lambda * lambda / 2.0).exp()
}

fn exceedance(samples: &[TailSample], c: f64, lambda: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let hits = samples
        .iter()
        .filter(|s| s.disc.abs() >= c * lambda * (s.corrupted_mass.sqrt() + lambda))
        .count();
    hits as f64 / samples.len() as f64
}

/// Evaluates the tail check on already collected samples.
pub fn tail_report(samples: Vec<TailSample>, excluded: usize, lambdas: &[f64], anchor: f64) -> TailReport {
    let anchor_bound = tail_bound(anchor);
    let grid = c_grid();
    let c_hat = grid
        .iter()
        .copied()
        .find(|&c| exceedance(&samples, c, anchor) <= anchor_bound)
        .unwrap_or(*grid.last().expect("non-empty grid"));
    let trials = samples.len().max(1) as f64;
    let rows = lambdas
        .iter()
        .map(|&lambda| {
            let bound = tail_bound(lambda);
            let p = bound.min(1.0);
            let slack = 3.0 * (p * (1.0 - p) / trials).sqrt();
            let exc = exceedance(&samples, c_hat, lambda);
            LambdaRow {
                lambda,
                exceedance: exc,
                bound,
                slack,
                pass: exc <= bound + slack,
            }
        })
        .collect();
    TailReport {
        c_hat,
        anchor,
        completed: samples.len(),
        excluded,
        rows,
        samples,
    }
}

/// Runs `cfg.trials` seeded walks (trial `k` uses stream `k`) and checks the
/// tail shape for the monitored pair `cfg.pair`. Runs that fail to freeze
/// are excluded and counted.
pub fn tail_validate<F>(
    b: &InstanceMatrix,
    make_strategy: F,
    params: &WalkParams,
    monitors: &[MonitoredPair],
    cfg: &TailCheckConfig,
) -> Result<TailReport, OracleError>
where
    F: Fn() -> Box<dyn Strategy> + Sync,
{
    cfg.validate()?;
    let pair = monitors
        .get(cfg.pair)
        .ok_or_else(|| OracleError::InvalidInput(format!("no monitored pair {}", cfg.pair)))?
        .clone();
    let one = [pair.clone()];
    let results: Vec<Result<Option<TailSample>, EngineError>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut p = params.clone();
            p.seed = cfg.seed;
            p.stream = trial as u64;
            p.record_trace = false;
            let mut strategy = make_strategy();
            let out = run(b, strategy.as_mut(), &p, &one)?;
            if !out.terminated {
                return Ok(None);
            }
            let chi: Vec<f64> = out.coloring.iter().map(|&c| c as f64).collect();
            let ledger = &out.ledger.pairs[0];
            Ok(Some(TailSample {
                trial,
                disc: b.disc(pair.row, &pair.subset, &chi),
                corrupted: ledger.corrupted.len(),
                corrupted_mass: ledger.corrupted_mass(b),
            }))
        })
        .collect();
    let mut samples = Vec::new();
    let mut excluded = 0;
    for r in results {
        match r? {
            Some(s) => samples.push(s),
            None => excluded += 1,
        }
    }
    Ok(tail_report(samples, excluded, &cfg.lambdas, cfg.anchor))
}
