//! The random-walk full-coloring algorithm.
//!
//! Starting from `x = 0`, each step asks the strategy for an active set
//! `A(t)` and zero-discrepancy directions `Z(t)`, solves a vector coloring on
//! `A(t)` with `β = (1−δ)/2`, and moves `Δx(i) = γ⟨r, u_i⟩` for a uniformly
//! random sign vector `r`. A coordinate freezes once `|x(i)| ≥ 1 − 1/n`.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{norm, Factor, Matrix};
use crate::uvc::{projection_coloring, solve_uvc, UvcError, UvcProblem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("strategy violation at step {step}: {reason}")]
    StrategyViolation { step: usize, reason: String },
    #[error("vector coloring failed at step {step}: {source}")]
    Uvc { step: usize, source: UvcError },
}

/// The `m × n` matrix of entries `a_ji`, `|a_ji| ≤ 1`, stored densely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct InstanceMatrix {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

/// Sparse triplet form `{m, n, entries: [[row, col, value], ...]}`.
#[derive(Serialize, Deserialize)]
struct RawInstance {
    m: usize,
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TryFrom<RawInstance> for InstanceMatrix {
    type Error = EngineError;
    fn try_from(raw: RawInstance) -> Result<Self, Self::Error> {
        InstanceMatrix::from_triplets(raw.m, raw.n, &raw.entries)
    }
}

impl From<InstanceMatrix> for RawInstance {
    fn from(b: InstanceMatrix) -> Self {
        let mut entries = Vec::new();
        for j in 0..b.m {
            for i in 0..b.n {
                let v = b.get(j, i);
                if v != 0.0 {
                    entries.push((j, i, v));
                }
            }
        }
        RawInstance {
            m: b.m,
            n: b.n,
            entries,
        }
    }
}

impl InstanceMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, EngineError> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(EngineError::InvalidInstance("ragged rows".into()));
        }
        Self::from_dense(m, n, rows.concat())
    }

    pub fn from_dense(m: usize, n: usize, data: Vec<f64>) -> Result<Self, EngineError> {
        if m == 0 || n == 0 {
            return Err(EngineError::InvalidInstance("dimensions must be positive".into()));
        }
        if data.len() != m * n {
            return Err(EngineError::InvalidInstance(format!(
                "{} entries for a {m} x {n} matrix",
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite() || v.abs() > 1.0) {
            return Err(EngineError::InvalidInstance(format!(
                "entry ({}, {}) = {} is not in [-1, 1]",
                k / n,
                k % n,
                data[k]
            )));
        }
        Ok(Self { m, n, data })
    }

    pub fn from_triplets(m: usize, n: usize, entries: &[(usize, usize, f64)]) -> Result<Self, EngineError> {
        let mut data = vec![0.0; m * n];
        for &(j, i, v) in entries {
            if j >= m || i >= n {
                return Err(EngineError::InvalidInstance(format!(
                    "entry ({j}, {i}) outside {m} x {n}"
                )));
            }
            data[j * n + i] = v;
        }
        Self::from_dense(m, n, data)
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.data[j * self.n + i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn column_norms(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.m).map(|j| self.get(j, i).powi(2)).sum::<f64>().sqrt())
            .collect()
    }

    /// `Σ_{i∈S} a_ji x(i)`.
    pub fn disc(&self, j: usize, subset: &[usize], x: &[f64]) -> f64 {
        subset.iter().map(|&i| self.get(j, i) * x[i]).sum()
    }

    /// `‖Bx‖_∞`.
    pub fn max_disc(&self, x: &[f64]) -> f64 {
        (0..self.m)
            .map(|j| self.row(j).iter().zip(x).map(|(a, b)| a * b).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalState {
    x: Vec<f64>,
    alive: Vec<bool>,
    step: usize,
    threshold: f64,
}

impl FractionalState {
    pub fn new(n: usize) -> Self {
        Self {
            x: vec![0.0; n],
            alive: vec![true; n],
            step: 0,
            threshold: freeze_threshold(n),
        }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn is_alive(&self, i: usize) -> bool {
        self.alive[i]
    }

    pub fn alive_indices(&self) -> Vec<usize> {
        (0..self.x.len()).filter(|&i| self.alive[i]).collect()
    }

    pub fn alive_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    /// `Σ_i (1 − x(i)²)`.
    pub fn energy(&self) -> f64 {
        self.x.iter().map(|v| 1.0 - v * v).sum()
    }

    fn refresh(&mut self) {
        for (a, v) in self.alive.iter_mut().zip(&self.x) {
            if *a && v.abs() >= self.threshold {
                *a = false;
            }
        }
    }
}

/// `1 − 1/n`, with `n` floored at 2 so a single element is not born frozen.
pub fn freeze_threshold(n: usize) -> f64 {
    1.0 - 1.0 / n.max(2) as f64
}

/// The active set `A(t)` (ascending global indices) and the directions `w_k`,
/// each indexed by position in `active`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub active: Vec<usize>,
    pub directions: Vec<Vec<f64>>,
    /// Strategy-defined identifier per direction (row, set or box id).
    pub tags: Vec<usize>,
    pub delta_cap: f64,
}

impl ConstraintSet {
    pub fn unconstrained(active: Vec<usize>, delta_cap: f64) -> Self {
        Self {
            active,
            directions: Vec::new(),
            tags: Vec::new(),
            delta_cap,
        }
    }

    pub fn position(&self, i: usize) -> Option<usize> {
        self.active.binary_search(&i).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "RawPair")]
pub struct MonitoredPair {
    pub row: usize,
    /// Ascending element indices.
    pub subset: Vec<usize>,
}

#[derive(Deserialize)]
struct RawPair {
    row: usize,
    subset: Vec<usize>,
}

impl From<RawPair> for MonitoredPair {
    fn from(raw: RawPair) -> Self {
        MonitoredPair::new(raw.row, raw.subset)
    }
}

impl MonitoredPair {
    pub fn new(row: usize, mut subset: Vec<usize>) -> Self {
        subset.sort_unstable();
        subset.dedup();
        Self { row, subset }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.subset.binary_search(&i).is_ok()
    }
}

/// A player: chooses `A(t)`, `Z(t)`, and for each monitored pair the
/// constraints `H` whose sum is claimed to equal the restricted row.
pub trait Strategy: Send {
    fn name(&self) -> &str;

    /// Upper bound on `|Z(t)| / |A(t)|`.
    fn delta_cap(&self) -> f64;

    fn select(&mut self, state: &FractionalState) -> ConstraintSet;

    /// Indices into `cs.directions` forming the protection witness.
    fn witness(&mut self, _pair_index: usize, _pair: &MonitoredPair, _cs: &ConstraintSet) -> Vec<usize> {
        Vec::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionEvent {
    pub step: usize,
    pub elements: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRejection {
    pub step: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessClaim {
    pub step: usize,
    pub constraints: Vec<usize>,
    pub protected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairLedger {
    pub pair: MonitoredPair,
    pub corrupted: BTreeSet<usize>,
    pub events: Vec<CorruptionEvent>,
    pub rejections: Vec<WitnessRejection>,
    /// Witness changes, recorded whenever `H` or `|S′|` differs from the last claim.
    pub claims: Vec<WitnessClaim>,
    /// Steps at which a relaxed (non-exact) witness was accepted.
    pub slack_steps: usize,
}

impl PairLedger {
    fn new(pair: MonitoredPair) -> Self {
        Self {
            pair,
            corrupted: BTreeSet::new(),
            events: Vec::new(),
            rejections: Vec::new(),
            claims: Vec::new(),
            slack_steps: 0,
        }
    }

    /// `Σ_{i∈C} a_ji²`.
    pub fn corrupted_mass(&self, b: &InstanceMatrix) -> f64 {
        self.corrupted
            .iter()
            .map(|&i| b.get(self.pair.row, i).powi(2))
            .sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorruptionLedger {
    pub pairs: Vec<PairLedger>,
}

impl CorruptionLedger {
    pub fn new(monitors: &[MonitoredPair]) -> Self {
        Self {
            pairs: monitors.iter().cloned().map(PairLedger::new).collect(),
        }
    }
}

/// Checks the strategy's witnesses for every monitored pair against `cs`
/// and grows the corrupted sets.
pub fn update_ledger(
    ledger: &mut CorruptionLedger,
    b: &InstanceMatrix,
    cs: &ConstraintSet,
    strategy: &mut dyn Strategy,
    step: usize,
    params: &WalkParams,
) {
    for (idx, pl) in ledger.pairs.iter_mut().enumerate() {
        let pair = pl.pair.clone();
        let in_play: Vec<(usize, usize)> = if cs.active.len() < pair.subset.len() {
            cs.active
                .iter()
                .enumerate()
                .filter(|&(_, &i)| pair.contains(i))
                .map(|(p, &i)| (i, p))
                .collect()
        } else {
            pair.subset
                .iter()
                .filter_map(|&i| cs.position(i).map(|p| (i, p)))
                .collect()
        };
        if in_play.is_empty() {
            continue;
        }
        let h = strategy.witness(idx, &pair, cs);
        let mut new_corrupt = Vec::new();
        match check_witness(b, &pair, cs, &h, &in_play, params) {
            Ok(check) => {
                if check.slack {
                    pl.slack_steps += 1;
                }
                new_corrupt = check
                    .unprotected
                    .into_iter()
                    .filter(|i| !pl.corrupted.contains(i))
                    .collect();
                let protected = in_play.len() - new_corrupt.len();
                let changed = pl
                    .claims
                    .last()
                    .is_none_or(|c| c.constraints != h || c.protected != protected);
                if changed {
                    pl.claims.push(WitnessClaim {
                        step,
                        constraints: h,
                        protected,
                    });
                }
            }
            Err(reason) => {
                pl.rejections.push(WitnessRejection { step, reason });
                for &(i, _) in &in_play {
                    if !pl.corrupted.contains(&i) {
                        new_corrupt.push(i);
                    }
                }
            }
        }
        if !new_corrupt.is_empty() {
            pl.corrupted.extend(new_corrupt.iter().copied());
            pl.events.push(CorruptionEvent {
                step,
                elements: new_corrupt,
            });
        }
    }
}

struct WitnessCheck {
    unprotected: Vec<usize>,
    slack: bool,
}

fn check_witness(
    b: &InstanceMatrix,
    pair: &MonitoredPair,
    cs: &ConstraintSet,
    h: &[usize],
    in_play: &[(usize, usize)],
    params: &WalkParams,
) -> Result<WitnessCheck, String> {
    let a_len = cs.active.len();
    let mut sigma = vec![0.0; a_len];
    for &k in h {
        let w = cs
            .directions
            .get(k)
            .ok_or_else(|| format!("constraint {k} not in Z(t)"))?;
        for (p, &v) in w.iter().enumerate() {
            if v != 0.0 {
                if !pair.contains(cs.active[p]) {
                    return Err(format!(
                        "constraint {k} is not eligible: element {} outside S",
                        cs.active[p]
                    ));
                }
                sigma[p] += v;
            }
        }
    }
    let j = pair.row;
    let v_norm = in_play
        .iter()
        .map(|&(i, _)| b.get(j, i).powi(2))
        .sum::<f64>()
        .sqrt();
    let tol = (params.witness_tol * v_norm).max(1e-12);
    let mut unprotected = Vec::new();
    let mut slack = false;
    for &(i, p) in in_play {
        let a = b.get(j, i);
        if (sigma[p] - a).abs() <= tol {
            continue;
        }
        unprotected.push(i);
        if sigma[p].abs() <= tol {
            continue;
        }
        // relaxed witness on an unprotected element: |σ_i| = O(|a_ji|)
        if sigma[p].abs() <= params.relax_factor * a.abs() + tol {
            slack = true;
        } else {
            return Err(format!(
                "sum of witness constraints is {} at element {i}, row entry {a}",
                sigma[p]
            ));
        }
    }
    Ok(WitnessCheck { unprotected, slack })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepSize {
    /// `γ_t = max_step / (max_i ‖u_i‖ · √|A(t)|)`.
    Adaptive { max_step: f64 },
    Fixed(f64),
}

impl Default for StepSize {
    fn default() -> Self {
        StepSize::Adaptive { max_step: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkParams {
    pub step: StepSize,
    /// `None` means `⌈200 n ln n⌉` (at least 1000).
    pub max_steps: Option<usize>,
    pub epsilon: f64,
    pub seed: u64,
    /// RNG stream, normally the trial index.
    pub stream: u64,
    pub solver_tol: f64,
    pub witness_tol: f64,
    pub relax_factor: f64,
    /// Record per-step trace rows.
    pub record_trace: bool,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self {
            step: StepSize::default(),
            max_steps: None,
            epsilon: 0.25,
            seed: 0,
            stream: 0,
            solver_tol: 1e-7,
            witness_tol: 1e-9,
            relax_factor: 1.0,
            record_trace: true,
        }
    }
}

impl WalkParams {
    pub fn with_seed(seed: u64, stream: u64) -> Self {
        Self {
            seed,
            stream,
            ..Self::default()
        }
    }

    pub fn max_steps_for(&self, n: usize) -> usize {
        self.max_steps.unwrap_or_else(|| default_max_steps(n))
    }

    fn validate(&self) -> Result<(), EngineError> {
        let bad = |s: String| Err(EngineError::InvalidParams(s));
        match self.step {
            StepSize::Adaptive { max_step } if !(max_step > 0.0 && max_step.is_finite()) => {
                return bad(format!("max step {max_step} must be positive"))
            }
            StepSize::Fixed(g) if !(g > 0.0 && g.is_finite()) => {
                return bad(format!("gamma {g} must be positive"))
            }
            _ => {}
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon {} must lie in (0, 1)", self.epsilon));
        }
        if !(self.solver_tol > 0.0) {
            return bad("solver tolerance must be positive".into());
        }
        Ok(())
    }
}

pub fn default_max_steps(n: usize) -> usize {
    let nf = n as f64;
    ((200.0 * nf * nf.ln()).ceil() as usize).max(1000)
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub active: Vec<usize>,
    pub constraints: Vec<usize>,
    pub gamma: Vec<f64>,
    /// `max_k |Σ_i w_k(i) Δx(i)|` per step.
    pub residual: Vec<f64>,
    /// Energy after each step; `energy[0]` is the initial `n`.
    pub energy: Vec<f64>,
}

impl RunTrace {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub active: usize,
    pub constraints: usize,
    pub gamma: f64,
    pub residual: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub coloring: Vec<i8>,
    pub fractional: Vec<f64>,
    pub steps: usize,
    pub terminated: bool,
    pub trace: RunTrace,
    pub ledger: CorruptionLedger,
}

/// Colors `χ`: frozen coordinates by the threshold rule, alive ones by sign
/// with ties going to `+1`.
pub fn finalize(state: &FractionalState) -> Vec<i8> {
    state
        .x
        .iter()
        .zip(&state.alive)
        .map(|(&v, &alive)| {
            if alive {
                if v >= 0.0 {
                    1
                } else {
                    -1
                }
            } else if v >= state.threshold {
                1
            } else {
                -1
            }
        })
        .collect()
}

/// `Δx(i) = γ ⟨r, u_i⟩` for a uniformly random sign vector `r`.
pub fn sample_update(vectors: &Factor, gamma: f64, rng: &mut impl Rng) -> Vec<f64> {
    let r: Vec<f64> = (0..vectors.dim())
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    (0..vectors.len())
        .map(|i| gamma * vectors.vector(i).iter().zip(&r).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

/// Runs one walk to completion; owns the state, RNG and coloring cache.
pub struct Walker {
    params: WalkParams,
    state: FractionalState,
    rng: ChaCha8Rng,
    cache: Option<(ConstraintSet, Factor)>,
}

impl Walker {
    pub fn new(b: &InstanceMatrix, params: WalkParams) -> Result<Self, EngineError> {
        params.validate()?;
        let rng = stream_rng(params.seed, params.stream);
        Ok(Self {
            state: FractionalState::new(b.cols()),
            params,
            rng,
            cache: None,
        })
    }

    pub fn state(&self) -> &FractionalState {
        &self.state
    }

    fn validate(&self, cs: &ConstraintSet) -> Result<(), EngineError> {
        let step = self.state.step;
        let violation = |reason: String| Err(EngineError::StrategyViolation { step, reason });
        if cs.active.is_empty() {
            return violation("empty active set".into());
        }
        if cs.delta_cap > 1.0 - self.params.epsilon + 1e-12 {
            return violation(format!(
                "delta cap {} exceeds 1 - epsilon = {}",
                cs.delta_cap,
                1.0 - self.params.epsilon
            ));
        }
        if !cs.active.windows(2).all(|w| w[0] < w[1]) {
            return violation("active set not strictly ascending".into());
        }
        if let Some(&i) = cs.active.iter().find(|&&i| i >= self.state.n() || !self.state.alive[i]) {
            return violation(format!("element {i} is active but not alive"));
        }
        if cs.directions.len() as f64 > cs.delta_cap * cs.active.len() as f64 {
            return violation(format!(
                "{} constraints on {} active elements exceed cap {}",
                cs.directions.len(),
                cs.active.len(),
                cs.delta_cap
            ));
        }
        if cs.tags.len() != cs.directions.len() {
            return violation("one tag per constraint required".into());
        }
        for (k, w) in cs.directions.iter().enumerate() {
            if w.len() != cs.active.len() {
                return violation(format!("constraint {k} has wrong length"));
            }
            if w.iter().all(|&v| v == 0.0) {
                return violation(format!("constraint {k} is zero"));
            }
        }
        Ok(())
    }

    fn coloring_for(&mut self, cs: &ConstraintSet) -> Result<Factor, EngineError> {
        if let Some((cached, f)) = &self.cache {
            if cached == cs {
                return Ok(f.clone());
            }
        }
        let a = cs.active.len();
        let factor = if cs.directions.is_empty() {
            Factor {
                vectors: Matrix::identity(a),
            }
        } else {
            let step = self.state.step;
            let beta = (1.0 - cs.delta_cap) / 2.0;
            let wrap = |source| EngineError::Uvc { step, source };
            let problem = UvcProblem::new(a, cs.directions.clone(), beta).map_err(wrap)?;
            match projection_coloring(&problem, self.params.solver_tol).map_err(wrap)? {
                Some(v) => v.vectors,
                None => solve_uvc(&problem, self.params.solver_tol).map_err(wrap)?.vectors,
            }
        };
        self.cache = Some((cs.clone(), factor.clone()));
        Ok(factor)
    }

    /// One walk step on `cs`.
    pub fn step(&mut self, cs: &ConstraintSet) -> Result<StepRecord, EngineError> {
        self.validate(cs)?;
        let factor = self.coloring_for(cs)?;
        let a = cs.active.len();
        let gamma = match self.params.step {
            StepSize::Fixed(g) => g,
            StepSize::Adaptive { max_step } => {
                let umax = factor.norms().into_iter().fold(0.0, f64::max);
                if umax > 0.0 {
                    max_step / (umax * (a as f64).sqrt())
                } else {
                    max_step
                }
            }
        };
        let mut dx = sample_update(&factor, gamma, &mut self.rng);

        // shrink the whole step so no coordinate leaves [-1, 1]
        let mut alpha: f64 = 1.0;
        for (p, &i) in cs.active.iter().enumerate() {
            let x = self.state.x[i];
            let d = dx[p];
            if d > 0.0 && x + d > 1.0 {
                alpha = alpha.min((1.0 - x) / d);
            } else if d < 0.0 && x + d < -1.0 {
                alpha = alpha.min((-1.0 - x) / d);
            }
        }
        if alpha < 1.0 {
            dx.iter_mut().for_each(|d| *d *= alpha);
        }
        for (p, &i) in cs.active.iter().enumerate() {
            self.state.x[i] = (self.state.x[i] + dx[p]).clamp(-1.0, 1.0);
        }

        let residual = cs
            .directions
            .iter()
            .map(|w| w.iter().zip(&dx).map(|(a, b)| a * b).sum::<f64>().abs())
            .fold(0.0, f64::max);
        self.state.step += 1;
        self.state.refresh();
        Ok(StepRecord {
            active: a,
            constraints: cs.directions.len(),
            gamma: gamma * alpha,
            residual,
            energy: self.state.energy(),
        })
    }
}

/// Runs the walk until every coordinate freezes or the step cap is hit,
/// then rounds.
pub fn run(
    b: &InstanceMatrix,
    strategy: &mut dyn Strategy,
    params: &WalkParams,
    monitors: &[MonitoredPair],
) -> Result<RunOutcome, EngineError> {
    let n = b.cols();
    for (k, pair) in monitors.iter().enumerate() {
        if pair.row >= b.rows() || pair.subset.iter().any(|&i| i >= n) {
            return Err(EngineError::InvalidParams(format!(
                "monitored pair {k} outside the instance"
            )));
        }
    }
    let mut walker = Walker::new(b, params.clone())?;
    let mut ledger = CorruptionLedger::new(monitors);
    let mut trace = RunTrace::default();
    if params.record_trace {
        trace.energy.push(walker.state.energy());
    }
    let max_steps = params.max_steps_for(n);
    let mut last_cs: Option<ConstraintSet> = None;
    while walker.state.alive_count() > 0 && walker.state.step < max_steps {
        let cs = strategy.select(&walker.state);
        if last_cs.as_ref() != Some(&cs) {
            walker.validate(&cs)?;
            update_ledger(&mut ledger, b, &cs, strategy, walker.state.step, params);
        }
        let rec = walker.step(&cs)?;
        if params.record_trace {
            trace.active.push(rec.active);
            trace.constraints.push(rec.constraints);
            trace.gamma.push(rec.gamma);
            trace.residual.push(rec.residual);
            trace.energy.push(rec.energy);
        }
        last_cs = Some(cs);
    }
    let terminated = walker.state.alive_count() == 0;
    Ok(RunOutcome {
        coloring: finalize(&walker.state),
        fractional: walker.state.x.clone(),
        steps: walker.state.step,
        terminated,
        trace,
        ledger,
    })
}

/// `‖Σ_i w(i) u_i‖` restricted to the active coordinates, for diagnostics.
pub fn vector_discrepancy(vectors: &Factor, w: &[f64]) -> f64 {
    let mut s = vec![0.0; vectors.dim()];
    for (i, wi) in w.iter().enumerate() {
        for (sk, uk) in s.iter_mut().zip(vectors.vector(i)) {
            *sk += wi * uk;
        }
    }
    norm(&s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::{BeckFiala, SetSystem, Unconstrained, ZeroSum};

    fn ones(n: usize) -> InstanceMatrix {
        InstanceMatrix::from_rows(&[vec![1.0; n]]).unwrap()
    }

    #[test]
    fn finalize_rules() {
        let mut st = FractionalState::new(2);
        st.x = vec![0.9999, -0.9999];
        st.refresh();
        assert_eq!(finalize(&st), vec![1, -1]);
        let st = FractionalState::new(3);
        assert_eq!(finalize(&st), vec![1, 1, 1]);
    }

    #[test]
    fn single_element_is_symmetric() {
        let b = ones(1);
        let mut plus = 0;
        let trials = 400;
        for s in 0..trials {
            let out = run(&b, &mut Unconstrained, &WalkParams::with_seed(7, s), &[]).unwrap();
            assert!(out.terminated);
            if out.coloring[0] == 1 {
                plus += 1;
            }
        }
        let p = plus as f64 / trials as f64;
        assert!((p - 0.5).abs() < 5.0 * (0.25 / trials as f64).sqrt(), "{p}");
    }

    #[test]
    fn zero_sum_constraint_holds_each_step() {
        let n = 10;
        let b = ones(n);
        let monitors = vec![MonitoredPair::new(0, (0..n).collect())];
        let out = run(&b, &mut ZeroSum, &WalkParams::with_seed(3, 0), &monitors).unwrap();
        assert!(out.terminated);
        assert!(out.trace.max_residual() < 1e-12);
        let disc: f64 = out.coloring.iter().map(|&c| c as f64).sum();
        // the fractional sum stays 0 until one element is left
        let frac: f64 = out.fractional.iter().sum();
        assert!(frac.abs() <= 1.0 + 1e-9, "{frac}");
        assert!(disc.abs() <= 2.0, "{disc}");
    }

    #[test]
    fn runs_are_deterministic() {
        let sys = SetSystem::new(12, (0..12).map(|j| (0..12).filter(|i| (i + j) % 4 == 0).collect()).collect(), Some(3)).unwrap();
        let b = sys.incidence().unwrap();
        let p = WalkParams::with_seed(11, 2);
        let a = run(&b, &mut BeckFiala::new(&sys).unwrap(), &p, &sys.monitors()).unwrap();
        let c = run(&b, &mut BeckFiala::new(&sys).unwrap(), &p, &sys.monitors()).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn frozen_coordinates_never_move() {
        let b = ones(6);
        let mut walker = Walker::new(&b, WalkParams::with_seed(5, 0)).unwrap();
        let mut frozen: Vec<Option<u64>> = vec![None; 6];
        while walker.state().alive_count() > 0 {
            let cs = ZeroSum.select(walker.state());
            walker.step(&cs).unwrap();
            for i in 0..6 {
                let bits = walker.state().x()[i].to_bits();
                match frozen[i] {
                    Some(prev) => assert_eq!(prev, bits),
                    None if !walker.state().is_alive(i) => frozen[i] = Some(bits),
                    None => {}
                }
                assert!(walker.state().x()[i].abs() <= 1.0);
            }
        }
    }

    #[test]
    fn update_moments_match() {
        let rows = vec![vec![0.6, 0.0, 0.8], vec![0.0, 1.0, 0.0], vec![0.3, -0.4, 0.0]];
        let f = Factor {
            vectors: Matrix::from_rows(&rows).unwrap(),
        };
        let gamma = 0.1;
        let mut rng = stream_rng(1, 0);
        let trials = 10_000;
        let mut sum = [0.0; 3];
        let mut sq = [0.0; 3];
        for _ in 0..trials {
            let d = sample_update(&f, gamma, &mut rng);
            for i in 0..3 {
                sum[i] += d[i];
                sq[i] += d[i] * d[i];
            }
        }
        for i in 0..3 {
            let var = gamma * gamma * norm(&rows[i]).powi(2);
            let mean = sum[i] / trials as f64;
            assert!(mean.abs() < 5.0 * (var / trials as f64).sqrt());
            let second = sq[i] / trials as f64;
            // fourth moment of ⟨r,u⟩ is at most 3‖u‖⁴
            let sd = (3.0 * var * var / trials as f64).sqrt();
            assert!((second - var).abs() < 5.0 * sd, "{second} vs {var}");
        }
    }

    #[test]
    fn strategy_violations_are_reported() {
        struct Greedy;
        impl Strategy for Greedy {
            fn name(&self) -> &str {
                "greedy"
            }
            fn delta_cap(&self) -> f64 {
                0.25
            }
            fn select(&mut self, state: &FractionalState) -> ConstraintSet {
                let active = state.alive_indices();
                let k = active.len();
                ConstraintSet {
                    directions: vec![vec![1.0; k], vec![1.0; k]],
                    tags: vec![0, 1],
                    active,
                    delta_cap: 0.25,
                }
            }
        }
        let err = run(&ones(4), &mut Greedy, &WalkParams::default(), &[]).unwrap_err();
        assert!(matches!(err, EngineError::StrategyViolation { step: 0, .. }));
    }

    #[test]
    fn ledger_rejects_bad_witness() {
        struct Liar;
        impl Strategy for Liar {
            fn name(&self) -> &str {
                "liar"
            }
            fn delta_cap(&self) -> f64 {
                0.5
            }
            fn select(&mut self, state: &FractionalState) -> ConstraintSet {
                let active = state.alive_indices();
                let k = active.len();
                ConstraintSet {
                    directions: vec![vec![2.0; k]],
                    tags: vec![0],
                    active,
                    delta_cap: 0.5,
                }
            }
            fn witness(&mut self, _: usize, _: &MonitoredPair, _: &ConstraintSet) -> Vec<usize> {
                vec![0]
            }
        }
        let b = ones(4);
        let mut ledger = CorruptionLedger::new(&[MonitoredPair::new(0, vec![0, 1, 2, 3])]);
        let cs = Liar.select(&FractionalState::new(4));
        update_ledger(&mut ledger, &b, &cs, &mut Liar, 0, &WalkParams::default());
        assert_eq!(ledger.pairs[0].rejections.len(), 1);
        assert_eq!(ledger.pairs[0].corrupted.len(), 4);
    }

    #[test]
    fn instance_json_round_trip() {
        let b = InstanceMatrix::from_rows(&[vec![0.5, 0.0], vec![-1.0, 0.25]]).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        let back: InstanceMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(b, back);
        assert!(InstanceMatrix::from_rows(&[vec![1.5]]).is_err());
    }
}
