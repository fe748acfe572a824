//! Players for the walk: each picks the active set, the zero-discrepancy
//! directions, and the protection witnesses for monitored pairs.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{ConstraintSet, EngineError, FractionalState, InstanceMatrix, MonitoredPair, Strategy};
use crate::geometry::{decompose_box, AxisBox, CanonicalBoxTree, PointSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("invalid set system: {0}")]
    InvalidSetSystem(String),
    #[error("element {element} lies in {count} sets, sparsity is {t}")]
    SparsityViolation { element: usize, count: usize, t: usize },
    #[error("column {column} has norm {norm}, must be at most 1")]
    ColumnNorm { column: usize, norm: f64 },
    #[error("invalid vector sequence: {0}")]
    InvalidSequence(String),
    #[error(transparent)]
    Instance(#[from] EngineError),
}

/// Sets `S_1..S_m` over `[n]`, with an optional declared sparsity `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetSystem {
    pub n: usize,
    pub sets: Vec<Vec<usize>>,
    #[serde(default)]
    pub sparsity: Option<usize>,
}

impl SetSystem {
    pub fn new(n: usize, mut sets: Vec<Vec<usize>>, sparsity: Option<usize>) -> Result<Self, StrategyError> {
        for (j, s) in sets.iter_mut().enumerate() {
            s.sort_unstable();
            s.dedup();
            if let Some(&i) = s.iter().find(|&&i| i >= n) {
                return Err(StrategyError::InvalidSetSystem(format!(
                    "set {j} contains {i}, universe has {n} elements"
                )));
            }
        }
        let sys = Self { n, sets, sparsity };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        if let Some(t) = self.sparsity {
            for (element, count) in self.degrees().into_iter().enumerate() {
                if count > t {
                    return Err(StrategyError::SparsityViolation { element, count, t });
                }
            }
        }
        Ok(())
    }

    /// Number of sets containing each element.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for s in &self.sets {
            for &i in s {
                deg[i] += 1;
            }
        }
        deg
    }

    /// The `m × n` incidence matrix.
    pub fn incidence(&self) -> Result<InstanceMatrix, EngineError> {
        let entries: Vec<(usize, usize, f64)> = self
            .sets
            .iter()
            .enumerate()
            .flat_map(|(j, s)| s.iter().map(move |&i| (j, i, 1.0)))
            .collect();
        InstanceMatrix::from_triplets(self.sets.len(), self.n, &entries)
    }

    /// One pair `(j, S_j)` per set.
    pub fn monitors(&self) -> Vec<MonitoredPair> {
        self.sets
            .iter()
            .enumerate()
            .map(|(j, s)| MonitoredPair::new(j, s.clone()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormRegime {
    Linf,
    L2,
}

/// Vectors `v_1..v_n ∈ ℝ^d` with `‖v_i‖ ≤ 1` in the declared norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorSequence {
    pub d: usize,
    pub vectors: Vec<Vec<f64>>,
    pub norm: NormRegime,
}

impl VectorSequence {
    pub fn new(d: usize, vectors: Vec<Vec<f64>>, norm: NormRegime) -> Result<Self, StrategyError> {
        let seq = Self { d, vectors, norm };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        if self.d == 0 {
            return Err(StrategyError::InvalidSequence("dimension must be positive".into()));
        }
        for (i, v) in self.vectors.iter().enumerate() {
            if v.len() != self.d {
                return Err(StrategyError::InvalidSequence(format!(
                    "vector {i} has {} coordinates, expected {}",
                    v.len(),
                    self.d
                )));
            }
            let size = match self.norm {
                NormRegime::Linf => v.iter().fold(0.0f64, |a, x| a.max(x.abs())),
                NormRegime::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            };
            if !(size <= 1.0 + 1e-12) {
                return Err(StrategyError::InvalidSequence(format!(
                    "vector {i} has norm {size} > 1"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// The `d × n` matrix whose columns are the vectors.
    pub fn instance(&self) -> Result<InstanceMatrix, EngineError> {
        let n = self.vectors.len();
        let data = (0..self.d)
            .flat_map(|j| self.vectors.iter().map(move |v| v[j]))
            .collect();
        InstanceMatrix::from_dense(self.d, n, data)
    }

    /// Pairs `(j, {0..k})` for every coordinate `j` and prefix length `k`.
    pub fn prefix_monitors(&self) -> Vec<MonitoredPair> {
        let n = self.vectors.len();
        (0..self.d)
            .flat_map(|j| (1..=n).map(move |k| MonitoredPair::new(j, (0..k).collect())))
            .collect()
    }
}

fn restrict(active: &[usize], f: impl Fn(usize) -> f64) -> Vec<f64> {
    active.iter().map(|&i| f(i)).collect()
}

fn witness_by_tag(pair: &MonitoredPair, cs: &ConstraintSet) -> Vec<usize> {
    cs.tags
        .iter()
        .enumerate()
        .filter(|&(_, &t)| t == pair.row)
        .map(|(k, _)| k)
        .collect()
}

/// All alive elements active; constraints are the alive restrictions of the
/// sets holding more than `4t` alive elements.
#[derive(Debug, Clone)]
pub struct BeckFiala {
    sets: Vec<Vec<usize>>,
    t: usize,
}

impl BeckFiala {
    pub fn new(sys: &SetSystem) -> Result<Self, StrategyError> {
        let t = sys.sparsity.ok_or_else(|| {
            StrategyError::InvalidSetSystem("Beck-Fiala needs a declared sparsity".into())
        })?;
        sys.validate()?;
        Ok(Self {
            sets: sys.sets.clone(),
            t,
        })
    }

    pub fn threshold(&self) -> usize {
        4 * self.t
    }
}

impl Strategy for BeckFiala {
    fn name(&self) -> &str {
        "beck-fiala"
    }

    fn delta_cap(&self) -> f64 {
        0.25
    }

    fn select(&mut self, state: &FractionalState) -> ConstraintSet {
        let active = state.alive_indices();
        let mut cs = ConstraintSet::unconstrained(active, self.delta_cap());
        for (j, s) in self.sets.iter().enumerate() {
            let alive = s.iter().filter(|&&i| state.is_alive(i)).count();
            if alive > self.threshold() {
                cs.directions
                    .push(restrict(&cs.active, |i| if s.binary_search(&i).is_ok() { 1.0 } else { 0.0 }));
                cs.tags.push(j);
            }
        }
        cs
    }

    fn witness(&mut self, _: usize, pair: &MonitoredPair, cs: &ConstraintSet) -> Vec<usize> {
        witness_by_tag(pair, cs)
    }
}

/// All alive elements active; constraints are the alive restrictions of the
/// rows whose alive squared mass exceeds 4.
#[derive(Debug, Clone)]
pub struct Komlos {
    b: InstanceMatrix,
}

impl Komlos {
    pub fn new(b: &InstanceMatrix) -> Result<Self, StrategyError> {
        if let Some((column, norm)) = b
            .column_norms()
            .into_iter()
            .enumerate()
            .find(|(_, v)| *v > 1.0 + 1e-12)
        {
            return Err(StrategyError::ColumnNorm { column, norm });
        }
        Ok(Self { b: b.clone() })
    }
}

impl Strategy for Komlos {
    fn name(&self) -> &str {
        "komlos"
    }

    fn delta_cap(&self) -> f64 {
        0.25
    }

    fn select(&mut self, state: &FractionalState) -> ConstraintSet {
        let active = state.alive_indices();
        let mut cs = ConstraintSet::unconstrained(active, self.delta_cap());
        for j in 0..self.b.rows() {
            let mass: f64 = cs.active.iter().map(|&i| self.b.get(j, i).powi(2)).sum();
            if mass > 4.0 {
                cs.directions.push(restrict(&cs.active, |i| self.b.get(j, i)));
                cs.tags.push(j);
            }
        }
        cs
    }

    fn witness(&mut self, _: usize, pair: &MonitoredPair, cs: &ConstraintSet) -> Vec<usize> {
        witness_by_tag(pair, cs)
    }
}

/// All alive elements active; constraints are the canonical boxes of the
/// alive set, rebuilt each time the alive count first drops to `n/2^k`.
#[derive(Debug, Clone)]
pub struct Tusnady {
    points: PointSet,
    ell_override: Option<usize>,
    epoch_k: Option<u32>,
    epochs: usize,
    tree: Option<CanonicalBoxTree>,
    parts: HashMap<usize, Vec<usize>>,
    truncations: usize,
}

impl Tusnady {
    pub fn new(points: &PointSet, ell_override: Option<usize>) -> Self {
        Self {
            points: points.clone(),
            ell_override,
            epoch_k: None,
            epochs: 0,
            tree: None,
            parts: HashMap::new(),
            truncations: 0,
        }
    }

    /// Number of times the canonical boxes were rebuilt.
    pub fn epochs(&self) -> usize {
        self.epochs
    }

    /// Steps at which more boxes were available than the cap allowed.
    pub fn truncations(&self) -> usize {
        self.truncations
    }

    pub fn tree(&self) -> Option<&CanonicalBoxTree> {
        self.tree.as_ref()
    }

    /// Monitors `(0, R ∩ P)` for the given boxes over the all-ones row.
    pub fn monitors(&self, boxes: &[AxisBox]) -> Vec<MonitoredPair> {
        boxes
            .iter()
            .map(|r| MonitoredPair::new(0, r.members(&self.points)))
            .collect()
    }
}

impl Strategy for Tusnady {
    fn name(&self) -> &str {
        "tusnady"
    }

    fn delta_cap(&self) -> f64 {
        0.25
    }

    fn select(&mut self, state: &FractionalState) -> ConstraintSet {
        let active = state.alive_indices();
        let n = self.points.len();
        let k = (n / active.len().max(1)).ilog2();
        if self.epoch_k != Some(k) {
            self.epoch_k = Some(k);
            self.epochs += 1;
            self.tree = Some(CanonicalBoxTree::build_on(&self.points, &active, self.ell_override));
            self.parts.clear();
        }
        let tree = self.tree.as_ref().expect("tree built above");
        let mut candidates: Vec<(usize, Vec<f64>, usize)> = Vec::new();
        for (id, leaf) in tree.leaves().iter().enumerate() {
            let w = restrict(&active, |i| if leaf.points.binary_search(&i).is_ok() { 1.0 } else { 0.0 });
            let alive = w.iter().filter(|&&v| v != 0.0).count();
            if alive > 0 {
                candidates.push((id, w, alive));
            }
        }
        let cap = (self.delta_cap() * active.len() as f64).floor() as usize;
        if candidates.len() > cap {
            self.truncations += 1;
            candidates.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));
            candidates.truncate(cap);
            candidates.sort_by_key(|c| c.0);
        }
        let mut cs = ConstraintSet::unconstrained(active, self.delta_cap());
        for (id, w, _) in candidates {
            cs.directions.push(w);
            cs.tags.push(id);
        }
        cs
    }

    fn witness(&mut self, pair_index: usize, pair: &MonitoredPair, cs: &ConstraintSet) -> Vec<usize> {
        let Some(tree) = self.tree.as_ref() else {
            return Vec::new();
        };
        let points = &self.points;
        let parts = self.parts.entry(pair_index).or_insert_with(|| {
            let sub = PointSet::new(
                points.dim(),
                pair.subset.iter().map(|&i| points.point(i).to_vec()).collect(),
            )
            .expect("subset of a valid point set");
            let Some(bbox) = AxisBox::new(vec![f64::NEG_INFINITY; points.dim()], vec![f64::INFINITY; points.dim()])
                .shrink_to(&sub)
            else {
                return Vec::new();
            };
            let mut p = decompose_box(&bbox, tree, points).map(|d| d.parts).unwrap_or_default();
            p.sort_unstable();
            p
        });
        cs.tags
            .iter()
            .enumerate()
            .filter(|(_, t)| parts.binary_search(t).is_ok())
            .map(|(k, _)| k)
            .collect()
    }
}

/// The first `2d` alive elements are active; once there are `2d` of them,
/// the `d` coordinate rows restricted to them are constrained.
#[derive(Debug, Clone)]
pub struct Steinitz {
    b: InstanceMatrix,
    d: usize,
    norm: NormRegime,
}

impl Steinitz {
    pub fn new(seq: &VectorSequence) -> Result<Self, StrategyError> {
        seq.validate()?;
        Ok(Self {
            b: seq.instance()?,
            d: seq.d,
            norm: seq.norm,
        })
    }
}

impl Strategy for Steinitz {
    fn name(&self) -> &str {
        match self.norm {
            NormRegime::Linf => "steinitz-linf",
            NormRegime::L2 => "steinitz-l2",
        }
    }

    fn delta_cap(&self) -> f64 {
        0.5
    }

    fn select(&mut self, state: &FractionalState) -> ConstraintSet {
        let window = 2 * self.d;
        let active: Vec<usize> = (0..state.n()).filter(|&i| state.is_alive(i)).take(window).collect();
        let mut cs = ConstraintSet::unconstrained(active, self.delta_cap());
        if cs.active.len() == window {
            for j in 0..self.d {
                let w = restrict(&cs.active, |i| self.b.get(j, i));
                if w.iter().any(|&v| v != 0.0) {
                    cs.directions.push(w);
                    cs.tags.push(j);
                }
            }
        }
        cs
    }

    fn witness(&mut self, _: usize, pair: &MonitoredPair, cs: &ConstraintSet) -> Vec<usize> {
        if cs.active.iter().all(|&i| pair.contains(i)) {
            witness_by_tag(pair, cs)
        } else {
            Vec::new()
        }
    }
}

/// All alive elements active, no constraints.
#[derive(Debug, Clone, Default)]
pub struct Unconstrained;

impl Strategy for Unconstrained {
    fn name(&self) -> &str {
        "unconstrained"
    }

    fn delta_cap(&self) -> f64 {
        0.25
    }

    fn select(&mut self, state: &FractionalState) -> ConstraintSet {
        ConstraintSet::unconstrained(state.alive_indices(), self.delta_cap())
    }
}

/// All alive elements active with the single constraint `Σ_{i∈A} Δx(i) = 0`
/// whenever at least two are alive.
#[derive(Debug, Clone, Default)]
pub struct ZeroSum;

impl Strategy for ZeroSum {
    fn name(&self) -> &str {
        "zero-sum"
    }

    fn delta_cap(&self) -> f64 {
        0.5
    }

    fn select(&mut self, state: &FractionalState) -> ConstraintSet {
        let active = state.alive_indices();
        let mut cs = ConstraintSet::unconstrained(active, self.delta_cap());
        if cs.active.len() >= 2 {
            cs.directions.push(vec![1.0; cs.active.len()]);
            cs.tags.push(0);
        }
        cs
    }

    fn witness(&mut self, _: usize, pair: &MonitoredPair, cs: &ConstraintSet) -> Vec<usize> {
        witness_by_tag(pair, cs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    BeckFiala,
    Komlos,
    Tusnady,
    SteinitzLinf,
    SteinitzL2,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::BeckFiala => "beck-fiala",
            StrategyKind::Komlos => "komlos",
            StrategyKind::Tusnady => "tusnady",
            StrategyKind::SteinitzLinf => "steinitz-linf",
            StrategyKind::SteinitzL2 => "steinitz-l2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            StrategyKind::BeckFiala,
            StrategyKind::Komlos,
            StrategyKind::Tusnady,
            StrategyKind::SteinitzLinf,
            StrategyKind::SteinitzL2,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}
