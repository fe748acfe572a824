//! Instance generators, file formats, run reports and scaling sweeps.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`; trial `k`
//! of a sweep uses stream `k` of that generator, so every trial is
//! reproducible on its own.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engine::{run, stream_rng, EngineError, InstanceMatrix, MonitoredPair, Strategy, WalkParams};
use crate::geometry::{AxisBox, PointSet};
use crate::oracles::{max_box_discrepancy, prefix_disc, OracleError};
use crate::strategies::{
    BeckFiala, Komlos, NormRegime, SetSystem, Steinitz, StrategyError, StrategyKind, Tusnady,
    VectorSequence,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("strategy {strategy} does not apply to a {kind} instance")]
    Incompatible { strategy: String, kind: String },
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    BeckFiala,
    Komlos,
    PointsUniform,
    PointsGrid,
    VectorsLinf,
    VectorsL2ZeroSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: Family,
    pub n: usize,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub t: Option<usize>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// RNG stream; sweeps use the trial index.
    #[serde(default)]
    pub stream: u64,
}

impl GeneratorSpec {
    pub fn new(family: Family, n: usize) -> Self {
        Self {
            family,
            n,
            m: None,
            t: None,
            d: None,
            seed: 0,
            stream: 0,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |s: &str| Err(HarnessError::InvalidSpec(s.into()));
        if self.n == 0 {
            return bad("n must be positive");
        }
        match self.family {
            Family::BeckFiala => {
                let (m, t) = (self.m.unwrap_or(self.n), self.t.unwrap_or(0));
                if m == 0 || t == 0 {
                    return bad("beck-fiala needs m >= 1 and t >= 1");
                }
                if t > m {
                    return bad("beck-fiala needs t <= m");
                }
            }
            Family::Komlos => {
                if self.m == Some(0) {
                    return bad("komlos needs m >= 1");
                }
            }
            Family::PointsUniform | Family::PointsGrid | Family::VectorsLinf => {
                if self.d.unwrap_or(0) == 0 {
                    return bad("family needs d >= 1");
                }
            }
            Family::VectorsL2ZeroSum => {
                if self.d.unwrap_or(0) == 0 {
                    return bad("family needs d >= 1");
                }
                if self.n % 2 == 1 {
                    return bad("zero-sum sequences pair v with -v, so n must be even");
                }
            }
        }
        Ok(())
    }
}

/// Any instance file, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Instance {
    SetSystem(SetSystem),
    Matrix(InstanceMatrix),
    Points(PointSet),
    Vectors(VectorSequence),
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::SetSystem(_) => "set-system",
            Instance::Matrix(_) => "matrix",
            Instance::Points(_) => "points",
            Instance::Vectors(_) => "vectors",
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Instance::SetSystem(s) => s.n,
            Instance::Matrix(b) => b.cols(),
            Instance::Points(p) => p.len(),
            Instance::Vectors(v) => v.len(),
        }
    }

    /// Re-checks the family invariant.
    pub fn validate(&self) -> Result<(), HarnessError> {
        match self {
            Instance::SetSystem(s) => s.validate()?,
            Instance::Matrix(_) | Instance::Points(_) => {}
            Instance::Vectors(v) => v.validate()?,
        }
        Ok(())
    }

    /// The matrix whose row-subset discrepancies the walk controls.
    pub fn matrix(&self) -> Result<InstanceMatrix, HarnessError> {
        Ok(match self {
            Instance::SetSystem(s) => s.incidence()?,
            Instance::Matrix(b) => b.clone(),
            Instance::Points(p) => InstanceMatrix::from_dense(1, p.len(), vec![1.0; p.len()])?,
            Instance::Vectors(v) => v.instance()?,
        })
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("instances serialize");
        hex::encode(Sha256::digest(&bytes))
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<Instance, HarnessError> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, spec.stream);
    let n = spec.n;
    let inst = match spec.family {
        Family::BeckFiala => {
            let m = spec.m.unwrap_or(n);
            let t = spec.t.expect("validated");
            // element i joins t distinct sets, set j drawn with weight 1/(j+1)
            let weights: Vec<f64> = (0..m).map(|j| 1.0 / (j + 1) as f64).collect();
            let mut sets = vec![Vec::new(); m];
            for i in 0..n {
                let mut w = weights.clone();
                for _ in 0..t {
                    let total: f64 = w.iter().sum();
                    let mut u = rng.random::<f64>() * total;
                    let mut pick = m - 1;
                    for (j, &wj) in w.iter().enumerate() {
                        if wj > 0.0 && u < wj {
                            pick = j;
                            break;
                        }
                        u -= wj;
                    }
                    while w[pick] == 0.0 {
                        pick -= 1;
                    }
                    w[pick] = 0.0;
                    sets[pick].push(i);
                }
            }
            Instance::SetSystem(SetSystem::new(n, sets, Some(t))?)
        }
        Family::Komlos => {
            let m = spec.m.unwrap_or(n);
            let mut cols: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..m).map(|_| StandardNormal.sample(&mut rng)).collect())
                .collect();
            for c in &mut cols {
                let s = c.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
                c.iter_mut().for_each(|x| *x /= s);
            }
            let data = (0..m).flat_map(|j| cols.iter().map(move |c| c[j])).collect();
            Instance::Matrix(InstanceMatrix::from_dense(m, n, data)?)
        }
        Family::PointsUniform => {
            let d = spec.d.expect("validated");
            let pts = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
            Instance::Points(PointSet::new(d, pts).expect("finite points"))
        }
        Family::PointsGrid => {
            let d = spec.d.expect("validated");
            let mut side = 1usize;
            while side.pow(d as u32) < n {
                side += 1;
            }
            let pts = (0..n)
                .map(|mut k| {
                    (0..d)
                        .map(|_| {
                            let c = k % side;
                            k /= side;
                            c as f64
                        })
                        .collect()
                })
                .collect();
            Instance::Points(PointSet::new(d, pts).expect("finite points"))
        }
        Family::VectorsLinf => {
            let d = spec.d.expect("validated");
            let v = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect()).collect();
            Instance::Vectors(VectorSequence::new(d, v, NormRegime::Linf)?)
        }
        Family::VectorsL2ZeroSum => {
            let d = spec.d.expect("validated");
            let mut v: Vec<Vec<f64>> = Vec::with_capacity(n);
            for _ in 0..n / 2 {
                let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                let r = rng.random::<f64>().powf(1.0 / d as f64);
                let u: Vec<f64> = g.iter().map(|x| x / gn * r).collect();
                v.push(u.iter().map(|x| -x).collect());
                v.push(u);
            }
            let mut pairs: Vec<[Vec<f64>; 2]> = v
                .chunks(2)
                .map(|c| [c[0].clone(), c[1].clone()])
                .collect();
            pairs.shuffle(&mut rng);
            let v = pairs.into_iter().flatten().collect();
            Instance::Vectors(VectorSequence::new(d, v, NormRegime::L2)?)
        }
    };
    inst.validate()?;
    Ok(inst)
}

/// `count` random boxes spanned by two random points each.
pub fn random_boxes(p: &PointSet, count: usize, seed: u64) -> Vec<AxisBox> {
    let mut rng = stream_rng(seed, 0x626f78);
    if p.is_empty() {
        return Vec::new();
    }
    (0..count)
        .map(|_| {
            let a = p.point(rng.random_range(0..p.len()));
            let b = p.point(rng.random_range(0..p.len()));
            AxisBox::new(
                a.iter().zip(b).map(|(x, y)| x.min(*y)).collect(),
                a.iter().zip(b).map(|(x, y)| x.max(*y)).collect(),
            )
        })
        .collect()
}

/// Strategy and matrix for running `kind` on `inst`.
pub fn build_strategy(
    kind: StrategyKind,
    inst: &Instance,
    ell: Option<usize>,
) -> Result<Box<dyn Strategy>, HarnessError> {
    let incompatible = || HarnessError::Incompatible {
        strategy: kind.name().into(),
        kind: inst.kind().into(),
    };
    Ok(match (kind, inst) {
        (StrategyKind::BeckFiala, Instance::SetSystem(s)) => Box::new(BeckFiala::new(s)?),
        (StrategyKind::Komlos, Instance::Matrix(b)) => Box::new(Komlos::new(b)?),
        (StrategyKind::Komlos, Instance::SetSystem(s)) => Box::new(Komlos::new(&s.incidence()?)?),
        (StrategyKind::Tusnady, Instance::Points(p)) => Box::new(Tusnady::new(p, ell)),
        (StrategyKind::SteinitzLinf, Instance::Vectors(v)) | (StrategyKind::SteinitzL2, Instance::Vectors(v)) => {
            let want = if kind == StrategyKind::SteinitzL2 { NormRegime::L2 } else { NormRegime::Linf };
            let mut v = v.clone();
            v.norm = want;
            Box::new(Steinitz::new(&v)?)
        }
        _ => return Err(incompatible()),
    })
}

/// The natural monitored pairs of an instance.
pub fn default_monitors(inst: &Instance, seed: u64) -> Result<Vec<MonitoredPair>, HarnessError> {
    Ok(match inst {
        Instance::SetSystem(s) => s.monitors(),
        Instance::Matrix(b) => (0..b.rows()).map(|j| MonitoredPair::new(j, (0..b.cols()).collect())).collect(),
        Instance::Points(p) => random_boxes(p, 16, seed)
            .iter()
            .map(|r| MonitoredPair::new(0, r.members(p)))
            .filter(|m| !m.subset.is_empty())
            .collect(),
        Instance::Vectors(v) => v.prefix_monitors(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub row: usize,
    pub size: usize,
    pub disc: f64,
    pub corrupted: usize,
    pub corrupted_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance_digest: String,
    pub strategy: String,
    pub params: WalkParams,
    pub seed: u64,
    pub coloring: Vec<i8>,
    pub monitors: Vec<MonitorReport>,
    pub steps: usize,
    pub terminated: bool,
    pub wall_time_ms: f64,
    /// `(step, energy)` samples, about 100 per run.
    pub energy: Vec<(usize, f64)>,
}

pub fn run_report(
    inst: &Instance,
    kind: StrategyKind,
    ell: Option<usize>,
    params: &WalkParams,
    monitors: &[MonitoredPair],
) -> Result<RunReport, HarnessError> {
    let b = inst.matrix()?;
    let mut strategy = build_strategy(kind, inst, ell)?;
    let start = Instant::now();
    let out = run(&b, strategy.as_mut(), params, monitors)?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let chi: Vec<f64> = out.coloring.iter().map(|&c| c as f64).collect();
    let mon = out
        .ledger
        .pairs
        .iter()
        .map(|pl| MonitorReport {
            row: pl.pair.row,
            size: pl.pair.subset.len(),
            disc: b.disc(pl.pair.row, &pl.pair.subset, &chi).abs(),
            corrupted: pl.corrupted.len(),
            corrupted_mass: pl.corrupted_mass(&b),
        })
        .collect();
    let stride = (out.trace.energy.len() / 100).max(1);
    let energy = out
        .trace
        .energy
        .iter()
        .enumerate()
        .filter(|(k, _)| k % stride == 0 || *k + 1 == out.trace.energy.len())
        .map(|(k, &e)| (k, e))
        .collect();
    Ok(RunReport {
        instance_digest: inst.digest(),
        strategy: kind.name().into(),
        params: params.clone(),
        seed: params.seed,
        coloring: out.coloring,
        monitors: mon,
        steps: out.steps,
        terminated: out.terminated,
        wall_time_ms,
        energy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub strategy: StrategyKind,
    pub family: Family,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub t: Option<usize>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub ell: Option<usize>,
    #[serde(default)]
    pub params: WalkParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub disc: f64,
    pub corrupted: usize,
    pub steps: usize,
    pub terminated: bool,
    /// Set when the run failed; `disc` is then NaN.
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: usize,
    pub median_disc: f64,
    pub predictor: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub rows: Vec<ExperimentRow>,
    pub summary: Vec<SizeSummary>,
    pub predictor: String,
    pub max_ratio: f64,
}

/// The growth rate a sweep's median discrepancy is compared against.
pub fn predictor(spec: &ExperimentSpec, n: usize) -> (String, f64) {
    let ln = (n as f64).ln();
    match spec.strategy {
        StrategyKind::Tusnady => {
            let d = spec.d.unwrap_or(2) as i32;
            (format!("ln^{d} n"), ln.powi(d))
        }
        StrategyKind::SteinitzLinf | StrategyKind::SteinitzL2 => {
            let d = spec.d.unwrap_or(1) as f64;
            ("sqrt(d ln n)".into(), (d * ln).sqrt())
        }
        StrategyKind::BeckFiala => {
            let t = spec.t.unwrap_or(1) as f64;
            ("sqrt(t ln n)".into(), (t * ln).sqrt())
        }
        StrategyKind::Komlos => ("sqrt(ln n)".into(), ln.sqrt()),
    }
}

fn run_trial(spec: &ExperimentSpec, n: usize, trial: usize) -> Result<ExperimentRow, HarnessError> {
    let gen = GeneratorSpec {
        family: spec.family,
        n,
        m: spec.m,
        t: spec.t,
        d: spec.d,
        seed: spec.seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        stream: trial as u64,
    };
    let inst = generate(&gen)?;
    let b = inst.matrix()?;
    let monitors = match &inst {
        Instance::Points(_) | Instance::Vectors(_) => Vec::new(),
        _ => default_monitors(&inst, spec.seed)?,
    };
    let mut strategy = build_strategy(spec.strategy, &inst, spec.ell)?;
    let mut params = spec.params.clone();
    params.seed = spec.seed;
    params.stream = trial as u64;
    params.record_trace = false;
    let out = run(&b, strategy.as_mut(), &params, &monitors)?;
    let chi: Vec<f64> = out.coloring.iter().map(|&c| c as f64).collect();
    let disc = match &inst {
        Instance::Points(p) if p.dim() <= 2 => max_box_discrepancy(p, &out.coloring)?,
        Instance::Vectors(v) => {
            let pd = prefix_disc(v, &out.coloring)?;
            if spec.strategy == StrategyKind::SteinitzL2 {
                pd.l2
            } else {
                pd.linf
            }
        }
        _ => b.max_disc(&chi),
    };
    let corrupted = out.ledger.pairs.iter().map(|p| p.corrupted.len()).max().unwrap_or(0);
    Ok(ExperimentRow {
        n,
        trial,
        seed: spec.seed,
        disc,
        corrupted,
        steps: out.steps,
        terminated: out.terminated,
        error: None,
    })
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Runs every `(n, trial)` pair (in parallel, merged in order). Invalid
/// specs fail up front; a failing run becomes a flagged row.
pub fn experiment(spec: &ExperimentSpec) -> Result<ExperimentResult, HarnessError> {
    if spec.trials == 0 || spec.sizes.is_empty() {
        return Err(HarnessError::InvalidSpec("need at least one size and one trial".into()));
    }
    for &n in &spec.sizes {
        let gen = GeneratorSpec {
            family: spec.family,
            n,
            m: spec.m,
            t: spec.t,
            d: spec.d,
            seed: spec.seed,
            stream: 0,
        };
        build_strategy(spec.strategy, &generate(&gen)?, spec.ell)?;
    }
    let jobs: Vec<(usize, usize)> = spec
        .sizes
        .iter()
        .flat_map(|&n| (0..spec.trials).map(move |t| (n, t)))
        .collect();
    let rows: Vec<ExperimentRow> = jobs
        .par_iter()
        .map(|&(n, trial)| {
            run_trial(spec, n, trial).unwrap_or_else(|e| ExperimentRow {
                n,
                trial,
                seed: spec.seed,
                disc: f64::NAN,
                corrupted: 0,
                steps: 0,
                terminated: false,
                error: Some(e.to_string()),
            })
        })
        .collect();
    let mut summary = Vec::new();
    let mut name = String::new();
    for &n in &spec.sizes {
        let mut d: Vec<f64> = rows
            .iter()
            .filter(|r| r.n == n && r.error.is_none())
            .map(|r| r.disc)
            .collect();
        let med = median(&mut d);
        let (pname, pval) = predictor(spec, n);
        name = pname;
        summary.push(SizeSummary {
            n,
            median_disc: med,
            predictor: pval,
            ratio: med / pval,
        });
    }
    let max_ratio = summary.iter().map(|s| s.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(ExperimentResult {
        rows,
        summary,
        predictor: name,
        max_ratio,
    })
}

/// Writes the sweep as CSV: one timestamp comment line, the header, one row
/// per trial, then the per-size ratios as trailing comment lines.
pub fn write_experiment_csv<W: Write>(
    mut w: W,
    result: &ExperimentResult,
    timestamp: &str,
) -> Result<(), HarnessError> {
    writeln!(w, "# generated {timestamp}")?;
    {
        let mut cw = csv::Writer::from_writer(&mut w);
        cw.write_record(["n", "trial", "seed", "disc", "corrupted", "steps", "terminated"])?;
        for r in &result.rows {
            cw.write_record([
                r.n.to_string(),
                r.trial.to_string(),
                r.seed.to_string(),
                r.disc.to_string(),
                r.corrupted.to_string(),
                r.steps.to_string(),
                r.terminated.to_string(),
            ])?;
        }
        cw.flush()?;
    }
    for s in &result.summary {
        writeln!(
            w,
            "# n={} median_disc={} {}={} ratio={}",
            s.n, s.median_disc, result.predictor, s.predictor, s.ratio
        )?;
    }
    writeln!(w, "# max_ratio={}", result.max_ratio)?;
    for r in result.rows.iter().filter(|r| r.error.is_some()) {
        writeln!(w, "# error n={} trial={}: {}", r.n, r.trial, r.error.as_deref().unwrap_or(""))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beck_fiala_columns_have_t_ones() {
        let mut spec = GeneratorSpec::new(Family::BeckFiala, 12);
        spec.t = Some(3);
        spec.seed = 1;
        let Instance::SetSystem(s) = generate(&spec).unwrap() else {
            panic!("wrong kind")
        };
        assert!(s.degrees().iter().all(|&d| d == 3));
        assert_eq!(s.sets.len(), 12);
    }

    #[test]
    fn zero_sum_vectors_cancel() {
        let mut spec = GeneratorSpec::new(Family::VectorsL2ZeroSum, 10);
        spec.d = Some(4);
        let Instance::Vectors(v) = generate(&spec).unwrap() else {
            panic!("wrong kind")
        };
        for k in 0..4 {
            assert_eq!(v.vectors.iter().map(|x| x[k]).sum::<f64>(), 0.0);
        }
        spec.n = 9;
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn komlos_columns_are_unit() {
        let mut spec = GeneratorSpec::new(Family::Komlos, 16);
        spec.seed = 3;
        let Instance::Matrix(b) = generate(&spec).unwrap() else {
            panic!("wrong kind")
        };
        assert!(b.column_norms().iter().all(|&c| c <= 1.0 + 1e-12));
    }

    #[test]
    fn instances_round_trip_through_json() {
        for (family, d) in [
            (Family::BeckFiala, None),
            (Family::Komlos, None),
            (Family::PointsUniform, Some(2)),
            (Family::PointsGrid, Some(2)),
            (Family::VectorsLinf, Some(3)),
            (Family::VectorsL2ZeroSum, Some(3)),
        ] {
            let mut spec = GeneratorSpec::new(family, 8);
            spec.t = Some(2);
            spec.d = d;
            spec.seed = 9;
            let inst = generate(&spec).unwrap();
            let text = serde_json::to_string(&inst).unwrap();
            let back: Instance = serde_json::from_str(&text).unwrap();
            assert_eq!(inst, back);
            assert_eq!(inst.digest(), back.digest());
        }
    }

    #[test]
    fn sweep_rows_and_determinism() {
        let spec = ExperimentSpec {
            strategy: StrategyKind::BeckFiala,
            family: Family::BeckFiala,
            sizes: vec![8, 12],
            trials: 3,
            seed: 5,
            m: None,
            t: Some(2),
            d: None,
            ell: None,
            params: WalkParams::default(),
        };
        let a = experiment(&spec).unwrap();
        assert_eq!(a.rows.len(), 6);
        let mut x = Vec::new();
        let mut y = Vec::new();
        write_experiment_csv(&mut x, &a, "t0").unwrap();
        write_experiment_csv(&mut y, &experiment(&spec).unwrap(), "t1").unwrap();
        let body = |v: &[u8]| String::from_utf8(v.to_vec()).unwrap().lines().skip(1).collect::<Vec<_>>().join("\n");
        assert_eq!(body(&x), body(&y));
    }
}
