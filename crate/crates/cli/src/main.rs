use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use discwalk::engine::{EngineError, MonitoredPair, StepSize, WalkParams};
use discwalk::geometry::{decompose_box, AxisBox, CanonicalBoxTree, GeometryError, PointSet};
use discwalk::harness::{
    build_strategy, default_monitors, experiment, generate, run_report, write_experiment_csv,
    ExperimentSpec, Family, GeneratorSpec, HarnessError, Instance,
};
use discwalk::numerics::{psd_factor, SymMatrix};
use discwalk::oracles::{brute_force_discrepancy, tail_validate, OracleError, TailCheckConfig};
use discwalk::strategies::{StrategyError, StrategyKind};
use discwalk::uvc::{
    solve_uvc_with_dual, verify_dual_certificate, verify_uvc, DualCertificate, DualVerdict,
    FeasibilityReport, UvcError, UvcProblem, VectorColoring,
};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Guard(String),
    #[error("{0}")]
    NonTerminated(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
    #[error("output closed")]
    Closed,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Guard(_) => 2,
            CliError::NonTerminated(_) => 3,
            CliError::Invalid(_) => 4,
            CliError::Io(_) => 1,
            CliError::Closed => 0,
        }
    }
}

impl From<UvcError> for CliError {
    fn from(e: UvcError) -> Self {
        match e {
            UvcError::RefuseTooLarge { .. } => CliError::Guard(e.to_string()),
            UvcError::Stalled { .. } => CliError::NonTerminated(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Uvc { source, step } => match CliError::from(source) {
                CliError::Guard(m) => CliError::Guard(format!("step {step}: {m}")),
                CliError::NonTerminated(m) => CliError::NonTerminated(format!("step {step}: {m}")),
                other => other,
            },
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::RefuseTooLarge { .. } => CliError::Guard(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::RefuseTooLarge { .. } => CliError::Guard(e.to_string()),
            OracleError::Engine(inner) => inner.into(),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<StrategyError> for CliError {
    fn from(e: StrategyError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Engine(inner) => inner.into(),
            HarnessError::Oracle(inner) => inner.into(),
            HarnessError::Io(inner) if inner.kind() == std::io::ErrorKind::BrokenPipe => CliError::Closed,
            HarnessError::Io(inner) => CliError::Io(inner.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "discwalk", version, about = "Random-walk discrepancy minimization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file.
    Gen(GenArgs),
    /// Run the walk on an instance and write a report.
    Run(RunArgs),
    /// Solve or verify a vector coloring problem.
    #[command(subcommand)]
    Uvc(UvcCommand),
    /// Canonical box trees and decompositions.
    #[command(subcommand)]
    Geom(GeomCommand),
    /// Exact and statistical checks.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Scaling sweep over sizes and trials, written as CSV.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenArgs {
    /// beck-fiala, komlos, points-uniform, points-grid, vectors-linf, vectors-l2-zero-sum
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WalkArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Fixed step size; adaptive when omitted.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Canonical block size for tusnady.
    #[arg(long)]
    ell: Option<usize>,
    /// Solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

impl WalkArgs {
    fn params(&self) -> WalkParams {
        let mut p = WalkParams::with_seed(self.seed, self.stream);
        if let Some(g) = self.gamma {
            p.step = StepSize::Fixed(g);
        }
        p.max_steps = self.max_steps;
        if let Some(t) = self.tol {
            p.solver_tol = t;
        }
        p
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    strategy: String,
    /// JSON list of {row, subset}; defaults to the instance's natural pairs.
    #[arg(long)]
    monitors: Option<PathBuf>,
    #[command(flatten)]
    walk: WalkArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum UvcCommand {
    /// Solve `{n, constraints}` and write `{gram, trace, report, dual}`.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a solution written by `uvc solve`.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GeomCommand {
    /// Build the canonical box tree and print its census.
    Boxes {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decompose a box `{lo, hi}` into canonical parts and leftover points.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "box")]
        region: PathBuf,
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exact minimum discrepancy by enumeration.
    Brute {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        monitors: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical tail check over seeded trials.
    Tail {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    strategy: String,
    #[arg(long)]
    family: String,
    /// Comma-separated sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[command(flatten)]
    walk: WalkArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Tail check job; `instance` is resolved relative to the config file.
#[derive(Deserialize)]
struct TailJob {
    instance: PathBuf,
    strategy: String,
    #[serde(default)]
    ell: Option<usize>,
    #[serde(default)]
    params: WalkParams,
    #[serde(default)]
    monitors: Option<Vec<MonitoredPair>>,
    #[serde(flatten)]
    check: TailCheckConfig,
}

#[derive(Deserialize)]
struct UvcInput {
    n: usize,
    constraints: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct UvcOutput {
    gram: SymMatrix,
    trace: f64,
    report: FeasibilityReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dual: Option<DualCertificate>,
}

#[derive(Serialize)]
struct VerifyOutput {
    passes: bool,
    report: FeasibilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    dual: Option<DualVerdict>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Invalid(e.to_string()))?;
    match out {
        Some(p) => fs::write(p, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Err(CliError::Closed),
            Err(e) => Err(CliError::Io(e.to_string())),
            Ok(()) => Ok(()),
        },
    }
}

fn strategy_kind(name: &str) -> Result<StrategyKind, CliError> {
    StrategyKind::parse(name).ok_or_else(|| CliError::Invalid(format!("unknown strategy {name:?}")))
}

fn family(name: &str) -> Result<Family, CliError> {
    serde_json::from_value(serde_json::Value::String(name.into()))
        .map_err(|_| CliError::Invalid(format!("unknown family {name:?}")))
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    let inst: Instance = read_json(path)?;
    inst.validate()?;
    Ok(inst)
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("DISCWALK_THREADS") {
        let k: usize = v
            .parse()
            .ok()
            .filter(|&k| k > 0)
            .ok_or_else(|| CliError::Invalid(format!("DISCWALK_THREADS={v:?} is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<(), CliError> {
    let spec = GeneratorSpec {
        family: family(&a.family)?,
        n: a.n,
        m: a.m,
        t: a.t,
        d: a.d,
        seed: a.seed,
        stream: 0,
    };
    emit(&generate(&spec)?, a.out.as_deref())
}

fn cmd_run(a: RunArgs) -> Result<(), CliError> {
    let inst = load_instance(&a.instance)?;
    let kind = strategy_kind(&a.strategy)?;
    let monitors = match &a.monitors {
        Some(p) => read_json(p)?,
        None => default_monitors(&inst, a.walk.seed)?,
    };
    let report = run_report(&inst, kind, a.walk.ell, &a.walk.params(), &monitors)?;
    emit(&report, a.out.as_deref())?;
    if !report.terminated {
        return Err(CliError::NonTerminated(format!(
            "walk did not freeze within {} steps",
            report.steps
        )));
    }
    Ok(())
}

fn cmd_uvc(c: UvcCommand) -> Result<(), CliError> {
    match c {
        UvcCommand::Solve { input, beta, tol, out } => {
            let inp: UvcInput = read_json(&input)?;
            let problem = UvcProblem::new(inp.n, inp.constraints, beta)?;
            let (v, dual) = solve_uvc_with_dual(&problem, tol)?;
            emit(
                &UvcOutput {
                    trace: v.trace_value,
                    gram: v.gram,
                    report: v.report,
                    dual: Some(dual),
                },
                out.as_deref(),
            )
        }
        UvcCommand::Verify {
            input,
            solution,
            beta,
            tol,
            out,
        } => {
            let inp: UvcInput = read_json(&input)?;
            let problem = UvcProblem::new(inp.n, inp.constraints, beta)?;
            let sol: UvcOutput = read_json(&solution)?;
            let vectors = psd_factor(&sol.gram, tol).map_err(|e| CliError::Invalid(e.to_string()))?;
            let coloring = VectorColoring {
                trace_value: sol.gram.trace(),
                gram: sol.gram,
                vectors,
                beta,
                report: sol.report,
            };
            let report = verify_uvc(&coloring, &problem, tol)?;
            let dual = sol
                .dual
                .as_ref()
                .map(|c| verify_dual_certificate(c, &problem, tol))
                .transpose()?;
            let passes = report.passes(tol, problem.n()) && dual.is_none_or(|d| d.feasible);
            emit(&VerifyOutput { passes, report, dual }, out.as_deref())?;
            if !passes {
                return Err(CliError::Invalid("solution fails verification".into()));
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct CensusRow {
    type_tag: Vec<u32>,
    count: usize,
}

#[derive(Serialize)]
struct BoxesOutput {
    n: usize,
    d: usize,
    ell: usize,
    boxes: usize,
    count_bound: f64,
    leftover_bound: usize,
    census: Vec<CensusRow>,
}

#[derive(Serialize)]
struct DecomposeOutput {
    parts: Vec<Vec<usize>>,
    part_types: Vec<Vec<u32>>,
    leftover: Vec<usize>,
    leftover_bound: usize,
}

fn cmd_geom(c: GeomCommand) -> Result<(), CliError> {
    match c {
        GeomCommand::Boxes { input, ell, out } => {
            let p: PointSet = read_json(&input)?;
            let tree = CanonicalBoxTree::build(&p, ell);
            let census = tree
                .census()
                .into_iter()
                .map(|(type_tag, count)| CensusRow { type_tag, count })
                .collect();
            emit(
                &BoxesOutput {
                    n: p.len(),
                    d: p.dim(),
                    ell: tree.ell(),
                    boxes: tree.leaves().len(),
                    count_bound: tree.count_bound(),
                    leftover_bound: tree.leftover_bound(),
                    census,
                },
                out.as_deref(),
            )
        }
        GeomCommand::Decompose {
            input,
            region,
            ell,
            out,
        } => {
            let p: PointSet = read_json(&input)?;
            let r: AxisBox = read_json(&region)?;
            let tree = CanonicalBoxTree::build(&p, ell);
            let dec = decompose_box(&r, &tree, &p)?;
            let leaves = tree.leaves();
            emit(
                &DecomposeOutput {
                    parts: dec.parts.iter().map(|&k| leaves[k].points.clone()).collect(),
                    part_types: dec.parts.iter().map(|&k| leaves[k].type_tag.clone()).collect(),
                    leftover: dec.leftover,
                    leftover_bound: tree.leftover_bound(),
                },
                out.as_deref(),
            )
        }
    }
}

fn cmd_oracle(c: OracleCommand) -> Result<(), CliError> {
    match c {
        OracleCommand::Brute { instance, monitors, out } => {
            let inst = load_instance(&instance)?;
            let b = inst.matrix()?;
            let pairs: Option<Vec<MonitoredPair>> = monitors.as_deref().map(read_json).transpose()?;
            let res = brute_force_discrepancy(&b, pairs.as_deref())?;
            emit(&res, out.as_deref())
        }
        OracleCommand::Tail { config, out } => {
            configure_threads()?;
            let job: TailJob = read_json(&config)?;
            let path = config.parent().unwrap_or(Path::new(".")).join(&job.instance);
            let inst = load_instance(&path)?;
            let kind = strategy_kind(&job.strategy)?;
            build_strategy(kind, &inst, job.ell)?;
            let b = inst.matrix()?;
            let monitors = match job.monitors {
                Some(m) => m,
                None => default_monitors(&inst, job.check.seed)?,
            };
            let mut params = job.params;
            params.seed = job.check.seed;
            params.record_trace = false;
            let make = || build_strategy(kind, &inst, job.ell).expect("checked above");
            let report = tail_validate(&b, make, &params, &monitors, &job.check)?;
            emit(&report, out.as_deref())
        }
    }
}

fn cmd_experiment(a: ExperimentArgs) -> Result<(), CliError> {
    configure_threads()?;
    let mut params = a.walk.params();
    params.record_trace = false;
    let spec = ExperimentSpec {
        strategy: strategy_kind(&a.strategy)?,
        family: family(&a.family)?,
        sizes: a.sizes,
        trials: a.trials,
        seed: a.walk.seed,
        m: a.m,
        t: a.t,
        d: a.d,
        ell: a.walk.ell,
        params,
    };
    let result = experiment(&spec)?;
    let stamp = chrono::Utc::now().to_rfc3339();
    match &a.out {
        Some(p) => {
            let f = fs::File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            write_experiment_csv(std::io::BufWriter::new(f), &result, &stamp)?;
        }
        None => write_experiment_csv(std::io::stdout().lock(), &result, &stamp)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Uvc(c) => cmd_uvc(c),
        Command::Geom(c) => cmd_geom(c),
        Command::Oracle(c) => cmd_oracle(c),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match res {
        Ok(()) | Err(CliError::Closed) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
