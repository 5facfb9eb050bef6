//! Experiment plumbing behind the `blockpack` binary: building algorithms and
//! sources from flat settings, running them, computing benchmarks and
//! writing report files.
//!
//! Settings are `key = value` pairs, from a config file or from command-line
//! flags (flags win). Sweeps read the same keys as comma-separated lists.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{
    random_instance, AdversaryError, ArrivalDist, Case, DiscountDist, RandomParams,
    TwoPhaseAdversary, StaircaseAdversary,
};
use crate::engine::{
    self, batched_capacities, ArrivalSource, Batching, DeterministicOracle, EngineError,
    ExactOracle, GreedyFractional, OnlineAlgorithm, OracleIntegral, RandomizedOracle, RunOutcome,
    StaticSource,
};
use crate::model::{self, Allocation, Block, Instance, ModelError};
use crate::offline::{self, OfflineError};
use crate::seeding;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Input(String),
    #[error("infeasible output in block {block}:\n  {}", .violations.join("\n  "))]
    Infeasible { block: Block, violations: Vec<String> },
    #[error(transparent)]
    Engine(EngineError),
    #[error(transparent)]
    Offline(#[from] OfflineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<EngineError> for HarnessError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Infeasible { block, violations } => HarnessError::Infeasible {
                block,
                violations: violations.iter().map(|v| v.to_string()).collect(),
            },
            EngineError::OracleInfeasible { block } => HarnessError::Infeasible {
                block,
                violations: vec!["oracle packing exceeds capacity".into()],
            },
            other => HarnessError::Engine(other),
        }
    }
}

impl HarnessError {
    /// 2 for infeasible output, 3 for bad input, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Infeasible { .. } => 2,
            HarnessError::Input(_)
            | HarnessError::Model(_)
            | HarnessError::Adversary(_)
            | HarnessError::Json(_)
            | HarnessError::Offline(OfflineError::TooLarge(_)) => 3,
            _ => 1,
        }
    }
}

fn input<T>(msg: impl Into<String>) -> Result<T, HarnessError> {
    Err(HarnessError::Input(msg.into()))
}

/// Flat string settings with typed accessors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

fn normalize(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('_', "-").to_lowercase()
}

impl Settings {
    pub fn new() -> Self {
        Settings::default()
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut s = Settings::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=').or_else(|| line.split_once(':')) else {
                return input(format!("config line {}: expected `key = value`", no + 1));
            };
            s.set(k, v.trim());
        }
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(normalize(key), value.into());
    }

    /// Entries of `other` override those of `self`.
    pub fn merged(mut self, other: &Settings) -> Settings {
        self.0.extend(other.0.iter().map(|(k, v)| (k.clone(), v.clone())));
        self
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(&normalize(key)).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, HarnessError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| HarnessError::Input(format!("bad value {v:?} for {key}: {e}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, HarnessError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated values; `None` when the key is absent.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, HarnessError>
    where
        T::Err: fmt::Display,
    {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e| HarnessError::Input(format!("bad value {s:?} for {key}: {e}")))
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }
}

/// The online algorithms the harness can build.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmKind {
    Greedy,
    OracleExact,
    OracleDet,
    OracleRand,
    Batch(Box<AlgorithmKind>),
}

impl FromStr for AlgorithmKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim().to_lowercase();
        if let Some(inner) = s.strip_prefix("batch-") {
            return Ok(AlgorithmKind::Batch(Box::new(inner.parse()?)));
        }
        match s.as_str() {
            "greedy" => Ok(AlgorithmKind::Greedy),
            "oracle-exact" | "exact" => Ok(AlgorithmKind::OracleExact),
            "oracle-det" | "det" => Ok(AlgorithmKind::OracleDet),
            "oracle-rand" | "rand" => Ok(AlgorithmKind::OracleRand),
            _ => Err(format!(
                "unknown algorithm {s:?} (greedy, oracle-exact, oracle-det, oracle-rand, batch-*)"
            )),
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgorithmKind::Greedy => write!(f, "greedy"),
            AlgorithmKind::OracleExact => write!(f, "oracle-exact"),
            AlgorithmKind::OracleDet => write!(f, "oracle-det"),
            AlgorithmKind::OracleRand => write!(f, "oracle-rand"),
            AlgorithmKind::Batch(inner) => write!(f, "batch-{inner}"),
        }
    }
}

impl AlgorithmKind {
    /// `batch_len` only matters for `Batch`; the randomized oracle draws
    /// from the oracle stream of `seed`.
    pub fn build(
        &self,
        capacities: &[f64],
        batch_len: Block,
        delta: f64,
        seed: u64,
    ) -> Result<Box<dyn OnlineAlgorithm>, HarnessError> {
        let caps = capacities.to_vec();
        Ok(match self {
            AlgorithmKind::Greedy => Box::new(GreedyFractional::new(caps)),
            AlgorithmKind::OracleExact => {
                Box::new(OracleIntegral::new(caps, ExactOracle::default()))
            }
            AlgorithmKind::OracleDet => Box::new(OracleIntegral::new(caps, DeterministicOracle)),
            AlgorithmKind::OracleRand => {
                if !(delta > 0.0 && delta < 1.0) {
                    return input(format!("delta must lie in (0, 1), got {delta}"));
                }
                let oracle_seed = seeding::split_seed(seed, seeding::ORACLE_STREAM);
                Box::new(OracleIntegral::new(caps, RandomizedOracle::new(delta, oracle_seed)))
            }
            AlgorithmKind::Batch(inner) => {
                if batch_len < 1 {
                    return input("batch length L must be at least 1");
                }
                if matches!(**inner, AlgorithmKind::Batch(_)) {
                    return input("nested batching is not supported");
                }
                let inner =
                    inner.build(&batched_capacities(capacities, batch_len), 1, delta, seed)?;
                Box::new(Batching::new(inner, batch_len))
            }
        })
    }
}

/// Descriptor written by `generate` for the adaptive two-phase adversary,
/// which cannot be stored as a static instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDescriptor {
    pub source: String,
    pub horizon: Block,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    TwoPhase { horizon: Block },
    Staircase { m: usize, phase_len: Block, eps: Option<f64>, slack: Block },
    Random { seed: u64, params: RandomParams },
    File(PathBuf),
}

impl SourceSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            SourceSpec::TwoPhase { .. } => "two-phase",
            SourceSpec::Staircase { .. } => "staircase",
            SourceSpec::Random { .. } => "random",
            SourceSpec::File(_) => "file",
        }
    }

    pub fn from_settings(s: &Settings) -> Result<Self, HarnessError> {
        let kind = match (s.raw("source"), s.raw("instance")) {
            (Some(k), _) => k.to_lowercase(),
            (None, Some(_)) => "file".into(),
            (None, None) => "random".into(),
        };
        match kind.as_str() {
            "two-phase" | "theorem5" => Ok(SourceSpec::TwoPhase {
                horizon: s.get_or("t", 4)?,
            }),
            "staircase" | "theorem6" => {
                let m = s.get_or("m", 2)?;
                let phase_len = match s.get("phase-len")? {
                    Some(l) => l,
                    None => s.get::<Block>("t")?.map_or(50, |t| t / m.max(1) as Block),
                };
                Ok(SourceSpec::Staircase {
                    m,
                    phase_len,
                    eps: s.get("eps")?,
                    slack: s.get_or("slack", 0)?,
                })
            }
            "random" => Ok(SourceSpec::Random {
                seed: s.get_or("seed", 0)?,
                params: random_params(s)?,
            }),
            "file" => match s.raw("instance") {
                Some(p) => Ok(SourceSpec::File(PathBuf::from(p))),
                None => input("source file needs --instance"),
            },
            other => input(format!(
                "unknown source {other:?} (two-phase, staircase, random, file)"
            )),
        }
    }
}

/// Random-instance parameters from `n`, `m`, `T`, `qmax`, `discount`
/// (`zero`, `mixed` or `uniform`), `rho-max` and `arrival` (`uniform` or
/// `front`).
pub fn random_params(s: &Settings) -> Result<RandomParams, HarnessError> {
    let mut p = RandomParams::new(s.get_or("n", 20)?, s.get_or("m", 2)?, s.get_or("t", 10)?);
    p.q_max = s.get_or("qmax", p.q_max)?;
    let rho_max: f64 = s.get_or("rho-max", 0.3)?;
    p.discount = match s.raw("discount").unwrap_or("mixed") {
        "zero" => DiscountDist::Zero,
        "mixed" => DiscountDist::Mixed { patient: 0.5, hi: rho_max },
        "uniform" => DiscountDist::Uniform { lo: 0.0, hi: rho_max },
        d => return input(format!("unknown discount distribution {d:?}")),
    };
    p.arrival = match s.raw("arrival").unwrap_or("uniform") {
        "uniform" => ArrivalDist::Uniform,
        "front" => ArrivalDist::Front,
        a => return input(format!("unknown arrival distribution {a:?}")),
    };
    Ok(p)
}

/// Reads an instance file, or the descriptor of an adaptive source.
pub enum Loaded {
    Instance(Instance),
    Descriptor(SourceDescriptor),
}

pub fn load_input(path: &Path) -> Result<Loaded, HarnessError> {
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::Input(format!("cannot read {}: {e}", path.display())))?;
    if let Ok(d) = serde_json::from_str::<SourceDescriptor>(&text) {
        return Ok(Loaded::Descriptor(d));
    }
    Ok(Loaded::Instance(Instance::from_json_str(&text)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alg: AlgorithmKind,
    pub source: SourceSpec,
    /// Overrides the horizon of file instances.
    pub horizon: Option<Block>,
    pub extension: Block,
    pub batch_len: Block,
    pub delta: f64,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(alg: AlgorithmKind, source: SourceSpec) -> Self {
        RunConfig {
            alg,
            source,
            horizon: None,
            extension: 0,
            batch_len: 1,
            delta: 0.25,
            seed: 0,
            out_dir: None,
        }
    }

    pub fn from_settings(s: &Settings) -> Result<Self, HarnessError> {
        let alg = s
            .get::<AlgorithmKind>("alg")?
            .unwrap_or(AlgorithmKind::Greedy);
        Ok(RunConfig {
            alg,
            source: SourceSpec::from_settings(s)?,
            horizon: s.get("t")?,
            extension: s.get_or("gamma", 0)?,
            batch_len: s.get_or("l", 1)?,
            delta: s.get_or("delta", 0.25)?,
            seed: s.get_or("seed", 0)?,
            out_dir: s.raw("out-dir").map(PathBuf::from),
        })
    }
}

/// The machine-readable record of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub algorithm: String,
    pub source: String,
    pub n: usize,
    pub m: usize,
    pub horizon: Block,
    pub extension: Block,
    pub batch_len: Block,
    pub delta: f64,
    pub seed: u64,
    /// Welfare over `1..=T+Γ`.
    pub total_welfare: f64,
    pub benchmark: Option<String>,
    /// Benchmark welfare over `1..=T`.
    pub benchmark_welfare: Option<f64>,
    pub ratio: Option<f64>,
    pub min_slackness: f64,
    pub extension_used: Block,
    pub fallbacks: usize,
    pub mean_iterations: Option<f64>,
    pub certified_lambda: Vec<Option<f64>>,
    pub adversary_case: Option<String>,
}

pub struct RunResult {
    pub outcome: RunOutcome,
    pub benchmark: Option<Allocation>,
    pub summary: RunSummary,
}

/// Runs one configuration and writes reports when `out_dir` is set.
pub fn execute(cfg: &RunConfig) -> Result<RunResult, HarnessError> {
    let (outcome, benchmark, bench_name, case) = match &cfg.source {
        SourceSpec::TwoPhase { horizon } => {
            let mut src = TwoPhaseAdversary::new(cfg.horizon.unwrap_or(*horizon))?;
            let horizon = src.horizon();
            let out = simulate(cfg, &mut src, horizon)?;
            let case = src.case().map(|c| match c {
                Case::MoreA => "more-a".to_owned(),
                Case::AddC => "add-c".to_owned(),
            });
            (out, src.benchmark_allocation(), "adversary", case)
        }
        SourceSpec::Staircase { m, phase_len, eps, slack } => {
            let mut adv = StaircaseAdversary::new(*m, *phase_len)?.with_slack(*slack);
            if let Some(e) = eps {
                adv = adv.with_eps(*e)?;
            }
            let out = simulate(cfg, &mut adv.source(), adv.horizon())?;
            (out, Some(adv.benchmark_allocation()), "adversary", None)
        }
        SourceSpec::Random { seed, params } => {
            let mut params = params.clone();
            if let Some(t) = cfg.horizon {
                params.horizon = t;
            }
            let inst = random_instance(*seed, &params)?;
            run_static(cfg, &inst)?
        }
        SourceSpec::File(path) => match load_input(path)? {
            Loaded::Descriptor(d) if d.source == "two-phase" => {
                let spec = SourceSpec::TwoPhase { horizon: d.horizon };
                return execute(&RunConfig {
                    source: spec,
                    ..cfg.clone()
                });
            }
            Loaded::Descriptor(d) => return input(format!("unknown source descriptor {:?}", d.source)),
            Loaded::Instance(inst) => {
                let inst = match cfg.horizon {
                    Some(t) if t != inst.horizon() => Instance::new(
                        inst.capacities().to_vec(),
                        t,
                        inst.transactions().to_vec(),
                    )?,
                    _ => inst,
                };
                run_static(cfg, &inst)?
            }
        },
    };

    let inst = &outcome.instance;
    let horizon = outcome.report.horizon;
    let (benchmark_welfare, ratio) = match &benchmark {
        Some(y) => {
            let bw = model::social_welfare(y, inst, 1, horizon)?;
            let ratio =
                offline::competitive_ratio(&outcome.allocation, y, inst, horizon, cfg.extension)
                    .ok();
            (Some(bw), ratio)
        }
        None => (None, None),
    };
    let summary = RunSummary {
        algorithm: cfg.alg.to_string(),
        source: cfg.source.kind().to_owned(),
        n: inst.len(),
        m: inst.dimension(),
        horizon,
        extension: cfg.extension,
        batch_len: cfg.batch_len,
        delta: cfg.delta,
        seed: cfg.seed,
        total_welfare: outcome.report.total_welfare,
        benchmark: benchmark.as_ref().map(|_| bench_name.to_owned()),
        benchmark_welfare,
        ratio,
        min_slackness: outcome.report.min_slackness,
        extension_used: outcome.report.extension_used,
        fallbacks: outcome.report.fallbacks,
        mean_iterations: outcome.report.mean_iterations(),
        certified_lambda: outcome.report.certified_lambda.clone(),
        adversary_case: case,
    };
    info!(
        "{} on {}: welfare {:.6}, ratio {:?}",
        summary.algorithm, summary.source, summary.total_welfare, summary.ratio
    );
    let result = RunResult {
        outcome,
        benchmark,
        summary,
    };
    if let Some(dir) = &cfg.out_dir {
        write_run(dir, &result)?;
    }
    Ok(result)
}

fn simulate(
    cfg: &RunConfig,
    src: &mut dyn ArrivalSource,
    horizon: Block,
) -> Result<RunOutcome, HarnessError> {
    let mut alg = cfg
        .alg
        .build(src.capacities(), cfg.batch_len, cfg.delta, cfg.seed)?;
    Ok(engine::run(&mut alg, src, horizon, cfg.extension)?)
}

type Simulated = (RunOutcome, Option<Allocation>, &'static str, Option<String>);

fn run_static(cfg: &RunConfig, inst: &Instance) -> Result<Simulated, HarnessError> {
    let out = simulate(cfg, &mut StaticSource::new(inst), inst.horizon())?;
    let bench = match offline::offline_fractional_opt(inst) {
        Ok((y, _)) => Some(y),
        Err(OfflineError::TooLarge(why)) => {
            warn!("no fractional benchmark: {why}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    Ok((out, bench, "fractional-opt", None))
}

/// `allocation.csv`, `blocks.csv`, `summary.json`, `instance.json` and, when
/// available, `benchmark.csv`.
pub fn write_run(dir: &Path, result: &RunResult) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    result.outcome.allocation.save_csv(dir.join("allocation.csv"))?;
    result
        .outcome
        .report
        .write_blocks_csv(fs::File::create(dir.join("blocks.csv"))?)?;
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&result.summary)?,
    )?;
    result.outcome.instance.save(dir.join("instance.json"))?;
    if let Some(y) = &result.benchmark {
        y.save_csv(dir.join("benchmark.csv"))?;
    }
    Ok(())
}

/// Writes an instance (or, for the adaptive adversary, a descriptor) and
/// returns a one-line summary.
pub fn cmd_generate(s: &Settings) -> Result<String, HarnessError> {
    let path = match (s.raw("instance"), s.raw("out-dir")) {
        (Some(p), _) => PathBuf::from(p),
        (None, Some(d)) => Path::new(d).join("instance.json"),
        (None, None) => PathBuf::from("instance.json"),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    // Here `instance` names the output, not an input.
    let mut source_settings = s.clone();
    source_settings.0.remove("instance");
    let spec = SourceSpec::from_settings(&source_settings)?;
    match spec {
        SourceSpec::TwoPhase { horizon } => {
            TwoPhaseAdversary::new(horizon)?;
            let d = SourceDescriptor {
                source: "two-phase".into(),
                horizon,
            };
            fs::write(&path, serde_json::to_string_pretty(&d)?)?;
            Ok(format!(
                "adaptive source descriptor two-phase T={horizon} -> {}",
                path.display()
            ))
        }
        other => {
            let inst = static_instance(&other)?;
            inst.save(&path)?;
            Ok(format!(
                "n={} m={} T={} q_max={} -> {}",
                inst.len(),
                inst.dimension(),
                inst.horizon(),
                inst.q_max(),
                path.display()
            ))
        }
    }
}

fn static_instance(spec: &SourceSpec) -> Result<Instance, HarnessError> {
    match spec {
        SourceSpec::Staircase { m, phase_len, eps, slack } => {
            let mut adv = StaircaseAdversary::new(*m, *phase_len)?.with_slack(*slack);
            if let Some(e) = eps {
                adv = adv.with_eps(*e)?;
            }
            Ok(adv.instance())
        }
        SourceSpec::Random { seed, params } => Ok(random_instance(*seed, params)?),
        SourceSpec::File(p) => match load_input(p)? {
            Loaded::Instance(i) => Ok(i),
            Loaded::Descriptor(_) => input("adaptive sources have no static instance"),
        },
        SourceSpec::TwoPhase { .. } => input("two-phase is adaptive and has no static instance"),
    }
}

/// Offline optima of a static instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub n: usize,
    pub m: usize,
    pub horizon: Block,
    pub fractional_opt: Option<f64>,
    pub integral_opt: Option<f64>,
}

/// Fractional and (within its caps) integral optimum; writes
/// `bench.json` and the optimal allocations when `out-dir` is set.
pub fn cmd_bench(s: &Settings) -> Result<BenchSummary, HarnessError> {
    let inst = static_instance(&SourceSpec::from_settings(s)?)?;
    let frac = match offline::offline_fractional_opt(&inst) {
        Ok(r) => Some(r),
        Err(OfflineError::TooLarge(why)) => {
            warn!("fractional optimum skipped: {why}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let int = match offline::offline_integral_opt(&inst) {
        Ok(r) => Some(r),
        Err(OfflineError::TooLarge(why)) => {
            info!("integral optimum skipped: {why}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let summary = BenchSummary {
        n: inst.len(),
        m: inst.dimension(),
        horizon: inst.horizon(),
        fractional_opt: frac.as_ref().map(|r| r.1),
        integral_opt: int.as_ref().map(|r| r.1),
    };
    if let Some(dir) = s.raw("out-dir") {
        let dir = Path::new(dir);
        fs::create_dir_all(dir)?;
        fs::write(dir.join("bench.json"), serde_json::to_string_pretty(&summary)?)?;
        if let Some((y, _)) = &frac {
            y.save_csv(dir.join("fractional_opt.csv"))?;
        }
        if let Some((y, _)) = &int {
            y.save_csv(dir.join("integral_opt.csv"))?;
        }
    }
    Ok(summary)
}

/// One sweep cell's outcome; `error` is set instead of the measurements
/// when the cell failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub algorithm: String,
    pub source: String,
    pub m: usize,
    pub horizon: Block,
    pub batch_len: Block,
    pub delta: f64,
    pub seed: u64,
    pub welfare: Option<f64>,
    pub benchmark: Option<f64>,
    pub ratio: Option<f64>,
    pub min_slackness: Option<f64>,
    pub mean_iterations: Option<f64>,
    pub error: Option<String>,
}

/// Runs the cartesian grid over `alg`, `m`, `T`, `L`, `delta` and seeds
/// (`seeds = N` runs seeds `seed..seed+N`) concurrently. Rows come back in
/// grid order; `sweep.csv` is written to `out-dir` when set.
pub fn cmd_sweep(s: &Settings) -> Result<Vec<SweepRow>, HarnessError> {
    let algs: Vec<AlgorithmKind> = s.list("alg")?.unwrap_or(vec![AlgorithmKind::Greedy]);
    let ms: Vec<usize> = s.list("m")?.unwrap_or(vec![2]);
    let ts: Vec<Block> = s.list("t")?.unwrap_or(vec![10]);
    let ls: Vec<Block> = s.list("l")?.unwrap_or(vec![1]);
    let deltas: Vec<f64> = s.list("delta")?.unwrap_or(vec![0.25]);
    let first: u64 = s.get_or("seed", 0)?;
    let count: u64 = s.get_or("seeds", 1)?;

    let mut cells = Vec::new();
    for alg in &algs {
        for &m in &ms {
            for &t in &ts {
                for &l in &ls {
                    for &delta in &deltas {
                        for seed in first..first + count {
                            let mut c = s.clone();
                            c.set("alg", alg.to_string());
                            c.set("m", m.to_string());
                            c.set("t", t.to_string());
                            c.set("l", l.to_string());
                            c.set("delta", delta.to_string());
                            c.set("seed", seed.to_string());
                            c.0.remove("out-dir");
                            cells.push((alg.to_string(), m, t, l, delta, seed, c));
                        }
                    }
                }
            }
        }
    }
    let source = s.raw("source").unwrap_or("random").to_owned();
    let rows: Vec<SweepRow> = cells
        .into_par_iter()
        .map(|(alg, m, t, l, delta, seed, cell)| {
            let mut row = SweepRow {
                algorithm: alg,
                source: source.clone(),
                m,
                horizon: t,
                batch_len: l,
                delta,
                seed,
                welfare: None,
                benchmark: None,
                ratio: None,
                min_slackness: None,
                mean_iterations: None,
                error: None,
            };
            match RunConfig::from_settings(&cell).and_then(|cfg| execute(&cfg)) {
                Ok(r) => {
                    row.horizon = r.summary.horizon;
                    row.welfare = Some(r.summary.total_welfare);
                    row.benchmark = r.summary.benchmark_welfare;
                    row.ratio = r.summary.ratio;
                    row.min_slackness = Some(r.summary.min_slackness);
                    row.mean_iterations = r.summary.mean_iterations;
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();
    if let Some(dir) = s.raw("out-dir") {
        fs::create_dir_all(dir)?;
        write_sweep_csv(&rows, fs::File::create(Path::new(dir).join("sweep.csv"))?)?;
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], w: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(w);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_parse_and_override() {
        let file = Settings::parse("# demo\nalg = greedy\nT: 4\nout_dir = x\n").unwrap();
        assert_eq!(file.raw("out-dir"), Some("x"));
        let mut flags = Settings::new();
        flags.set("--T", "6");
        let s = file.merged(&flags);
        assert_eq!(s.get::<Block>("t").unwrap(), Some(6));
        assert_eq!(s.raw("alg"), Some("greedy"));
        assert!(Settings::parse("nonsense").is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for name in ["greedy", "oracle-exact", "oracle-det", "oracle-rand", "batch-oracle-rand"] {
            assert_eq!(name.parse::<AlgorithmKind>().unwrap().to_string(), name);
        }
        assert_eq!("rand".parse::<AlgorithmKind>().unwrap(), AlgorithmKind::OracleRand);
        assert!("bogus".parse::<AlgorithmKind>().is_err());
    }

    #[test]
    fn greedy_on_the_two_phase_adversary() {
        let mut s = Settings::new();
        s.set("source", "two-phase");
        s.set("T", "4");
        let r = execute(&RunConfig::from_settings(&s).unwrap()).unwrap();
        assert!((r.summary.total_welfare - 6.0).abs() < 1e-12);
        assert!((r.summary.ratio.unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(r.summary.adversary_case.as_deref(), Some("add-c"));
    }

    #[test]
    fn odd_horizon_is_an_input_error() {
        let mut s = Settings::new();
        s.set("source", "two-phase");
        s.set("T", "5");
        let err = execute(&RunConfig::from_settings(&s).unwrap()).err().unwrap();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn sweep_rows_follow_grid_order() {
        let mut s = Settings::new();
        s.set("alg", "greedy,oracle-det");
        s.set("n", "8");
        s.set("T", "3");
        s.set("seeds", "2");
        let rows = cmd_sweep(&s).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].algorithm, "greedy");
        assert_eq!(rows[3].algorithm, "oracle-det");
        assert_eq!(rows[1].seed, 1);
        assert!(rows.iter().all(|r| r.error.is_none()));
    }
}
