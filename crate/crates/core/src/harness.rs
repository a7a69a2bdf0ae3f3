//! Experiment orchestration.
//!
//! Configuration is line-oriented plain text:
//!
//! ```text
//! # comment
//! problem.kind = mpb          # static | parabola | mpb (optional when a section key is present)
//! mpb.change_every = 5000
//! algorithm.name = cpsol      # cpsol | spso
//! swarm.population = 40
//! run.runs = 30
//! run.seed = 0
//! ```
//!
//! Unspecified values take the documented defaults. Later lines override
//! earlier ones, which is how CLI flags and sweep grid points are applied.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::baseline::SpsoState;
use crate::benchmarks::{
    ChangeClock, DomainPolicy, DynamicProblem, MovementKind, MpbConfig, ParabolaLandscape,
    PeaksLandscape, Problem, StaticFunctionId, StaticLandscape,
};
use crate::error::{Error, Result};
use crate::grid::Topology;
use crate::metrics::{aggregate, Aggregate, MetricsTracker, Monitored, OfflineMode, RunReport, SamplingMode};
use crate::random::RandomSource;
use crate::swarm::{LocalSearchTarget, SwarmParams, SwarmState};

pub const SUMMARY_HEADER: &str = "algorithm,problem,runs,metric,mean,stddev,stderr";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Cpsol,
    Spso,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cpsol => "cpsol",
            Algorithm::Spso => "spso",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cpsol" => Ok(Algorithm::Cpsol),
            "spso" => Ok(Algorithm::Spso),
            other => Err(Error::InvalidInput(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Static {
        function: StaticFunctionId,
        dimension: usize,
        domain: DomainPolicy,
    },
    Parabola {
        movement: MovementKind,
        tau: f64,
        dimension: usize,
        /// Iterations between changes.
        change_every: u64,
    },
    Mpb(MpbConfig),
}

impl ProblemSpec {
    pub fn label(&self) -> String {
        match self {
            ProblemSpec::Static { function, dimension, .. } => format!("{function}-d{dimension}"),
            ProblemSpec::Parabola {
                movement,
                tau,
                dimension,
                change_every,
            } => format!("parabola-{movement}-tau{tau}-f{change_every}-d{dimension}"),
            ProblemSpec::Mpb(c) => format!("mpb-m{}-f{}-d{}", c.peak_count, c.change_every, c.dimension),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ProblemSpec::Static { .. } => "static",
            ProblemSpec::Parabola { .. } => "parabola",
            ProblemSpec::Mpb(_) => "mpb",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub algorithm: Algorithm,
    pub params: SwarmParams,
    /// Iteration cap; `None` means unlimited (an evaluation budget must be set).
    pub iterations: Option<u64>,
    /// Evaluation budget.
    pub evaluations: Option<u64>,
    pub runs: usize,
    pub base_seed: u64,
    pub out_dir: PathBuf,
    pub sampling: SamplingMode,
    pub offline_mode: OfflineMode,
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| Error::config(line, format!("bad value `{value}` for `{key}`: {e}")))
}

/// Parses configuration text, filling unspecified fields with defaults.
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    // key -> (line, value); later lines win
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::config(line, format!("expected `section.key = value`, got `{content}`")))?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        if !key.contains('.') {
            return Err(Error::config(line, format!("key `{key}` has no section")));
        }
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::config(line, format!("unknown key `{key}`")));
        }
        entries.insert(key, (line, value));
    }

    let get = |k: &str| entries.get(k).map(|(l, v)| (*l, v.as_str()));
    macro_rules! opt {
        ($key:expr, $ty:ty) => {
            match get($key) {
                Some((l, v)) => Some(parse_value::<$ty>(l, $key, v)?),
                None => None,
            }
        };
    }

    // problem kind from the explicit key or from the sections present
    let mut kind: Option<(usize, String)> = get("problem.kind").map(|(l, v)| (l, v.to_ascii_lowercase()));
    for section in ["static", "parabola", "mpb"] {
        let prefix = format!("{section}.");
        if let Some((_, (line, _))) = entries.iter().find(|(k, _)| k.starts_with(&prefix)) {
            match &kind {
                Some((_, k)) if k != section => {
                    return Err(Error::config(
                        *line,
                        format!("`{section}` settings conflict with problem `{k}`"),
                    ))
                }
                Some(_) => {}
                None => kind = Some((*line, section.to_string())),
            }
        }
    }
    let (kind_line, kind) = kind.ok_or_else(|| Error::config(0, "no problem specified"))?;

    let problem = match kind.as_str() {
        "static" => ProblemSpec::Static {
            function: opt!("static.function", StaticFunctionId)
                .ok_or_else(|| Error::config(kind_line, "static problem needs `static.function`"))?,
            dimension: opt!("static.dimension", usize).unwrap_or(20),
            domain: match get("static.domain") {
                None => DomainPolicy::Reject,
                Some((_, "reject")) => DomainPolicy::Reject,
                Some((_, "clamp")) => DomainPolicy::Clamp,
                Some((l, v)) => return Err(Error::config(l, format!("unknown domain policy `{v}`"))),
            },
        },
        "parabola" => ProblemSpec::Parabola {
            movement: opt!("parabola.movement", MovementKind).unwrap_or(MovementKind::Linear),
            tau: opt!("parabola.tau", f64).unwrap_or(0.1),
            dimension: opt!("parabola.dimension", usize).unwrap_or(30),
            change_every: opt!("parabola.change_every", u64).unwrap_or(1000),
        },
        "mpb" => {
            let d = MpbConfig::default();
            ProblemSpec::Mpb(MpbConfig {
                peak_count: opt!("mpb.peaks", usize).unwrap_or(d.peak_count),
                change_every: opt!("mpb.change_every", u64).unwrap_or(d.change_every),
                height_severity: opt!("mpb.height_severity", f64).unwrap_or(d.height_severity),
                width_severity: opt!("mpb.width_severity", f64).unwrap_or(d.width_severity),
                shift_length: opt!("mpb.shift_length", f64).unwrap_or(d.shift_length),
                dimension: opt!("mpb.dimension", usize).unwrap_or(d.dimension),
                height_range: (
                    opt!("mpb.height_min", f64).unwrap_or(d.height_range.0),
                    opt!("mpb.height_max", f64).unwrap_or(d.height_range.1),
                ),
                width_range: (
                    opt!("mpb.width_min", f64).unwrap_or(d.width_range.0),
                    opt!("mpb.width_max", f64).unwrap_or(d.width_range.1),
                ),
                initial_height: opt!("mpb.initial_height", f64).unwrap_or(d.initial_height),
                bounds: (
                    opt!("mpb.lower", f64).unwrap_or(d.bounds.0),
                    opt!("mpb.upper", f64).unwrap_or(d.bounds.1),
                ),
            })
        }
        other => return Err(Error::config(kind_line, format!("unknown problem kind `{other}`"))),
    };
    if let ProblemSpec::Mpb(c) = &problem {
        c.validate().map_err(|e| Error::config(kind_line, e.to_string()))?;
    }

    let base = match problem {
        ProblemSpec::Mpb(_) => SwarmParams::default(),
        _ => SwarmParams::static_defaults(),
    };
    let params = SwarmParams {
        a1: opt!("swarm.a1", f64).unwrap_or(base.a1),
        a2: opt!("swarm.a2", f64).unwrap_or(base.a2),
        w_range: (
            opt!("swarm.w_min", f64).unwrap_or(base.w_range.0),
            opt!("swarm.w_max", f64).unwrap_or(base.w_range.1),
        ),
        topology: opt!("swarm.topology", Topology).unwrap_or(base.topology),
        partitions: opt!("swarm.partitions", usize).unwrap_or(base.partitions),
        population: opt!("swarm.population", usize).unwrap_or(base.population),
        cluster_radius_fraction: opt!("swarm.cluster_radius_fraction", f64).unwrap_or(base.cluster_radius_fraction),
        group_size_max: opt!("swarm.group_size_max", usize).unwrap_or(base.group_size_max),
        convergence_radius: opt!("swarm.convergence_radius", f64).or(base.convergence_radius),
        vmax_fraction: opt!("swarm.vmax_fraction", f64).unwrap_or(base.vmax_fraction),
        local_search: match get("swarm.local_search") {
            None => base.local_search,
            Some((_, "cell")) => LocalSearchTarget::Cell,
            Some((_, "group")) => LocalSearchTarget::Group,
            Some((_, "off")) => LocalSearchTarget::Off,
            Some((l, v)) => return Err(Error::config(l, format!("unknown local search target `{v}`"))),
        },
        ls_step_fraction: opt!("swarm.ls_step_fraction", f64).unwrap_or(base.ls_step_fraction),
        ls_min_step_fraction: opt!("swarm.ls_min_step_fraction", f64).unwrap_or(base.ls_min_step_fraction),
        ls_budget_per_dim: opt!("swarm.ls_budget_per_dim", u64).unwrap_or(base.ls_budget_per_dim),
    };
    params
        .validate()
        .map_err(|e| Error::config(get("swarm.population").map_or(0, |(l, _)| l), e.to_string()))?;

    let mut iterations = opt!("run.iterations", u64);
    let evaluations = opt!("run.evaluations", u64);
    if iterations.is_none() && evaluations.is_none() {
        iterations = match &problem {
            ProblemSpec::Static { .. } => Some(1000),
            ProblemSpec::Parabola { change_every, .. } => Some(10 * change_every),
            ProblemSpec::Mpb(_) => None,
        };
    }
    let evaluations = match (&problem, iterations, evaluations) {
        (ProblemSpec::Mpb(c), None, None) => Some(100 * c.change_every),
        (_, _, e) => e,
    };

    let runs = opt!("run.runs", usize).unwrap_or(30);
    if runs < 1 {
        return Err(Error::config(get("run.runs").map_or(0, |(l, _)| l), "runs must be at least 1"));
    }

    let sampling = match get("metrics.sampling") {
        None | Some((_, "per_evaluation")) => SamplingMode::PerEvaluation,
        Some((_, "per_iteration")) => SamplingMode::PerIteration,
        Some((l, v)) => return Err(Error::config(l, format!("unknown sampling mode `{v}`"))),
    };
    let offline_mode = match get("metrics.offline") {
        None => match problem {
            ProblemSpec::Mpb(_) => OfflineMode::Gap,
            _ => OfflineMode::Raw,
        },
        Some((_, "raw")) => OfflineMode::Raw,
        Some((_, "gap")) => OfflineMode::Gap,
        Some((l, v)) => return Err(Error::config(l, format!("unknown offline mode `{v}`"))),
    };
    if offline_mode == OfflineMode::Gap && matches!(problem, ProblemSpec::Static { .. }) {
        return Err(Error::config(
            get("metrics.offline").map_or(0, |(l, _)| l),
            "gap offline error needs a known optimum; static problems have none",
        ));
    }

    Ok(ExperimentConfig {
        problem,
        algorithm: opt!("algorithm.name", Algorithm).unwrap_or(Algorithm::Cpsol),
        params,
        iterations,
        evaluations,
        runs,
        base_seed: opt!("run.seed", u64).unwrap_or(0),
        out_dir: get("run.out").map(|(_, v)| PathBuf::from(v)).unwrap_or_else(|| PathBuf::from("out")),
        sampling,
        offline_mode,
    })
}

const KNOWN_KEYS: &[&str] = &[
    "problem.kind",
    "static.function",
    "static.dimension",
    "static.domain",
    "parabola.movement",
    "parabola.tau",
    "parabola.dimension",
    "parabola.change_every",
    "mpb.peaks",
    "mpb.change_every",
    "mpb.height_severity",
    "mpb.width_severity",
    "mpb.shift_length",
    "mpb.dimension",
    "mpb.height_min",
    "mpb.height_max",
    "mpb.width_min",
    "mpb.width_max",
    "mpb.initial_height",
    "mpb.lower",
    "mpb.upper",
    "algorithm.name",
    "swarm.a1",
    "swarm.a2",
    "swarm.w_min",
    "swarm.w_max",
    "swarm.topology",
    "swarm.partitions",
    "swarm.population",
    "swarm.cluster_radius_fraction",
    "swarm.group_size_max",
    "swarm.convergence_radius",
    "swarm.vmax_fraction",
    "swarm.local_search",
    "swarm.ls_step_fraction",
    "swarm.ls_min_step_fraction",
    "swarm.ls_budget_per_dim",
    "run.iterations",
    "run.evaluations",
    "run.runs",
    "run.seed",
    "run.out",
    "metrics.sampling",
    "metrics.offline",
];

/// Outcome of a single run together with its trace.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub trace: MetricsTracker,
    /// Environment changes actually applied by the problem.
    pub changes_applied: u64,
}

/// Executes run `index` (seed `base_seed + index`).
pub fn run_single(cfg: &ExperimentConfig, index: usize) -> Result<RunOutcome> {
    let seed = cfg.base_seed.wrapping_add(index as u64);
    let mut env = RandomSource::with_stream(seed, 1);
    match &cfg.problem {
        ProblemSpec::Static {
            function,
            dimension,
            domain,
        } => {
            let p = DynamicProblem::new(StaticLandscape::new(*function, *dimension, *domain)?, ChangeClock::Never, env)?;
            drive(cfg, seed, p)
        }
        ProblemSpec::Parabola {
            movement,
            tau,
            dimension,
            change_every,
        } => {
            let land = ParabolaLandscape::new(*dimension, *movement, *tau)?;
            drive(cfg, seed, DynamicProblem::new(land, ChangeClock::Iterations(*change_every), env)?)
        }
        ProblemSpec::Mpb(c) => {
            let land = PeaksLandscape::random(c, &mut env)?;
            drive(cfg, seed, DynamicProblem::new(land, ChangeClock::Evaluations(c.change_every), env)?)
        }
    }
}

enum Runner {
    Cpsol(SwarmState),
    Spso(SpsoState),
}

fn drive<P: Problem>(cfg: &ExperimentConfig, seed: u64, problem: P) -> Result<RunOutcome> {
    if cfg.iterations.is_none() && cfg.evaluations.is_none() {
        return Err(Error::InvalidInput("a run needs an iteration cap or an evaluation budget".into()));
    }
    let mut src = RandomSource::with_stream(seed, 0);
    let mut problem = Monitored::new(problem, cfg.sampling, cfg.evaluations);
    let started = match cfg.algorithm {
        Algorithm::Cpsol => SwarmState::initialize(cfg.params.clone(), &mut problem, &mut src).map(Runner::Cpsol),
        Algorithm::Spso => SpsoState::initialize(cfg.params.clone(), &mut problem, &mut src).map(Runner::Spso),
    };
    let mut runner = match started {
        Ok(r) => Some(r),
        Err(Error::BudgetExhausted(_)) => None,
        Err(e) => return Err(e),
    };
    let mut iteration = 0u64;
    if let Some(runner) = runner.as_mut() {
        while cfg.iterations.is_none_or(|n| iteration < n) && !problem.exhausted() {
            let step = match runner {
                Runner::Cpsol(s) => s.iterate(&mut problem, &mut src),
                Runner::Spso(s) => s.iterate(&mut problem, &mut src),
            };
            match step {
                Ok(()) => iteration += 1,
                Err(Error::BudgetExhausted(_)) => break,
                Err(e) => return Err(e),
            }
        }
    }
    let changes_detected = match &runner {
        Some(Runner::Cpsol(s)) => s.changes_detected(),
        Some(Runner::Spso(s)) => s.changes_detected(),
        None => 0,
    };
    let best_final = problem
        .best_since_change()
        .ok_or_else(|| Error::InvalidInput("run performed no evaluations".into()))?;
    let evals_total = problem.count();
    let (inner, trace) = problem.into_parts();
    let offline_error_raw = trace.offline_error(OfflineMode::Raw)?;
    let offline_error_gap = trace.has_optimum().then(|| trace.offline_error(OfflineMode::Gap)).transpose()?;
    Ok(RunOutcome {
        report: RunReport {
            offline_error_raw,
            offline_error_gap,
            best_final,
            evals_total,
            changes_detected,
            seed,
        },
        trace,
        changes_applied: inner.changes(),
    })
}

/// One summary row.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub metric: String,
    pub mean: f64,
    pub stddev: Option<f64>,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryReport {
    pub algorithm: Algorithm,
    pub problem: String,
    pub offline_mode: OfflineMode,
    /// Per-run reports in run-index order.
    pub runs: Vec<RunReport>,
    pub objective_is_min: bool,
}

impl SummaryReport {
    fn stats(values: &[f64]) -> (f64, Option<f64>, Option<f64>) {
        match aggregate(values) {
            Ok(Aggregate { mean, stddev, stderr }) => (mean, Some(stddev), Some(stderr)),
            Err(_) => (values[0], None, None),
        }
    }

    /// Aggregate of the chosen offline-error mode.
    pub fn offline(&self) -> Option<Aggregate> {
        let values: Option<Vec<f64>> = match self.offline_mode {
            OfflineMode::Raw => Some(self.runs.iter().map(|r| r.offline_error_raw).collect()),
            OfflineMode::Gap => self.runs.iter().map(|r| r.offline_error_gap).collect(),
        };
        aggregate(&values?).ok()
    }

    pub fn best_final(&self) -> Option<Aggregate> {
        aggregate(&self.runs.iter().map(|r| r.best_final).collect::<Vec<_>>()).ok()
    }

    /// Best final fitness over all runs.
    pub fn best_of_runs(&self) -> f64 {
        let it = self.runs.iter().map(|r| r.best_final);
        if self.objective_is_min {
            it.fold(f64::INFINITY, f64::min)
        } else {
            it.fold(f64::NEG_INFINITY, f64::max)
        }
    }

    pub fn rows(&self) -> Vec<SummaryRow> {
        let mut rows = Vec::new();
        let mut push = |metric: &str, values: &[f64]| {
            let (mean, stddev, stderr) = Self::stats(values);
            rows.push(SummaryRow {
                metric: metric.to_string(),
                mean,
                stddev,
                stderr,
            });
        };
        let raw: Vec<f64> = self.runs.iter().map(|r| r.offline_error_raw).collect();
        push("offline_error_raw", &raw);
        let gap: Option<Vec<f64>> = self.runs.iter().map(|r| r.offline_error_gap).collect();
        if let Some(gap) = gap {
            push("offline_error_gap", &gap);
        }
        let best: Vec<f64> = self.runs.iter().map(|r| r.best_final).collect();
        push("best_final", &best);
        let evals: Vec<f64> = self.runs.iter().map(|r| r.evals_total as f64).collect();
        push("evals_total", &evals);
        rows.push(SummaryRow {
            metric: "best_final_of_runs".into(),
            mean: self.best_of_runs(),
            stddev: None,
            stderr: None,
        });
        rows
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let mut out = String::from(SUMMARY_HEADER);
        out.push('\n');
        for r in self.rows() {
            out.push_str(&format!(
                "{},{},{},{},{:.6},{},{}\n",
                self.algorithm,
                self.problem,
                self.runs.len(),
                r.metric,
                r.mean,
                opt(r.stddev),
                opt(r.stderr)
            ));
        }
        out
    }
}

/// A parsed `summary.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSummaryRow {
    pub algorithm: String,
    pub problem: String,
    pub runs: usize,
    pub metric: String,
    pub mean: f64,
    pub stddev: Option<f64>,
    pub stderr: Option<f64>,
}

pub fn parse_summary(text: &str) -> Result<Vec<ParsedSummaryRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(SUMMARY_HEADER) {
        return Err(Error::InvalidInput("summary file lacks the expected header".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            let bad = || Error::InvalidInput(format!("summary line {}: `{l}`", i + 2));
            if f.len() != 7 {
                return Err(bad());
            }
            let opt = |s: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|_| bad())
                }
            };
            Ok(ParsedSummaryRow {
                algorithm: f[0].to_string(),
                problem: f[1].to_string(),
                runs: f[2].parse().map_err(|_| bad())?,
                metric: f[3].to_string(),
                mean: f[4].parse().map_err(|_| bad())?,
                stddev: opt(f[5])?,
                stderr: opt(f[6])?,
            })
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn trace_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("run_{index}.csv"))
}

pub fn write_trace(dir: &Path, index: usize, trace: &MetricsTracker) -> Result<()> {
    write_file(&trace_path(dir, index), &trace.to_csv())
}

pub fn write_summary(report: &SummaryReport, dir: &Path) -> Result<()> {
    write_file(&dir.join("summary.csv"), &report.to_csv())
}

/// Writes `run_<k>.csv` for every trace plus `summary.csv`.
pub fn write_report(report: &SummaryReport, traces: &[MetricsTracker], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (k, t) in traces.iter().enumerate() {
        write_trace(dir, k, t)?;
    }
    write_summary(report, dir)
}

/// Runs every seed, writing each trace as its run completes and the summary
/// once all runs are done. Output bytes do not depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SummaryReport> {
    let dir = cfg.out_dir.as_path();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let reports: Vec<RunReport> = (0..cfg.runs)
        .into_par_iter()
        .map(|k| {
            let outcome = run_single(cfg, k)?;
            write_trace(dir, k, &outcome.trace)?;
            Ok(outcome.report)
        })
        .collect::<Result<_>>()?;
    let report = summarize(cfg, reports);
    write_summary(&report, dir)?;
    Ok(report)
}

/// Runs every seed in memory without touching the filesystem.
pub fn run_in_memory(cfg: &ExperimentConfig) -> Result<SummaryReport> {
    let reports = (0..cfg.runs)
        .into_par_iter()
        .map(|k| run_single(cfg, k).map(|o| o.report))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(cfg, reports))
}

fn summarize(cfg: &ExperimentConfig, runs: Vec<RunReport>) -> SummaryReport {
    SummaryReport {
        algorithm: cfg.algorithm,
        problem: cfg.problem.label(),
        offline_mode: cfg.offline_mode,
        runs,
        objective_is_min: !matches!(cfg.problem, ProblemSpec::Mpb(_)),
    }
}

/// Parses `key=v1,v2,...` grid axes.
pub fn parse_grid_axis(spec: &str) -> Result<(String, Vec<String>)> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| Error::InvalidInput(format!("grid axis `{spec}` must look like key=v1,v2")))?;
    let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(Error::InvalidInput(format!("grid axis `{spec}` has no values")));
    }
    Ok((key.trim().to_string(), values))
}

/// Cartesian product of grid axes as lists of `(key, value)` assignments.
pub fn grid_points(axes: &[(String, Vec<String>)]) -> Vec<Vec<(String, String)>> {
    axes.iter().fold(vec![Vec::new()], |acc, (key, values)| {
        acc.into_iter()
            .flat_map(|point| {
                values.iter().map(move |v| {
                    let mut p = point.clone();
                    p.push((key.clone(), v.clone()));
                    p
                })
            })
            .collect()
    })
}

/// Directory name for a grid point, e.g. `parabola.tau=0.1_parabola.movement=linear`.
pub fn point_dir_name(point: &[(String, String)]) -> String {
    point
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join("_")
        .replace(['/', '\\'], "-")
}

/// Appends `key = value` overrides to configuration text.
pub fn with_overrides(text: &str, overrides: &[(String, String)]) -> String {
    let mut out = text.to_string();
    if !out.ends_with('\n') && !out.is_empty() {
        out.push('\n');
    }
    for (k, v) in overrides {
        out.push_str(&format!("{k} = {v}\n"));
    }
    out
}

/// Runs one experiment per grid point under `out/<point>`.
pub fn run_sweep(text: &str, axes: &[(String, Vec<String>)], out: &Path) -> Result<Vec<(String, SummaryReport)>> {
    grid_points(axes)
        .into_iter()
        .map(|point| {
            let name = point_dir_name(&point);
            let mut overrides = point.clone();
            overrides.push(("run.out".into(), out.join(&name).display().to_string()));
            let cfg = load_config(&with_overrides(text, &overrides))?;
            run_experiment(&cfg).map(|r| (name, r))
        })
        .collect()
}

/// Collects every `summary.csv` under `dir` into one comparison table,
/// written to `dir/comparison.csv` and returned as text.
pub fn compare_summaries(dir: &Path) -> Result<String> {
    let mut files = Vec::new();
    collect_summaries(dir, &mut files)?;
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidInput(format!("no summary.csv under {}", dir.display())));
    }
    let mut out = String::from("point,algorithm,problem,runs,metric,mean,stddev,stderr\n");
    for f in files {
        let text = fs::read_to_string(&f).map_err(|e| Error::io(&f, e))?;
        let point = f
            .parent()
            .and_then(|p| p.strip_prefix(dir).ok())
            .map(|p| p.display().to_string())
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| ".".into());
        for r in parse_summary(&text)? {
            let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
            out.push_str(&format!(
                "{point},{},{},{},{},{:.6},{},{}\n",
                r.algorithm,
                r.problem,
                r.runs,
                r.metric,
                r.mean,
                opt(r.stddev),
                opt(r.stderr)
            ));
        }
    }
    let target = dir.join("comparison.csv");
    write_file(&target, &out)?;
    Ok(out)
}

fn collect_summaries(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            collect_summaries(&path, out)?;
        } else if path.file_name().is_some_and(|n| n == "summary.csv") {
            out.push(path);
        }
    }
    Ok(())
}
