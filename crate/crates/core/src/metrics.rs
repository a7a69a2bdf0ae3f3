//! Offline error and run aggregation.
//!
//! Samples are stored at trace precision (6 decimals) so the CSV trace is a
//! lossless record: averaging its columns reproduces the in-memory offline
//! error bit for bit.

use std::fmt::Write as _;

use crate::benchmarks::{Objective, Problem};
use crate::error::{Error, Result};
use crate::space::Bounds;

pub const TRACE_HEADER: &str = "eval,best_fitness,current_error";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    #[default]
    PerEvaluation,
    PerIteration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OfflineMode {
    /// Mean of the best-so-far fitness.
    Raw,
    /// Mean distance from the best-so-far fitness to the known optimum.
    Gap,
}

/// Rounds to the 6-decimal trace representation.
pub fn quantize(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.6}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub eval_index: u64,
    pub best_fitness: f64,
    pub optimum: Option<f64>,
    pub current_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MetricsTracker {
    objective: Objective,
    mode: SamplingMode,
    samples: Vec<Sample>,
}

impl MetricsTracker {
    pub fn new(objective: Objective, mode: SamplingMode) -> Self {
        Self {
            objective,
            mode,
            samples: Vec::new(),
        }
    }

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn record(&mut self, eval_index: u64, best_fitness: f64, optimum: Option<f64>) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if eval_index <= last.eval_index {
                return Err(Error::Sequencing {
                    last: last.eval_index,
                    got: eval_index,
                });
            }
        }
        self.samples.push(Sample {
            eval_index,
            best_fitness: quantize(best_fitness),
            optimum,
            current_error: optimum.map(|o| quantize(self.objective.gap(best_fitness, o))),
        });
        Ok(())
    }

    pub fn offline_error(&self, mode: OfflineMode) -> Result<f64> {
        if self.samples.is_empty() {
            return Err(Error::InvalidInput("offline error of an empty trace".into()));
        }
        let sum = match mode {
            OfflineMode::Raw => self.samples.iter().map(|s| s.best_fitness).sum::<f64>(),
            OfflineMode::Gap => self
                .samples
                .iter()
                .map(|s| s.current_error.ok_or(Error::MissingOptimum))
                .sum::<Result<f64>>()?,
        };
        Ok(sum / self.samples.len() as f64)
    }

    pub fn has_optimum(&self) -> bool {
        !self.samples.is_empty() && self.samples.iter().all(|s| s.current_error.is_some())
    }

    /// The trace CSV: header then one row per sample, 6-decimal floats,
    /// empty `current_error` when no optimum is known.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.samples.len() + 1));
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for s in &self.samples {
            let _ = write!(out, "{},{:.6},", s.eval_index, s.best_fitness);
            if let Some(e) = s.current_error {
                let _ = write!(out, "{e:.6}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mean: f64,
    /// Sample standard deviation, n − 1 denominator.
    pub stddev: f64,
    pub stderr: f64,
}

pub fn aggregate(values: &[f64]) -> Result<Aggregate> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData(n));
    }
    // order-independent: sum in sorted order
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let stddev = var.sqrt();
    Ok(Aggregate {
        mean,
        stddev,
        stderr: stddev / (n as f64).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub offline_error_raw: f64,
    pub offline_error_gap: Option<f64>,
    pub best_final: f64,
    pub evals_total: u64,
    pub changes_detected: u64,
    pub seed: u64,
}

/// Problem wrapper that samples best-so-far fitness, counts evaluations
/// independently of the optimizer and enforces an optional budget.
///
/// Best-so-far restarts with the first evaluation after each environment
/// change, so stale fitnesses never enter the metric.
#[derive(Debug)]
pub struct Monitored<P> {
    inner: P,
    tracker: MetricsTracker,
    best: Option<f64>,
    seen_changes: u64,
    count: u64,
    limit: Option<u64>,
}

impl<P: Problem> Monitored<P> {
    pub fn new(inner: P, mode: SamplingMode, limit: Option<u64>) -> Self {
        Self {
            tracker: MetricsTracker::new(inner.objective(), mode),
            seen_changes: inner.changes(),
            inner,
            best: None,
            count: 0,
            limit,
        }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    pub fn tracker(&self) -> &MetricsTracker {
        &self.tracker
    }

    pub fn into_parts(self) -> (P, MetricsTracker) {
        (self.inner, self.tracker)
    }

    /// Best fitness evaluated since the latest environment change.
    pub fn best_since_change(&self) -> Option<f64> {
        self.best
    }

    /// Evaluations counted by the wrapper itself.
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn exhausted(&self) -> bool {
        self.limit.is_some_and(|l| self.count >= l)
    }

    fn sample(&mut self) -> Result<()> {
        if let Some(best) = self.best {
            self.tracker.record(self.count, best, self.inner.optimum())?;
        }
        Ok(())
    }
}

impl<P: Problem> Problem for Monitored<P> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn bounds(&self) -> &Bounds {
        self.inner.bounds()
    }

    fn objective(&self) -> Objective {
        self.inner.objective()
    }

    fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        if let Some(limit) = self.limit {
            if self.count >= limit {
                return Err(Error::BudgetExhausted(limit));
            }
        }
        let v = self.inner.evaluate(x)?;
        self.count += 1;
        let changes = self.inner.changes();
        if changes != self.seen_changes {
            self.seen_changes = changes;
            self.best = None;
        }
        let objective = self.inner.objective();
        if self.best.is_none_or(|b| objective.is_better(v, b)) {
            self.best = Some(v);
        }
        if self.tracker.mode() == SamplingMode::PerEvaluation {
            self.sample()?;
        }
        Ok(v)
    }

    fn optimum(&self) -> Option<f64> {
        self.inner.optimum()
    }

    fn evaluations(&self) -> u64 {
        self.inner.evaluations()
    }

    fn changes(&self) -> u64 {
        self.inner.changes()
    }

    fn end_iteration(&mut self) {
        if self.tracker.mode() == SamplingMode::PerIteration
            && self.tracker.samples().last().is_none_or(|s| s.eval_index < self.count)
        {
            // count strictly increases between iterations, so this cannot fail
            let _ = self.sample();
        }
        self.inner.end_iteration();
    }
}
