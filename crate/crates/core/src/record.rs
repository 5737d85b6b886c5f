//! Run configuration, per-iteration traces and metric hooks.

use std::time::Duration;

use crate::error::{Error, Result};
use crate::point::PrimalDualPoint;
use crate::schedule::StepSchedule;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Number of iterations `N`.
    pub horizon: u64,
    pub seed: u64,
    pub stream_id: u64,
    pub schedule: StepSchedule,
    /// Record every `trace_thinning`-th iteration (and always the last one).
    pub trace_thinning: u64,
    /// Report the averaged iterate as the run's output; otherwise the last iterate.
    pub averaging: bool,
    /// Starting point; solvers pick their documented default when absent.
    pub initial: Option<PrimalDualPoint>,
}

impl RunConfig {
    pub fn new(horizon: u64, seed: u64) -> Self {
        Self {
            horizon,
            seed,
            stream_id: 0,
            schedule: StepSchedule::ConstantOverSqrtN { horizon },
            trace_thinning: 1,
            averaging: true,
            initial: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::arg("horizon N must be at least 1"));
        }
        if self.trace_thinning == 0 {
            return Err(Error::arg("trace_thinning must be at least 1"));
        }
        self.schedule.validate()?;
        if let Some(h) = self.schedule.horizon() {
            if h < self.horizon {
                return Err(Error::arg(format!(
                    "schedule horizon {h} is shorter than the run horizon {}",
                    self.horizon
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn records(&self, k: u64) -> bool {
        k.is_multiple_of(self.trace_thinning) || k == self.horizon
    }
}

/// What a metric hook sees at a recorded iteration.
#[derive(Debug, Clone, Copy)]
pub struct IterateView<'a> {
    pub k: u64,
    /// The starting point `z^1` of the run.
    pub start: &'a PrimalDualPoint,
    pub gamma: f64,
    pub iterate: &'a PrimalDualPoint,
    pub average: &'a PrimalDualPoint,
}

/// Evaluates named scalar metrics at recorded iterations. Hooks may keep state
/// across calls (running minima, running means).
pub trait MetricHook {
    fn names(&self) -> Vec<String>;
    fn evaluate(&mut self, view: &IterateView<'_>) -> Vec<f64>;
}

/// Adapts a closure into a single-metric hook.
pub struct FnMetric<F> {
    name: String,
    f: F,
}

impl<F> FnMetric<F>
where
    F: FnMut(&IterateView<'_>) -> f64,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self {
            name: name.into(),
            f,
        }
    }
}

impl<F> MetricHook for FnMetric<F>
where
    F: FnMut(&IterateView<'_>) -> f64,
{
    fn names(&self) -> Vec<String> {
        vec![self.name.clone()]
    }

    fn evaluate(&mut self, view: &IterateView<'_>) -> Vec<f64> {
        vec![(self.f)(view)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordedIterate {
    pub k: u64,
    pub gamma: f64,
    pub iterate: PrimalDualPoint,
    pub average: PrimalDualPoint,
    pub metrics: Vec<f64>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub metric_names: Vec<String>,
    pub rows: Vec<RecordedIterate>,
    /// Starting point `z^1`.
    pub initial: PrimalDualPoint,
    /// Averaged iterate after the last iteration.
    pub final_average: PrimalDualPoint,
    /// The point produced by the last update.
    pub final_iterate: PrimalDualPoint,
    pub averaging: bool,
}

impl RunRecord {
    pub(crate) fn new(metric_names: Vec<String>, start: PrimalDualPoint, averaging: bool) -> Self {
        Self {
            metric_names,
            rows: Vec::new(),
            initial: start.clone(),
            final_average: start.clone(),
            final_iterate: start,
            averaging,
        }
    }

    pub(crate) fn push(&mut self, row: RecordedIterate) {
        if let Some(last) = self.rows.last() {
            assert!(row.k > last.k, "recorded iterations must strictly increase");
            assert!(row.elapsed >= last.elapsed, "elapsed time went backwards");
        }
        self.rows.push(row);
    }

    /// The run's reported solution: the averaged iterate when averaging is on.
    pub fn output(&self) -> &PrimalDualPoint {
        if self.averaging {
            &self.final_average
        } else {
            &self.final_iterate
        }
    }

    pub fn metric_index(&self, name: &str) -> Option<usize> {
        self.metric_names.iter().position(|n| n == name)
    }

    /// Column of a named metric over all recorded rows.
    pub fn metric_series(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.metric_index(name)?;
        Some(self.rows.iter().map(|r| r.metrics[i]).collect())
    }

    pub fn last_metric(&self, name: &str) -> Option<f64> {
        let i = self.metric_index(name)?;
        self.rows.last().map(|r| r.metrics[i])
    }

    /// Recorded `k` strictly increasing and elapsed time nondecreasing.
    pub fn is_monotone(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].k > w[0].k && w[1].elapsed >= w[0].elapsed)
    }
}

pub(crate) fn collect_metric_names(hooks: &[&mut dyn MetricHook]) -> Vec<String> {
    hooks.iter().flat_map(|h| h.names()).collect()
}

pub(crate) fn evaluate_hooks(
    hooks: &mut [&mut dyn MetricHook],
    view: &IterateView<'_>,
) -> Vec<f64> {
    hooks.iter_mut().flat_map(|h| h.evaluate(view)).collect()
}
