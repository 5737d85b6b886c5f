//! Linearized stochastic approximation augmented Lagrangian (LSAAL) method
//! for `min E[F(x, xi)]` subject to `E[G(x, xi)] in K`, `x in X`.
//!
//! Each iteration linearizes `F` and `G` at `x^k` with one sample, solves the
//! proximal x-subproblem over `X` and updates the multiplier in closed form.
//! The deterministic variant (LAAM) uses the full batch instead of a sample.

mod diagnostics;
mod subproblem;

pub use diagnostics::{
    estimate_constants, multiplier_bound_diagnostics, multiplier_step_bound, step_bound,
    EstimationBudget, MultiplierDiagnostics,
};
pub use subproblem::{
    solve_x_subproblem, x_subproblem_gradient, y_update, SubproblemSolution, XSubproblemSpec,
};

use std::time::Instant;

use crate::constants::ProblemConstants;
use crate::error::{Error, Result};
use crate::linalg;
use crate::oracles::{ConicOracle, ConicSample};
use crate::point::PrimalDualPoint;
use crate::record::{
    collect_metric_names, evaluate_hooks, IterateView, MetricHook, RecordedIterate, RunConfig,
    RunRecord,
};
use crate::rng::RandomSource;
use crate::saps::{check_divergence, streaming_average};

pub const DEFAULT_INNER_TOL: f64 = 1e-8;
pub const DEFAULT_INNER_MAX_ITERS: usize = 500;

#[derive(Debug, Clone)]
pub struct LsaalProblem<O> {
    pub oracle: O,
    /// Penalty parameter; `None` selects `1 / sqrt(N)`.
    pub sigma: Option<f64>,
    pub constants: Option<ProblemConstants>,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
}

impl<O: ConicOracle> LsaalProblem<O> {
    pub fn new(oracle: O) -> Result<Self> {
        let feasible = oracle.feasible_set();
        feasible.validate()?;
        if !feasible.is_indicator() {
            return Err(Error::arg("feasible set must be an indicator function"));
        }
        feasible.check_dim(oracle.dim_x())?;
        oracle.cone().validate()?;
        Ok(Self {
            oracle,
            sigma: None,
            constants: None,
            inner_tol: DEFAULT_INNER_TOL,
            inner_max_iters: DEFAULT_INNER_MAX_ITERS,
        })
    }

    pub fn sigma_for(&self, horizon: u64) -> Result<f64> {
        match self.sigma {
            Some(s) if s.is_finite() && s > 0.0 => Ok(s),
            Some(s) => Err(Error::arg(format!("sigma must be positive, got {s}"))),
            None if horizon > 0 => Ok(1.0 / (horizon as f64).sqrt()),
            None => Err(Error::arg("horizon N must be at least 1")),
        }
    }

    /// Default `x^1`: the normalized all-ones vector projected onto `X`.
    pub fn default_start(&self) -> Result<Vec<f64>> {
        let n = self.oracle.dim_x();
        let v = vec![1.0 / (n as f64).sqrt(); n];
        self.oracle.feasible_set().project(&v)
    }
}

/// Per-iteration quantities used by the step and multiplier audits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub k: u64,
    pub x_step_norm: f64,
    pub y_norm_before: f64,
    pub y_norm_after: f64,
    pub inner_iterations: usize,
    pub inner_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sampling {
    Stochastic,
    FullBatch,
}

fn at(iteration: u64) -> impl FnOnce(Error) -> Error {
    move |e| Error::AtIteration {
        iteration,
        source: Box::new(e),
    }
}

fn run<O: ConicOracle>(
    problem: &LsaalProblem<O>,
    config: &RunConfig,
    hooks: &mut [&mut dyn MetricHook],
    sampling: Sampling,
    mut audit: Option<&mut Vec<StepStats>>,
) -> Result<RunRecord> {
    config.validate()?;
    let oracle = &problem.oracle;
    let cone = oracle.cone();
    let feasible = oracle.feasible_set();
    let (n, m) = (oracle.dim_x(), cone.dim());
    let sigma = problem.sigma_for(config.horizon)?;
    let mut rng = RandomSource::new(config.seed, config.stream_id);
    let mut z = match &config.initial {
        Some(z) => {
            z.check_dims(n, m)?;
            z.clone()
        }
        None => PrimalDualPoint {
            x: problem.default_start()?,
            y: vec![0.0; m],
        },
    };
    let start = Instant::now();
    let mut record = RunRecord::new(collect_metric_names(hooks), z.clone(), config.averaging);
    let mut avg = z.clone();
    let mut weight = 0.0;
    for k in 1..=config.horizon {
        (avg, weight) = streaming_average(&avg, weight, &z, 1.0);
        if config.records(k) {
            let view = IterateView {
                k,
                start: &record.initial,
                gamma: sigma,
                iterate: &z,
                average: &avg,
            };
            let metrics = evaluate_hooks(hooks, &view);
            record.push(RecordedIterate {
                k,
                gamma: sigma,
                iterate: z.clone(),
                average: avg.clone(),
                metrics,
                elapsed: start.elapsed(),
            });
        }
        let sample: ConicSample = match sampling {
            Sampling::Stochastic => oracle.sample(&mut rng, &z.x),
            Sampling::FullBatch => oracle.full_batch(&z.x),
        }
        .map_err(at(k))?;
        let spec = XSubproblemSpec {
            x_k: &z.x,
            y_k: &z.y,
            sample: &sample,
            cone,
            sigma,
            inner_tol: problem.inner_tol,
            inner_max_iters: problem.inner_max_iters,
        };
        let sol = solve_x_subproblem(&spec, feasible).map_err(at(k))?;
        let y = y_update(cone, &z.y, sigma, &sample, &sol.x, &z.x).map_err(at(k))?;
        let next = PrimalDualPoint { x: sol.x, y };
        check_divergence(&next, k)?;
        if let Some(stats) = audit.as_deref_mut() {
            stats.push(StepStats {
                k,
                x_step_norm: linalg::dist(&next.x, &z.x),
                y_norm_before: linalg::norm(&z.y),
                y_norm_after: linalg::norm(&next.y),
                inner_iterations: sol.iterations,
                inner_residual: sol.residual,
            });
        }
        z = next;
    }
    record.final_average = avg;
    record.final_iterate = z;
    Ok(record)
}

/// Runs `config.horizon` LSAAL iterations with one oracle sample per iteration.
///
/// `x^1` defaults to [`LsaalProblem::default_start`] and `y^1` to zero; the
/// step-size schedule in `config` is ignored in favour of the constant `sigma`,
/// which is what recorded rows report as `gamma`. The output is the uniform
/// average of `z^1..z^N`.
pub fn run_lsaal<O: ConicOracle>(
    problem: &LsaalProblem<O>,
    config: &RunConfig,
    hooks: &mut [&mut dyn MetricHook],
) -> Result<RunRecord> {
    run(problem, config, hooks, Sampling::Stochastic, None)
}

/// [`run_lsaal`] that also returns per-iteration step statistics.
pub fn run_lsaal_audited<O: ConicOracle>(
    problem: &LsaalProblem<O>,
    config: &RunConfig,
    hooks: &mut [&mut dyn MetricHook],
) -> Result<(RunRecord, Vec<StepStats>)> {
    let mut stats = Vec::with_capacity(config.horizon as usize);
    let rec = run(
        problem,
        config,
        hooks,
        Sampling::Stochastic,
        Some(&mut stats),
    )?;
    Ok((rec, stats))
}

/// Deterministic variant: every sample is replaced by the full batch.
pub fn run_laam<O: ConicOracle>(
    problem: &LsaalProblem<O>,
    config: &RunConfig,
    hooks: &mut [&mut dyn MetricHook],
) -> Result<RunRecord> {
    run(problem, config, hooks, Sampling::FullBatch, None)
}

pub fn run_laam_audited<O: ConicOracle>(
    problem: &LsaalProblem<O>,
    config: &RunConfig,
    hooks: &mut [&mut dyn MetricHook],
) -> Result<(RunRecord, Vec<StepStats>)> {
    let mut stats = Vec::with_capacity(config.horizon as usize);
    let rec = run(
        problem,
        config,
        hooks,
        Sampling::FullBatch,
        Some(&mut stats),
    )?;
    Ok((rec, stats))
}
