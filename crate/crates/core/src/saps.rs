//! Stochastic approximation proximal subgradient (SAPS) method.
//!
//! Each iteration draws one oracle sample at `z^k = (x^k, y^k)` and takes a
//! proximal descent step in `x` and a proximal ascent step in `y`:
//!
//! ```text
//! x^{k+1} = prox_{gamma_k theta}(x^k - gamma_k G_x)
//! y^{k+1} = prox_{gamma_k omega}(y^k + gamma_k G_y)
//! ```
//!
//! The reported solution is the step-weighted average of `z^1..z^N`.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg;
use crate::oracles::{MinimaxOracle, MinimaxSample};
use crate::point::PrimalDualPoint;
use crate::prox::ProximableFunction;
use crate::record::{
    collect_metric_names, evaluate_hooks, IterateView, MetricHook, RecordedIterate, RunConfig,
    RunRecord,
};
use crate::rng::RandomSource;

/// Iterates with norm above this abort the run.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct SapsProblem<O> {
    pub oracle: O,
    /// Nonsmooth term on `x`.
    pub theta: ProximableFunction,
    /// Nonsmooth term on `y`.
    pub omega: ProximableFunction,
    pub known_saddle: Option<PrimalDualPoint>,
}

impl<O: MinimaxOracle> SapsProblem<O> {
    pub fn new(oracle: O, theta: ProximableFunction, omega: ProximableFunction) -> Result<Self> {
        let (n, m) = oracle.dims();
        theta.validate()?;
        omega.validate()?;
        theta.check_dim(n)?;
        omega.check_dim(m)?;
        Ok(Self {
            oracle,
            theta,
            omega,
            known_saddle: None,
        })
    }

    pub fn with_saddle(mut self, z: PrimalDualPoint) -> Result<Self> {
        let (n, m) = self.oracle.dims();
        z.check_dims(n, m)?;
        self.known_saddle = Some(z);
        Ok(self)
    }
}

/// One SAPS update from `z` using `sample`.
pub fn saps_step<O: MinimaxOracle>(
    problem: &SapsProblem<O>,
    z: &PrimalDualPoint,
    gamma: f64,
    sample: &MinimaxSample,
) -> Result<PrimalDualPoint> {
    let (n, m) = problem.oracle.dims();
    z.check_dims(n, m)?;
    crate::error::check_dim(n, sample.grad_x.len())?;
    crate::error::check_dim(m, sample.grad_y.len())?;
    let x = problem
        .theta
        .prox(gamma, &linalg::axpy(&z.x, -gamma, &sample.grad_x))?;
    let y = problem
        .omega
        .prox(gamma, &linalg::axpy(&z.y, gamma, &sample.grad_y))?;
    Ok(PrimalDualPoint { x, y })
}

/// Folds `z_new` with weight `gamma_new` into a weighted running average.
///
/// After updates with weights `gamma_1..gamma_k` the average equals
/// `sum gamma_j z^j / sum gamma_j`. Returns the new average and total weight.
pub fn streaming_average(
    prev_avg: &PrimalDualPoint,
    prev_weight: f64,
    z_new: &PrimalDualPoint,
    gamma_new: f64,
) -> (PrimalDualPoint, f64) {
    let weight = prev_weight + gamma_new;
    if prev_weight == 0.0 {
        return (z_new.clone(), weight);
    }
    let t = gamma_new / weight;
    let blend = |a: &[f64], b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(ai, bi)| ai + t * (bi - ai)).collect()
    };
    (
        PrimalDualPoint {
            x: blend(&prev_avg.x, &z_new.x),
            y: blend(&prev_avg.y, &z_new.y),
        },
        weight,
    )
}

pub(crate) fn check_divergence(z: &PrimalDualPoint, iteration: u64) -> Result<()> {
    let norm = z.norm();
    if !z.is_finite() || !norm.is_finite() || norm > DIVERGENCE_NORM {
        return Err(Error::Diverged { iteration, norm });
    }
    Ok(())
}

fn at(iteration: u64) -> impl FnOnce(Error) -> Error {
    move |e| Error::AtIteration {
        iteration,
        source: Box::new(e),
    }
}

/// Runs `config.horizon` SAPS iterations.
///
/// Without an explicit starting point, `z^1` is uniform on `[-1, 1]^{n+m}`
/// drawn from the run's random stream.
pub fn run_saps<O: MinimaxOracle>(
    problem: &SapsProblem<O>,
    config: &RunConfig,
    hooks: &mut [&mut dyn MetricHook],
) -> Result<RunRecord> {
    config.validate()?;
    let (n, m) = problem.oracle.dims();
    let mut rng = RandomSource::new(config.seed, config.stream_id);
    let mut z = match &config.initial {
        Some(z) => {
            z.check_dims(n, m)?;
            z.clone()
        }
        None => PrimalDualPoint {
            x: rng.uniform_vec(n, -1.0, 1.0),
            y: rng.uniform_vec(m, -1.0, 1.0),
        },
    };
    let start = Instant::now();
    let mut record = RunRecord::new(collect_metric_names(hooks), z.clone(), config.averaging);
    let mut avg = z.clone();
    let mut weight = 0.0;
    for k in 1..=config.horizon {
        let gamma = config.schedule.gamma_at(k)?;
        (avg, weight) = streaming_average(&avg, weight, &z, gamma);
        if config.records(k) {
            let view = IterateView {
                k,
                start: &record.initial,
                gamma,
                iterate: &z,
                average: &avg,
            };
            let metrics = evaluate_hooks(hooks, &view);
            record.push(RecordedIterate {
                k,
                gamma,
                iterate: z.clone(),
                average: avg.clone(),
                metrics,
                elapsed: start.elapsed(),
            });
        }
        let sample = problem.oracle.sample(&mut rng, &z).map_err(at(k))?;
        z = saps_step(problem, &z, gamma, &sample).map_err(at(k))?;
        check_divergence(&z, k)?;
    }
    record.final_average = avg;
    record.final_iterate = z;
    Ok(record)
}

/// Result of a deterministic fixed-point solve.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSolution {
    pub point: PrimalDualPoint,
    /// `||z - prox(z - gamma g(z))|| / gamma` at the returned point.
    pub residual: f64,
    pub iterations: usize,
}

/// Deterministic proximal gradient descent-ascent on the exact expectation,
/// used to compute reference saddle points of finite-sum problems.
///
/// Stops when the fixed-point residual drops below `tol`; returns the last
/// iterate (with its residual) after `max_iters` otherwise.
pub fn solve_deterministic<O: MinimaxOracle>(
    problem: &SapsProblem<O>,
    gamma: f64,
    tol: f64,
    max_iters: usize,
    start: &PrimalDualPoint,
) -> Result<FixedPointSolution> {
    let (n, m) = problem.oracle.dims();
    start.check_dims(n, m)?;
    let exact = |z: &PrimalDualPoint| -> Result<MinimaxSample> {
        problem
            .oracle
            .exact_expectation(z)
            .unwrap_or_else(|| Err(Error::arg("oracle has no closed-form expectation")))
    };
    let mut z = start.clone();
    let mut residual = f64::INFINITY;
    for it in 0..max_iters {
        let g = exact(&z)?;
        let next = saps_step(problem, &z, gamma, &g)?;
        check_divergence(&next, it as u64 + 1)?;
        residual = next.dist(&z) / gamma;
        z = next;
        if residual <= tol {
            return Ok(FixedPointSolution {
                point: z,
                residual,
                iterations: it + 1,
            });
        }
    }
    Ok(FixedPointSolution {
        point: z,
        residual,
        iterations: max_iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{BilinearOracle, ExpectedOracle, FrozenOracle};
    use crate::record::FnMetric;
    use crate::schedule::StepSchedule;

    fn l1() -> ProximableFunction {
        ProximableFunction::ScaledL1 { mu: 1.0 }
    }

    fn frozen_bilinear() -> SapsProblem<FrozenOracle<BilinearOracle>> {
        let oracle = FrozenOracle {
            inner: BilinearOracle::new(1).unwrap(),
            draw: vec![0.5],
        };
        SapsProblem::new(oracle, l1(), l1()).unwrap()
    }

    fn p(x: f64, y: f64) -> PrimalDualPoint {
        PrimalDualPoint::new(vec![x], vec![y]).unwrap()
    }

    #[test]
    fn identity_prox_step() {
        let o = BilinearOracle::new(2).unwrap();
        let prob = SapsProblem::new(o, ProximableFunction::Zero, ProximableFunction::Zero).unwrap();
        let z = PrimalDualPoint::new(vec![1.0, 2.0], vec![-1.0, 0.5]).unwrap();
        let s = MinimaxSample {
            value: 0.0,
            grad_x: vec![0.5, -1.0],
            grad_y: vec![2.0, 1.0],
        };
        let out = saps_step(&prob, &z, 0.1, &s).unwrap();
        assert_eq!(out.x, vec![1.0 - 0.05, 2.0 + 0.1]);
        assert_eq!(out.y, vec![-1.0 + 0.2, 0.5 + 0.1]);
    }

    #[test]
    fn frozen_bilinear_step() {
        let prob = frozen_bilinear();
        let z = p(1.0, 1.0);
        let mut rng = RandomSource::new(0, 0);
        let s = prob.oracle.sample(&mut rng, &z).unwrap();
        assert_eq!((s.grad_x[0], s.grad_y[0]), (0.25, 0.25));
        let out = saps_step(&prob, &z, 1.0, &s).unwrap();
        assert_eq!(out, p(0.0, 0.25));
    }

    #[test]
    fn two_step_run_on_frozen_instance() {
        let prob = frozen_bilinear();
        let mut config = RunConfig::new(2, 0);
        config.schedule = StepSchedule::ScaledConstant {
            theta: 1.0,
            dist_estimate: 2f64.sqrt(),
            m_estimate: 1.0,
            horizon: 2,
        };
        config.initial = Some(p(1.0, 1.0));
        let rec = run_saps(&prob, &config, &mut []).unwrap();
        assert_eq!(rec.rows.len(), 2);
        assert_eq!(rec.rows[1].iterate, p(0.0, 0.25));
        // both gammas equal 1, so the average is the midpoint of z^1 and z^2
        assert!((rec.final_average.x[0] - 0.5).abs() < 1e-15);
        assert!((rec.final_average.y[0] - 0.625).abs() < 1e-15);
        // z^3: grads at (0, 0.25) with xi = 0.5: grad_x = 0.5*0.125, grad_y = 0
        // x = soft(0 - 0.0625, 1) = 0, y = soft(0.25, 1) = 0
        assert_eq!(rec.final_iterate, p(0.0, 0.0));
    }

    #[test]
    fn single_iteration_average_is_start() {
        let prob = SapsProblem::new(BilinearOracle::new(3).unwrap(), l1(), l1()).unwrap();
        let config = RunConfig::new(1, 9);
        let rec = run_saps(&prob, &config, &mut []).unwrap();
        assert_eq!(rec.rows.len(), 1);
        assert_eq!(rec.final_average, rec.rows[0].iterate);
    }

    #[test]
    fn recorded_gammas_follow_schedule() {
        let prob = SapsProblem::new(BilinearOracle::new(3).unwrap(), l1(), l1()).unwrap();
        let mut config = RunConfig::new(50, 1);
        config.schedule = StepSchedule::Harmonic { theta: 0.5 };
        config.trace_thinning = 7;
        let mut gap = FnMetric::new("norm", |v: &IterateView<'_>| v.average.norm());
        let rec = run_saps(&prob, &config, &mut [&mut gap]).unwrap();
        let ks: Vec<u64> = rec.rows.iter().map(|r| r.k).collect();
        assert_eq!(ks, vec![7, 14, 21, 28, 35, 42, 49, 50]);
        for r in &rec.rows {
            assert_eq!(r.gamma, config.schedule.gamma_at(r.k).unwrap());
        }
        assert!(rec.is_monotone());
        assert_eq!(rec.metric_names, vec!["norm".to_string()]);
    }

    #[test]
    fn saddle_is_a_fixed_point() {
        let prob =
            SapsProblem::new(ExpectedOracle(BilinearOracle::new(3).unwrap()), l1(), l1()).unwrap();
        let mut config = RunConfig::new(100, 0);
        config.initial = Some(PrimalDualPoint::zeros(3, 3));
        let rec = run_saps(&prob, &config, &mut []).unwrap();
        for r in &rec.rows {
            assert_eq!(r.iterate, PrimalDualPoint::zeros(3, 3));
        }
        assert_eq!(rec.final_iterate, PrimalDualPoint::zeros(3, 3));
    }

    #[test]
    fn divergence_is_reported() {
        // unregularized bilinear dynamics with a huge constant step blow up
        let prob = SapsProblem::new(
            BilinearOracle::new(3).unwrap(),
            ProximableFunction::Zero,
            ProximableFunction::Zero,
        )
        .unwrap();
        let mut config = RunConfig::new(10_000, 0);
        config.schedule = StepSchedule::ScaledConstant {
            theta: 1.0,
            dist_estimate: 1e4,
            m_estimate: 1.0,
            horizon: 10_000,
        };
        let err = run_saps(&prob, &config, &mut []).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }), "{err:?}");
        assert!(err.is_numerical());
    }

    #[test]
    fn averaging_examples() {
        let (a, w) = streaming_average(&p(0.0, 0.0), 0.0, &p(1.0, 1.0), 0.5);
        assert_eq!((a.clone(), w), (p(1.0, 1.0), 0.5));
        let (a, _) = streaming_average(&a, w, &p(3.0, 3.0), 0.5);
        assert_eq!(a, p(2.0, 2.0));
        let (a, w) = streaming_average(&p(9.0, 9.0), 0.0, &p(0.0, 0.0), 1.0);
        let (a, w) = streaming_average(&a, w, &p(4.0, 4.0), 3.0);
        assert_eq!((a, w), (p(3.0, 3.0), 4.0));
    }

    #[test]
    fn averaging_matches_direct_sum() {
        let mut rng = RandomSource::new(4, 4);
        let mut avg = p(0.0, 0.0);
        let mut w = 0.0;
        let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
        for _ in 0..1000 {
            let z = p(rng.uniform_in(-5.0, 5.0), rng.uniform_in(-5.0, 5.0));
            let g = rng.uniform_in(0.01, 2.0);
            (avg, w) = streaming_average(&avg, w, &z, g);
            sx += g * z.x[0];
            sy += g * z.y[0];
            sw += g;
        }
        let (dx, dy) = (sx / sw, sy / sw);
        assert!((avg.x[0] - dx).abs() <= 1e-12 * dx.abs().max(1.0));
        assert!((avg.y[0] - dy).abs() <= 1e-12 * dy.abs().max(1.0));
    }

    #[test]
    fn deterministic_solver_finds_bilinear_saddle() {
        let prob =
            SapsProblem::new(ExpectedOracle(BilinearOracle::new(3).unwrap()), l1(), l1()).unwrap();
        let start = PrimalDualPoint::new(vec![0.9, -0.4, 0.2], vec![0.1, 0.7, -0.8]).unwrap();
        let sol = solve_deterministic(&prob, 0.1, 1e-12, 10_000, &start).unwrap();
        assert!(sol.residual <= 1e-12);
        assert!(sol.point.norm() < 1e-12);
    }
}
