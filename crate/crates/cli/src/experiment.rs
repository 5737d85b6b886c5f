//! Experiment registry and the multi-trial runner.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use saddle_core::data::{synth_gaussian_classes, ClassGroupedDataset};
use saddle_core::linalg;
use saddle_core::lsaal::{run_laam, run_lsaal, LsaalProblem};
use saddle_core::metrics::{
    dist_to_saddle, minimax_gap, rate_slope_fit, summarize, tail_tally, KktTracker,
};
use saddle_core::oracles::{
    BilinearOracle, ConicOracle, MinimaxOracle, NeymanPearsonOracle, TanhFiniteSum, TanhOracle,
};
use saddle_core::rng::stream_key;
use saddle_core::saps::{run_saps, solve_deterministic, SapsProblem};
use saddle_core::{
    Error as CoreError, FnMetric, MetricHook, PrimalDualPoint, ProximableFunction, RandomSource,
    RunConfig, RunRecord, StepSchedule,
};

use crate::config::{
    Algorithm, ConicSettings, DataSource, ExperimentConfig, MEstimate, Regularizer, SapsSettings,
    ScheduleSpec,
};
use crate::error::CliError;

/// Stream tags for setup randomness; trial streams are keyed by `(seed, N, trial)`.
const DATA_STREAM: u64 = u64::MAX;
const REFERENCE_STREAM: u64 = u64::MAX - 1;
const ESTIMATE_STREAM: u64 = u64::MAX - 2;

const REFERENCE_GAMMA: f64 = 0.1;
const REFERENCE_TOL: f64 = 1e-10;
const REFERENCE_MAX_ITERS: usize = 200_000;

/// Everything shared by the trials of one experiment.
#[allow(clippy::large_enum_variant)]
pub enum Prepared {
    Bilinear {
        problem: SapsProblem<BilinearOracle>,
        z_star: PrimalDualPoint,
        schedule: ScheduleSpec,
        m_estimate: Option<f64>,
    },
    Tanh {
        problem: SapsProblem<TanhOracle>,
        reference: SapsProblem<TanhFiniteSum>,
        z_star: PrimalDualPoint,
        schedule: ScheduleSpec,
        m_estimate: Option<f64>,
    },
    Conic {
        problem: LsaalProblem<NeymanPearsonOracle>,
        algorithm: Algorithm,
    },
}

fn regularizer(kind: Regularizer, mu: f64) -> ProximableFunction {
    match kind {
        Regularizer::L1 => ProximableFunction::ScaledL1 { mu },
        Regularizer::L2 => ProximableFunction::ScaledL2 { mu },
        Regularizer::PositivePart => ProximableFunction::PositivePartSum { mu },
    }
}

fn resolve_m_estimate<O: MinimaxOracle>(
    oracle: &O,
    spec: &ScheduleSpec,
    seed: u64,
) -> Result<Option<f64>, CliError> {
    match spec {
        ScheduleSpec::ScaledConstant {
            m_estimate: MEstimate::Value(m),
            ..
        } => Ok(Some(*m)),
        ScheduleSpec::ScaledConstant {
            m_estimate: MEstimate::Auto,
            ..
        } => {
            let mut rng = RandomSource::new(seed, stream_key(&[seed, ESTIMATE_STREAM]));
            let (n, m) = oracle.dims();
            let points: Vec<PrimalDualPoint> = (0..100)
                .map(|_| PrimalDualPoint {
                    x: rng.uniform_vec(n, -1.0, 1.0),
                    y: rng.uniform_vec(m, -1.0, 1.0),
                })
                .collect();
            let m = saddle_core::metrics::estimate_oracle_bound(oracle, &points, 100, &mut rng)?;
            Ok(Some(m.max(f64::MIN_POSITIVE)))
        }
        _ => Ok(None),
    }
}

fn schedule_for(spec: &ScheduleSpec, m_estimate: Option<f64>, horizon: u64) -> StepSchedule {
    match *spec {
        ScheduleSpec::ConstantOverSqrtN => StepSchedule::ConstantOverSqrtN { horizon },
        ScheduleSpec::ScaledConstant {
            theta,
            dist_estimate,
            ..
        } => StepSchedule::ScaledConstant {
            theta,
            dist_estimate,
            m_estimate: m_estimate.unwrap_or(1.0),
            horizon,
        },
        ScheduleSpec::Harmonic { theta } => StepSchedule::Harmonic { theta },
        ScheduleSpec::InvSqrtK { theta } => StepSchedule::InvSqrtK { theta },
    }
}

/// Loads or synthesizes the class-grouped dataset for a Neyman-Pearson run.
pub fn load_dataset(
    settings: &ConicSettings,
    n: usize,
    seed: u64,
) -> Result<ClassGroupedDataset, CliError> {
    let mut rng = RandomSource::new(seed, stream_key(&[seed, DATA_STREAM]));
    let mut ds = match &settings.data {
        DataSource::Synthetic {
            m_classes,
            points_per_class,
            separation,
        } => synth_gaussian_classes(&mut rng, *m_classes, n, *points_per_class, *separation)?,
        DataSource::File(path) => read_dataset(path)?,
    };
    if let Some(cap) = settings.max_per_class {
        ds = ds.subsample(cap, &mut rng)?;
    }
    if let Some(label) = settings.objective_label {
        ds = ds.with_objective_class(label)?;
    }
    if settings.normalize {
        ds = ds.normalized();
    }
    Ok(ds)
}

/// Parses a LIBSVM file; a missing file is an I/O error.
pub fn read_dataset(path: &Path) -> Result<ClassGroupedDataset, CliError> {
    let file = fs::File::open(path)?;
    Ok(ClassGroupedDataset::parse(std::io::BufReader::new(file))?)
}

/// Builds a conic problem with the configured penalty and inner-solver settings.
pub fn conic_problem(
    cfg: &ExperimentConfig,
    settings: &ConicSettings,
) -> Result<LsaalProblem<NeymanPearsonOracle>, CliError> {
    let ds = load_dataset(settings, cfg.n, cfg.seed)?;
    let oracle = NeymanPearsonOracle::new(&ds, settings.lambda, settings.r.clone())?;
    let mut problem = LsaalProblem::new(oracle)?;
    problem.sigma = settings.sigma;
    problem.inner_tol = settings.inner_tol;
    problem.inner_max_iters = settings.inner_max_iters;
    Ok(problem)
}

fn prepare_saps(cfg: &ExperimentConfig, s: &SapsSettings) -> Result<Prepared, CliError> {
    let reg = regularizer(s.regularizer, s.mu);
    let n = cfg.n;
    match cfg.experiment {
        crate::config::Experiment::Bilinear => {
            let z_star = PrimalDualPoint::zeros(n, n);
            let problem = SapsProblem::new(BilinearOracle::new(n)?, reg.clone(), reg)?
                .with_saddle(z_star.clone())?;
            let m_estimate = resolve_m_estimate(&problem.oracle, &s.schedule, cfg.seed)?;
            Ok(Prepared::Bilinear {
                problem,
                z_star,
                schedule: s.schedule.clone(),
                m_estimate,
            })
        }
        _ => {
            let mut rng = RandomSource::new(cfg.seed, stream_key(&[cfg.seed, REFERENCE_STREAM]));
            let oracle =
                TanhOracle::new(rng.uniform_vec(n, -1.0, 1.0), rng.uniform_vec(n, -1.0, 1.0))?;
            let pool = oracle.pool(&mut rng, s.pool_size);
            let reference = SapsProblem::new(
                TanhFiniteSum::new(oracle.clone(), pool)?,
                reg.clone(),
                reg.clone(),
            )?;
            let start = PrimalDualPoint {
                x: rng.uniform_vec(n, -1.0, 1.0),
                y: rng.uniform_vec(n, -1.0, 1.0),
            };
            let sol = solve_deterministic(
                &reference,
                REFERENCE_GAMMA,
                REFERENCE_TOL,
                REFERENCE_MAX_ITERS,
                &start,
            )?;
            if sol.residual > 1e-8 {
                return Err(CliError::Numerical(format!(
                    "tanh reference solve stalled with residual {:e}",
                    sol.residual
                )));
            }
            let reference = reference.with_saddle(sol.point.clone())?;
            let problem = SapsProblem::new(oracle, reg.clone(), reg)?;
            let m_estimate = resolve_m_estimate(&problem.oracle, &s.schedule, cfg.seed)?;
            Ok(Prepared::Tanh {
                problem,
                reference,
                z_star: sol.point,
                schedule: s.schedule.clone(),
                m_estimate,
            })
        }
    }
}

/// Builds the problem instance and any reference solution.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, CliError> {
    match (cfg.saps(), cfg.conic()) {
        (Some(s), _) => prepare_saps(cfg, s),
        (None, Some(c)) => Ok(Prepared::Conic {
            problem: conic_problem(cfg, c)?,
            algorithm: cfg.algorithm,
        }),
        (None, None) => unreachable!("settings always match one family"),
    }
}

impl Prepared {
    /// Metric columns of every trace, in order.
    pub fn metric_names(&self) -> Vec<String> {
        let names: &[&str] = match self {
            Prepared::Bilinear { .. } => &["minimax_gap", "dist_to_saddle"],
            Prepared::Tanh { .. } => &["minimax_gap", "dist_to_saddle", "rel_error"],
            Prepared::Conic { .. } => &[
                "rerror",
                "raerror",
                "proj_kkt",
                "constraint_violation",
                "grad_norm",
                "multiplier_norm",
            ],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    /// Runs one trial.
    pub fn run_trial(&self, base: RunConfig) -> Result<RunRecord, CoreError> {
        match self {
            Prepared::Bilinear {
                problem,
                z_star,
                schedule,
                m_estimate,
            } => {
                let mut cfg = base;
                cfg.schedule = schedule_for(schedule, *m_estimate, cfg.horizon);
                let mut gap = FnMetric::new("minimax_gap", |v: &saddle_core::IterateView<'_>| {
                    minimax_gap(problem, v.average, z_star).map_or(f64::NAN, |g| g.value)
                });
                let mut dist =
                    FnMetric::new("dist_to_saddle", |v: &saddle_core::IterateView<'_>| {
                        dist_to_saddle(v.average, z_star)
                    });
                run_saps(problem, &cfg, &mut [&mut gap, &mut dist])
            }
            Prepared::Tanh {
                problem,
                reference,
                z_star,
                schedule,
                m_estimate,
            } => {
                let mut cfg = base;
                cfg.schedule = schedule_for(schedule, *m_estimate, cfg.horizon);
                let mut gap = FnMetric::new("minimax_gap", |v: &saddle_core::IterateView<'_>| {
                    minimax_gap(reference, v.average, z_star).map_or(f64::NAN, |g| g.value)
                });
                let mut dist =
                    FnMetric::new("dist_to_saddle", |v: &saddle_core::IterateView<'_>| {
                        dist_to_saddle(v.average, z_star)
                    });
                let mut rel = FnMetric::new("rel_error", |v: &saddle_core::IterateView<'_>| {
                    v.average.dist(z_star) / v.start.dist(z_star)
                });
                run_saps(problem, &cfg, &mut [&mut gap, &mut dist, &mut rel])
            }
            Prepared::Conic { problem, algorithm } => {
                let oracle = &problem.oracle;
                let m = oracle.cone().dim();
                let z0 = PrimalDualPoint {
                    x: problem.default_start()?,
                    y: vec![0.0; m],
                };
                let mut kkt = KktTracker::new(oracle, &z0)?;
                let mut multiplier =
                    FnMetric::new("multiplier_norm", |v: &saddle_core::IterateView<'_>| {
                        linalg::norm(&v.iterate.y)
                    });
                let hooks: &mut [&mut dyn MetricHook] = &mut [&mut kkt, &mut multiplier];
                match algorithm {
                    Algorithm::Laam => run_laam(problem, &base, hooks),
                    _ => run_lsaal(problem, &base, hooks),
                }
            }
        }
    }
}

/// One trial that stopped with a numerical failure.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub horizon: u64,
    pub trial: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub horizon: u64,
    pub metric: String,
    pub mean: f64,
    pub median: f64,
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
    /// Share of trials at or above `tail_multiple` times the median.
    pub tail_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub metric: String,
    /// `mean` or `median`: the per-N statistic being fitted.
    pub statistic: String,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// What a finished experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub output_dir: PathBuf,
    pub trace_files: Vec<PathBuf>,
    pub aggregates: Vec<AggregateRow>,
    pub fits: Vec<FitRow>,
    pub failures: Vec<Failure>,
    /// Per horizon: `(N, completed, diverged)`.
    pub run_counts: Vec<(u64, usize, usize)>,
}

impl ExperimentOutput {
    /// Horizons at which every trial failed.
    pub fn fully_diverged(&self) -> Vec<u64> {
        self.run_counts
            .iter()
            .filter(|(_, ok, _)| *ok == 0)
            .map(|(n, _, _)| *n)
            .collect()
    }

    pub fn fit(&self, metric: &str, statistic: &str) -> Option<&FitRow> {
        self.fits
            .iter()
            .find(|f| f.metric == metric && f.statistic == statistic)
    }

    pub fn aggregate(&self, horizon: u64, metric: &str) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|a| a.horizon == horizon && a.metric == metric)
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn trace_path(dir: &Path, horizon: u64, trial: usize) -> PathBuf {
    dir.join("traces")
        .join(format!("N{horizon}"))
        .join(format!("trial{trial:04}.csv"))
}

fn write_trace(path: &Path, record: &RunRecord, timings: bool) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    let mut header = vec!["k".to_string(), "gamma".to_string()];
    header.extend(record.metric_names.iter().cloned());
    if timings {
        header.push("elapsed_ms".into());
    }
    w.write_record(&header)?;
    for row in &record.rows {
        let mut fields = vec![row.k.to_string(), fmt_f64(row.gamma)];
        fields.extend(row.metrics.iter().map(|v| fmt_f64(*v)));
        if timings {
            fields.push(fmt_f64(row.elapsed.as_secs_f64() * 1e3));
        }
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

struct TrialResult {
    horizon: u64,
    trial: usize,
    outcome: Result<(Vec<f64>, PathBuf), CoreError>,
}

/// Share of values at or above `threshold`; a zero threshold counts only
/// strictly positive values so that all-zero samples report no tail.
fn tail_fraction(values: &[f64], threshold: f64) -> Result<f64, CliError> {
    if threshold > 0.0 {
        Ok(tail_tally(values, threshold)?)
    } else {
        let hits = values.iter().filter(|v| **v > threshold).count();
        Ok(hits as f64 / values.len() as f64)
    }
}

fn aggregate(
    cfg: &ExperimentConfig,
    names: &[String],
    results: &[TrialResult],
) -> Result<Vec<AggregateRow>, CliError> {
    let mut rows = Vec::new();
    for &horizon in &cfg.n_list {
        let finals: Vec<&Vec<f64>> = results
            .iter()
            .filter(|r| r.horizon == horizon)
            .filter_map(|r| r.outcome.as_ref().ok().map(|(m, _)| m))
            .collect();
        if finals.is_empty() {
            continue;
        }
        for (j, metric) in names.iter().enumerate() {
            let values: Vec<f64> = finals.iter().map(|m| m[j]).collect();
            let s = summarize(&values)?;
            rows.push(AggregateRow {
                horizon,
                metric: metric.clone(),
                mean: s.mean,
                median: s.median,
                stderr: s.stderr,
                min: s.min,
                max: s.max,
                tail_fraction: tail_fraction(&values, cfg.tail_multiple * s.median)?,
            });
        }
    }
    Ok(rows)
}

fn fits(names: &[String], aggregates: &[AggregateRow]) -> Vec<FitRow> {
    let mut out = Vec::new();
    for metric in names {
        for statistic in ["mean", "median"] {
            let points: Vec<(f64, f64)> = aggregates
                .iter()
                .filter(|a| &a.metric == metric)
                .map(|a| {
                    let v = if statistic == "mean" {
                        a.mean
                    } else {
                        a.median
                    };
                    (a.horizon as f64, v)
                })
                .filter(|(_, v)| v.is_finite() && *v > 0.0)
                .collect();
            if let Ok(fit) = rate_slope_fit(&points) {
                out.push(FitRow {
                    metric: metric.clone(),
                    statistic: statistic.to_string(),
                    slope: fit.slope,
                    intercept: fit.intercept,
                    r2: fit.r2,
                    points: points.len(),
                });
            }
        }
    }
    out
}

fn write_outputs(dir: &Path, out: &ExperimentOutput) -> Result<(), CliError> {
    let mut w = writer(&dir.join("aggregate.csv"))?;
    w.write_record([
        "N",
        "metric",
        "mean",
        "median",
        "stderr",
        "min",
        "max",
        "tail_fraction",
    ])?;
    for a in &out.aggregates {
        w.write_record([
            a.horizon.to_string(),
            a.metric.clone(),
            fmt_f64(a.mean),
            fmt_f64(a.median),
            fmt_f64(a.stderr),
            fmt_f64(a.min),
            fmt_f64(a.max),
            fmt_f64(a.tail_fraction),
        ])?;
    }
    w.flush()?;

    let mut w = writer(&dir.join("summary.csv"))?;
    w.write_record(["section", "metric", "statistic", "N", "value"])?;
    for f in &out.fits {
        for (name, v) in [
            ("slope", fmt_f64(f.slope)),
            ("intercept", fmt_f64(f.intercept)),
            ("r2", fmt_f64(f.r2)),
            ("points", f.points.to_string()),
        ] {
            w.write_record(["fit", &f.metric, &format!("{}_{name}", f.statistic), "", &v])?;
        }
    }
    for (n, ok, bad) in &out.run_counts {
        let n = n.to_string();
        w.write_record(["runs", "", "completed", &n, &ok.to_string()])?;
        w.write_record(["runs", "", "diverged", &n, &bad.to_string()])?;
    }
    w.flush()?;

    let mut w = writer(&dir.join("failures.csv"))?;
    w.write_record(["N", "trial", "error"])?;
    for f in &out.failures {
        w.write_record([
            f.horizon.to_string(),
            f.trial.to_string(),
            f.message.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every `(N, trial)` pair and writes traces, `aggregate.csv`,
/// `summary.csv` and `failures.csv` under the output directory.
///
/// Numerical failures of single trials are recorded, not raised; the caller
/// decides the exit status from [`ExperimentOutput::fully_diverged`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, CliError> {
    let prepared = prepare(cfg)?;
    let names = prepared.metric_names();
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir)?;

    let jobs: Vec<(u64, usize)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .collect();
    let run_one = |&(horizon, trial): &(u64, usize)| -> Result<TrialResult, CliError> {
        let mut run = RunConfig::new(horizon, cfg.seed);
        run.stream_id = stream_key(&[cfg.seed, horizon, trial as u64]);
        run.trace_thinning = cfg.thinning(horizon);
        let outcome = match prepared.run_trial(run) {
            Ok(record) => {
                let path = trace_path(&dir, horizon, trial);
                write_trace(&path, &record, cfg.timings)?;
                let last = record
                    .rows
                    .last()
                    .map(|r| r.metrics.clone())
                    .unwrap_or_default();
                Ok((last, path))
            }
            Err(e) if e.is_numerical() => Err(e),
            Err(e) => return Err(e.into()),
        };
        Ok(TrialResult {
            horizon,
            trial,
            outcome,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallel)
        .build()
        .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<TrialResult> =
        pool.install(|| jobs.par_iter().map(run_one).collect::<Result<_, _>>())?;

    let aggregates = aggregate(cfg, &names, &results)?;
    let fits = fits(&names, &aggregates);
    let failures = results
        .iter()
        .filter_map(|r| {
            r.outcome.as_ref().err().map(|e| Failure {
                horizon: r.horizon,
                trial: r.trial,
                message: e.to_string(),
            })
        })
        .collect();
    let run_counts = cfg
        .n_list
        .iter()
        .map(|&n| {
            let of_n = results.iter().filter(|r| r.horizon == n);
            let ok = of_n.clone().filter(|r| r.outcome.is_ok()).count();
            (n, ok, of_n.count() - ok)
        })
        .collect();
    let trace_files = results
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|(_, p)| p.clone()))
        .collect();
    let out = ExperimentOutput {
        output_dir: dir.clone(),
        trace_files,
        aggregates,
        fits,
        failures,
        run_counts,
    };
    write_outputs(&dir, &out)?;
    Ok(out)
}
