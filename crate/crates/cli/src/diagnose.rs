use std::io::Write;

use saddle_core::lsaal::{
    estimate_constants, multiplier_bound_diagnostics, multiplier_step_bound, EstimationBudget,
};
use saddle_core::metrics::estimate_oracle_bound;
use saddle_core::oracles::MinimaxOracle;
use saddle_core::rng::stream_key;
use saddle_core::{PrimalDualPoint, ProblemConstants, RandomSource};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::experiment::{conic_problem, prepare, Prepared};

const DIAGNOSE_STREAM: u64 = u64::MAX - 3;

fn constant_rows(source: &str, c: &ProblemConstants) -> Vec<(String, String, String, f64)> {
    [
        ("m_star", c.m_star),
        ("kappa0", c.kappa0),
        ("R", c.r),
        ("nu_g", c.nu_g),
        ("kappa_f", c.kappa_f),
        ("kappa_g", c.kappa_g),
        ("nu_f", c.nu_f),
        ("slater_margin", c.slater_margin),
        ("beta0", c.beta0()),
    ]
    .into_iter()
    .map(|(q, v)| (source.to_string(), q.to_string(), String::new(), v))
    .collect()
}

fn saps_bound<O: MinimaxOracle>(oracle: &O, rng: &mut RandomSource) -> Result<f64, CliError> {
    let (n, m) = oracle.dims();
    let points: Vec<PrimalDualPoint> = (0..200)
        .map(|_| PrimalDualPoint {
            x: rng.uniform_vec(n, -1.0, 1.0),
            y: rng.uniform_vec(m, -1.0, 1.0),
        })
        .collect();
    Ok(estimate_oracle_bound(oracle, &points, 200, rng)?)
}

/// Writes problem-constant estimates and multiplier diagnostics as CSV
/// (`source,quantity,N,value`).
pub fn diagnose<W: Write>(cfg: &ExperimentConfig, out: W) -> Result<(), CliError> {
    let mut rng = RandomSource::new(cfg.seed, stream_key(&[cfg.seed, DIAGNOSE_STREAM]));
    let mut rows = Vec::new();
    if let Some(settings) = cfg.conic() {
        let problem = conic_problem(cfg, settings)?;
        let oracle = &problem.oracle;
        let analytic = oracle.envelope_constants()?;
        let estimated = estimate_constants(
            oracle,
            &oracle.slater_point(),
            EstimationBudget::default(),
            &mut rng,
        )?;
        for (source, c) in [("analytic", &analytic), ("estimated", &estimated)] {
            rows.extend(constant_rows(source, c));
            for &n in &cfg.n_list {
                let sigma = problem.sigma_for(n)?;
                let s = (n as f64).sqrt().ceil() as u64;
                let d = multiplier_bound_diagnostics(c, sigma, s)?;
                for (q, v) in [
                    ("sigma", sigma),
                    ("s", s as f64),
                    ("kappa1", d.kappa1),
                    ("kappa2", d.kappa2),
                    ("kappa3", d.kappa3),
                    ("delta1", d.delta1),
                    ("theta_sigma_s", d.theta_sigma_s),
                    ("multiplier_step_bound", multiplier_step_bound(c, sigma)),
                ] {
                    rows.push((source.to_string(), q.to_string(), n.to_string(), v));
                }
            }
        }
    } else {
        let m = match prepare(cfg)? {
            Prepared::Bilinear { problem, .. } => saps_bound(&problem.oracle, &mut rng)?,
            Prepared::Tanh { problem, .. } => saps_bound(&problem.oracle, &mut rng)?,
            Prepared::Conic { .. } => unreachable!("conic settings handled above"),
        };
        rows.push(("estimated".into(), "m_star".into(), String::new(), m));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["source", "quantity", "N", "value"])?;
    for (source, q, n, v) in rows {
        w.write_record([source, q, n, format!("{v}")])?;
    }
    w.flush()?;
    Ok(())
}

/// One-paragraph description of a LIBSVM file: classes, sizes and dimension.
pub fn check_data<W: Write>(path: &std::path::Path, mut out: W) -> Result<(), CliError> {
    let ds = crate::experiment::read_dataset(path)?;
    writeln!(
        out,
        "classes={} points={} feature_dim={} normalized={}",
        ds.num_classes(),
        ds.num_points(),
        ds.feature_dim(),
        ds.is_normalized()
    )?;
    for class in ds.classes() {
        writeln!(out, "label={} points={}", class.label, class.points.len())?;
    }
    Ok(())
}
