//! Flat `key=value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::CliError;

pub const OUT_ENV: &str = "SADDLE_SA_OUT";
const DEFAULT_OUT: &str = "saddle-sa-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Bilinear,
    Tanh,
    NeymanPearson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Saps,
    Lsaal,
    Laam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    L1,
    L2,
    PositivePart,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MEstimate {
    Value(f64),
    /// Estimated by sampling the oracle before the runs.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    ConstantOverSqrtN,
    ScaledConstant {
        theta: f64,
        dist_estimate: f64,
        m_estimate: MEstimate,
    },
    Harmonic {
        theta: f64,
    },
    InvSqrtK {
        theta: f64,
    },
}

/// SAPS experiments (bilinear, tanh).
#[derive(Debug, Clone, PartialEq)]
pub struct SapsSettings {
    pub regularizer: Regularizer,
    pub mu: f64,
    pub schedule: ScheduleSpec,
    /// Sample size of the tanh finite-sum reference problem.
    pub pool_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic {
        m_classes: usize,
        points_per_class: usize,
        separation: f64,
    },
    File(PathBuf),
}

/// Neyman-Pearson experiments (LSAAL, LAAM).
#[derive(Debug, Clone, PartialEq)]
pub struct ConicSettings {
    pub data: DataSource,
    pub normalize: bool,
    pub max_per_class: Option<usize>,
    pub objective_label: Option<i64>,
    pub lambda: f64,
    pub r: Option<Vec<f64>>,
    pub sigma: Option<f64>,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Settings {
    Saps(SapsSettings),
    Conic(ConicSettings),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub algorithm: Algorithm,
    /// Problem dimension (bilinear, tanh) or feature dimension of synthetic data.
    pub n: usize,
    pub n_list: Vec<u64>,
    pub trials: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Approximate number of recorded rows per trace.
    pub trace_points: u64,
    pub tail_multiple: f64,
    /// Adds an `elapsed_ms` column to traces (makes them nondeterministic).
    pub timings: bool,
    /// Worker threads; 0 means all available processors.
    pub parallel: usize,
    pub settings: Settings,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Bilinear => "bilinear",
            Experiment::Tanh => "tanh",
            Experiment::NeymanPearson => "neyman_pearson",
        })
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Saps => "saps",
            Algorithm::Lsaal => "lsaal",
            Algorithm::Laam => "laam",
        })
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "bilinear" => Ok(Experiment::Bilinear),
            "tanh" => Ok(Experiment::Tanh),
            "neyman_pearson" => Ok(Experiment::NeymanPearson),
            _ => Err(CliError::config(format!(
                "unknown experiment '{s}' (expected bilinear, tanh or neyman_pearson)"
            ))),
        }
    }
}

impl FromStr for Algorithm {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "saps" => Ok(Algorithm::Saps),
            "lsaal" => Ok(Algorithm::Lsaal),
            "laam" => Ok(Algorithm::Laam),
            _ => Err(CliError::config(format!(
                "unknown algorithm '{s}' (expected saps, lsaal or laam)"
            ))),
        }
    }
}

/// Raw key/value pairs; later insertions override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    /// Parses `key=value` lines; `#` starts a comment, blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content.split_once('=').ok_or_else(|| {
                CliError::config(format!(
                    "line {}: expected key=value, found '{content}'",
                    i + 1
                ))
            })?;
            raw.set(k.trim(), v.trim())?;
        }
        Ok(raw)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if key.is_empty() {
            return Err(CliError::config("empty configuration key"));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), CliError> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("override '{pair}' is not key=value")))?;
        self.set(k.trim(), v.trim())
    }
}

struct Reader {
    entries: BTreeMap<String, String>,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::config(format!("invalid value '{v}' for key '{key}'"))),
        }
    }

    fn positive_f64(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.parse::<f64>(key)? {
            Some(v) if !(v.is_finite() && v > 0.0) => Err(CliError::config(format!(
                "'{key}' must be positive, got {v}"
            ))),
            other => Ok(other),
        }
    }

    fn positive_usize(&mut self, key: &str) -> Result<Option<usize>, CliError> {
        match self.parse::<usize>(key)? {
            Some(0) => Err(CliError::config(format!("'{key}' must be at least 1"))),
            other => Ok(other),
        }
    }

    fn bool(&mut self, key: &str) -> Result<Option<bool>, CliError> {
        match self.take(key).as_deref() {
            None => Ok(None),
            Some("true" | "1" | "yes" | "on") => Ok(Some(true)),
            Some("false" | "0" | "no" | "off") => Ok(Some(false)),
            Some(v) => Err(CliError::config(format!(
                "invalid boolean '{v}' for key '{key}'"
            ))),
        }
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| CliError::config(format!("invalid entry '{t}' in '{key}'")))
                })
                .collect::<Result<Vec<T>, _>>()
                .map(Some),
        }
    }

    /// Rejects keys that do not apply to the selected experiment.
    fn reject(&self, keys: &[&str], context: &str) -> Result<(), CliError> {
        match keys.iter().find(|k| self.entries.contains_key(**k)) {
            Some(k) => Err(CliError::config(format!(
                "key '{k}' does not apply to {context}"
            ))),
            None => Ok(()),
        }
    }
}

const SAPS_KEYS: &[&str] = &[
    "regularizer",
    "mu",
    "schedule",
    "theta",
    "dist_estimate",
    "m_estimate",
    "pool_size",
];
const CONIC_KEYS: &[&str] = &[
    "m_classes",
    "points_per_class",
    "separation",
    "dataset_path",
    "normalize",
    "max_per_class",
    "objective_label",
    "lambda",
    "r",
    "sigma",
    "inner_tol",
    "inner_max_iters",
];

fn saps_settings(r: &mut Reader, experiment: Experiment) -> Result<SapsSettings, CliError> {
    if experiment != Experiment::Tanh {
        r.reject(&["pool_size"], "the bilinear experiment")?;
    }
    let regularizer = match r.take("regularizer").as_deref() {
        None | Some("l1") => Regularizer::L1,
        Some("l2") => Regularizer::L2,
        Some("max" | "pos" | "positive_part") => Regularizer::PositivePart,
        Some(v) => {
            return Err(CliError::config(format!(
                "unknown regularizer '{v}' (expected l1, l2 or max)"
            )))
        }
    };
    let mu = r.parse::<f64>("mu")?.unwrap_or(1.0);
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(CliError::config(format!(
            "'mu' must be nonnegative, got {mu}"
        )));
    }
    let theta = r.positive_f64("theta")?;
    let schedule = match r.take("schedule").as_deref() {
        None | Some("const_sqrt_n") => {
            r.reject(&["dist_estimate", "m_estimate"], "schedule const_sqrt_n")?;
            if theta.is_some() {
                return Err(CliError::config(
                    "key 'theta' does not apply to schedule const_sqrt_n",
                ));
            }
            ScheduleSpec::ConstantOverSqrtN
        }
        Some("scaled") => {
            let dist_estimate = r
                .positive_f64("dist_estimate")?
                .ok_or_else(|| CliError::config("schedule 'scaled' requires 'dist_estimate'"))?;
            let m_estimate = match r.take("m_estimate").as_deref() {
                None | Some("auto") => MEstimate::Auto,
                Some(v) => match v.parse::<f64>() {
                    Ok(m) if m.is_finite() && m > 0.0 => MEstimate::Value(m),
                    _ => {
                        return Err(CliError::config(format!(
                            "invalid value '{v}' for key 'm_estimate'"
                        )))
                    }
                },
            };
            ScheduleSpec::ScaledConstant {
                theta: theta.unwrap_or(1.0),
                dist_estimate,
                m_estimate,
            }
        }
        Some(kind @ ("harmonic" | "inv_sqrt_k")) => {
            r.reject(
                &["dist_estimate", "m_estimate"],
                &format!("schedule {kind}"),
            )?;
            let theta = theta.unwrap_or(1.0);
            if kind == "harmonic" {
                ScheduleSpec::Harmonic { theta }
            } else {
                ScheduleSpec::InvSqrtK { theta }
            }
        }
        Some(v) => {
            return Err(CliError::config(format!(
                "unknown schedule '{v}' (expected const_sqrt_n, scaled, harmonic or inv_sqrt_k)"
            )))
        }
    };
    Ok(SapsSettings {
        regularizer,
        mu,
        schedule,
        pool_size: r.positive_usize("pool_size")?.unwrap_or(500),
    })
}

fn conic_settings(r: &mut Reader) -> Result<ConicSettings, CliError> {
    let data = match r.take("dataset_path") {
        Some(p) => {
            r.reject(
                &["m_classes", "points_per_class", "separation"],
                "a file dataset",
            )?;
            DataSource::File(PathBuf::from(p))
        }
        None => {
            let m_classes = r.parse::<usize>("m_classes")?.unwrap_or(3);
            if m_classes < 2 {
                return Err(CliError::config("'m_classes' must be at least 2"));
            }
            let separation = r.parse::<f64>("separation")?.unwrap_or(2.0);
            if !separation.is_finite() {
                return Err(CliError::config("'separation' must be finite"));
            }
            DataSource::Synthetic {
                m_classes,
                points_per_class: r.positive_usize("points_per_class")?.unwrap_or(100),
                separation,
            }
        }
    };
    let inner_tol = r.positive_f64("inner_tol")?.unwrap_or(1e-8);
    Ok(ConicSettings {
        data,
        normalize: r.bool("normalize")?.unwrap_or(true),
        max_per_class: r.positive_usize("max_per_class")?,
        objective_label: r.parse::<i64>("objective_label")?,
        lambda: r.positive_f64("lambda")?.unwrap_or(5.0),
        r: r.list::<f64>("r")?,
        sigma: r.positive_f64("sigma")?,
        inner_tol,
        inner_max_iters: r.positive_usize("inner_max_iters")?.unwrap_or(500),
    })
}

impl ExperimentConfig {
    /// Validates raw pairs and fills defaults (`mu=1`, `trials=20`,
    /// `schedule=const_sqrt_n`). Unknown keys and keys that do not apply to
    /// the selected experiment are errors.
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let mut r = Reader {
            entries: raw.entries.clone(),
        };
        let experiment: Experiment = r
            .take("experiment")
            .ok_or_else(|| CliError::config("missing required key 'experiment'"))?
            .parse()?;
        let algorithm: Algorithm = match r.take("algorithm") {
            Some(a) => a.parse()?,
            None if experiment == Experiment::NeymanPearson => Algorithm::Lsaal,
            None => Algorithm::Saps,
        };
        let compatible = matches!(
            (experiment, algorithm),
            (Experiment::Bilinear | Experiment::Tanh, Algorithm::Saps)
                | (
                    Experiment::NeymanPearson,
                    Algorithm::Lsaal | Algorithm::Laam
                )
        );
        if !compatible {
            return Err(CliError::config(format!(
                "algorithm {algorithm} cannot run experiment {experiment}"
            )));
        }
        let settings = if experiment == Experiment::NeymanPearson {
            r.reject(SAPS_KEYS, "the neyman_pearson experiment")?;
            Settings::Conic(conic_settings(&mut r)?)
        } else {
            r.reject(CONIC_KEYS, &format!("the {experiment} experiment"))?;
            Settings::Saps(saps_settings(&mut r, experiment)?)
        };
        let default_n = match experiment {
            Experiment::Bilinear => 3,
            Experiment::Tanh | Experiment::NeymanPearson => 10,
        };
        let n_list = r
            .list::<u64>("N_list")?
            .unwrap_or_else(|| vec![100, 1_000, 10_000]);
        if n_list.is_empty() || n_list.contains(&0) {
            return Err(CliError::config("'N_list' entries must be positive"));
        }
        let mut sorted = n_list.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != n_list.len() {
            return Err(CliError::config("'N_list' contains duplicates"));
        }
        let output_dir = r
            .take("output_dir")
            .map(PathBuf::from)
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        let cfg = ExperimentConfig {
            experiment,
            algorithm,
            n: r.positive_usize("n")?.unwrap_or(default_n),
            n_list: sorted,
            trials: r.positive_usize("trials")?.unwrap_or(20),
            seed: r.parse::<u64>("seed")?.unwrap_or(0),
            output_dir,
            trace_points: r.parse::<u64>("trace_points")?.unwrap_or(100).max(1),
            tail_multiple: r.positive_f64("tail_multiple")?.unwrap_or(5.0),
            timings: r.bool("timings")?.unwrap_or(false),
            parallel: r.parse::<usize>("parallel")?.unwrap_or(0),
            settings,
        };
        if let Some(k) = r.entries.keys().next() {
            return Err(CliError::config(format!("unknown key '{k}'")));
        }
        Ok(cfg)
    }

    pub fn saps(&self) -> Option<&SapsSettings> {
        match &self.settings {
            Settings::Saps(s) => Some(s),
            Settings::Conic(_) => None,
        }
    }

    pub fn conic(&self) -> Option<&ConicSettings> {
        match &self.settings {
            Settings::Conic(c) => Some(c),
            Settings::Saps(_) => None,
        }
    }

    /// Record every `t`-th iteration so that about `trace_points` rows are kept.
    pub fn thinning(&self, horizon: u64) -> u64 {
        horizon.div_ceil(self.trace_points).max(1)
    }
}

/// Parses and validates configuration text.
pub fn load_config_str(text: &str) -> Result<ExperimentConfig, CliError> {
    ExperimentConfig::from_raw(&RawConfig::parse(text)?)
}

/// Reads a configuration file and applies `key=value` overrides on top.
pub fn load_config(
    path: &std::path::Path,
    overrides: &[String],
) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let mut raw = RawConfig::parse(&text)?;
    for o in overrides {
        raw.set_pair(o)?;
    }
    ExperimentConfig::from_raw(&raw)
}
