//! Batch driver for the stochastic saddle-point experiments: configuration,
//! multi-trial execution and CSV reporting.

pub mod config;
pub mod diagnose;
mod error;
pub mod experiment;

pub use config::{load_config, load_config_str, ExperimentConfig, RawConfig};
pub use diagnose::{check_data, diagnose};
pub use error::CliError;
pub use experiment::{run_experiment, ExperimentOutput};
