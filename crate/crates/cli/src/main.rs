use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use saddle_sa::{check_data, diagnose, load_config, run_experiment, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "saddle-sa",
    version,
    about = "Stochastic saddle-point experiment driver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (N, trial) pair of an experiment and write CSV output.
    Run(ConfigArgs),
    /// Parse and validate a LIBSVM dataset.
    CheckData { path: PathBuf },
    /// Print problem-constant estimates and multiplier diagnostics.
    Diagnose(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory (falls back to the config file, then SADDLE_SA_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for trials; 0 uses every available processor.
    #[arg(long)]
    parallel: Option<usize>,
    /// Override a configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut overrides = self.overrides.clone();
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        if let Some(t) = self.trials {
            overrides.push(format!("trials={t}"));
        }
        if let Some(p) = self.parallel {
            overrides.push(format!("parallel={p}"));
        }
        if let Some(o) = &self.out {
            overrides.push(format!("output_dir={}", o.display()));
        }
        load_config(&self.config, &overrides)
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.load()?;
            let out = run_experiment(&cfg)?;
            for f in &out.failures {
                eprintln!("N={} trial={}: {}", f.horizon, f.trial, f.message);
            }
            println!(
                "wrote {} traces to {}",
                out.trace_files.len(),
                out.output_dir.display()
            );
            let lost = out.fully_diverged();
            if lost.is_empty() {
                Ok(())
            } else {
                Err(CliError::Numerical(format!(
                    "every trial diverged for N in {lost:?}"
                )))
            }
        }
        Command::CheckData { path } => check_data(&path, std::io::stdout().lock()),
        Command::Diagnose(args) => diagnose(&args.load()?, std::io::stdout().lock()),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("saddle-sa: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
