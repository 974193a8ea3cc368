//! `jumpdiff` — command-line harness for unit-noise jump diffusions.
//!
//! Subcommands cover the library end to end: condition checking of model
//! files, trajectory simulation, prior sampling, divergence bounds between
//! models, single posterior chains, and the full contraction experiment
//! (nested datasets, one chain per sample size, median posterior distance
//! per size). All outputs are deterministic functions of the configuration
//! and seeds; reruns produce byte-identical files.
//!
//! Exit codes: 0 success, 1 a checked domain condition is violated, 2 bad
//! input (malformed files, invalid parameters), 3 numeric failure during
//! integration or estimation.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::LoadedConfig;
use jumpdiff::error::Error;

#[derive(Parser)]
#[command(
    name = "jumpdiff",
    version,
    about = "Simulate unit-noise jump diffusions, sample nonparametric priors, bound path \
             divergences, and measure posterior contraction from discrete observations"
)]
struct Cli {
    /// Base random seed; each command documents what it seeds
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// TOML configuration file (schema in config.example.toml)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory [default: experiment.output_dir from the config, then "runs"]
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for parallel stages [default: all cores]
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file against the regularity/confinement conditions and
    /// the unit-noise reducibility identity
    Check(commands::check::CheckArgs),
    /// Simulate one discretely observed trajectory and write it as CSV
    Simulate(commands::simulate::SimulateArgs),
    /// Draw models from the configured prior and write them as JSON files
    SamplePrior(commands::sample_prior::SamplePriorArgs),
    /// Upper-bound the per-unit-time path divergence between two model files
    Klbound(commands::klbound::KlboundArgs),
    /// Run one posterior chain on data simulated from the configured truth
    Infer(commands::infer::InferArgs),
    /// Full pipeline: nested datasets per seed, one chain per sample size,
    /// posterior-distance curve and run manifest
    Experiment(commands::experiment::ExperimentArgs),
}

/// Global flags shared by every subcommand.
pub struct Global {
    pub seed: Option<u64>,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Global {
    /// Resolve the output directory: flag, then config-supplied default,
    /// then "runs".
    pub fn out_dir(&self, config_default: Option<&str>) -> PathBuf {
        self.out
            .clone()
            .or_else(|| config_default.map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("runs"))
    }

    /// Load the TOML configuration; the command `name` appears in the error
    /// when the flag is missing.
    pub fn load_config(&self, name: &str) -> Result<LoadedConfig, CliError> {
        let path = self.config.as_ref().ok_or_else(|| {
            CliError::from(Error::InvalidInput(format!("'{name}' needs --config FILE")))
        })?;
        config::load(path).stage("load config")
    }
}

/// An error annotated with the pipeline stage that produced it, so multi-step
/// commands report where they halted. Partial artifacts from earlier stages
/// stay on disk.
pub struct CliError {
    stage: Option<String>,
    source: Error,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        self.source.exit_class() as u8
    }
}

impl From<Error> for CliError {
    fn from(source: Error) -> Self {
        CliError { stage: None, source }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.stage {
            Some(stage) => write!(f, "stage '{stage}' failed: {}", self.source),
            None => write!(f, "{}", self.source),
        }
    }
}

/// Attach a stage name to any library error.
pub trait StageExt<T> {
    fn stage(self, name: &str) -> Result<T, CliError>;
}

impl<T> StageExt<T> for Result<T, Error> {
    fn stage(self, name: &str) -> Result<T, CliError> {
        self.map_err(|source| CliError { stage: Some(name.to_string()), source })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    let global = Global { seed: cli.seed, config: cli.config, out: cli.out };
    let result = match cli.command {
        Command::Check(args) => commands::check::run(&args, &global),
        Command::Simulate(args) => commands::simulate::run(&args, &global),
        Command::SamplePrior(args) => commands::sample_prior::run(&args, &global),
        Command::Klbound(args) => commands::klbound::run(&args, &global),
        Command::Infer(args) => commands::infer::run(&args, &global),
        Command::Experiment(args) => commands::experiment::run(&args, &global),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
