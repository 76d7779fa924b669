use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;

use config::DesignOverrides;

/// Sample size, analysis and simulation for competing-risks trials compared
/// on the restricted mean time lost.
#[derive(Debug, Parser)]
#[command(name = "rmtld", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Required sample size for one or more design methods.
    Samplesize(SamplesizeArgs),
    /// RMTL difference, log-rank and Gray tests on a two-group dataset.
    Analyze(AnalyzeArgs),
    /// Monte-Carlo power of every test at the size each method requires.
    Simulate(SimulateArgs),
    /// Required N and power across restriction times or accrual periods.
    Sweep(SweepArgs),
    /// Uniform loss window giving a target overall censoring proportion.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// Base seed; a random seed is drawn and logged when neither flag nor config sets one.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory for JSON/CSV results and the run manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct SamplesizeArgs {
    /// Scenario JSON, or the manifest of an earlier run.
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub design: DesignOverrides,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub accrual: Option<f64>,
    #[arg(long)]
    pub followup: Option<f64>,
    #[arg(long)]
    pub censoring_target: Option<f64>,
    /// Comma-separated methods, or `all`.
    #[arg(long)]
    pub method: Option<String>,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, clap::Args)]
pub struct AnalyzeArgs {
    /// Dataset CSV with header `time,status,group`.
    pub data: Option<PathBuf>,
    /// Manifest of an earlier analysis to repeat.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Restriction time; defaults to the smaller of the groups' largest times.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Label of the experimental group (default: first label in the file).
    #[arg(long)]
    pub experimental: Option<String>,
    /// Standard error: `martingale` or `bootstrap`.
    #[arg(long)]
    pub method: Option<String>,
    /// Bootstrap resamples.
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Scenario JSON (object or array), or a manifest; may be repeated.
    #[arg(long, required = true)]
    pub config: Vec<PathBuf>,
    #[command(flatten)]
    pub design: DesignOverrides,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub accrual: Option<f64>,
    #[arg(long)]
    pub followup: Option<f64>,
    /// Comma-separated censoring targets; `none` keeps the config's loss model.
    #[arg(long, value_delimiter = ',')]
    pub censoring_target: Vec<String>,
    /// Comma-separated sizing methods, or `all`.
    #[arg(long)]
    pub method: Option<String>,
    /// Skip sizing and simulate at `n_e,n_c`.
    #[arg(long, value_delimiter = ',', num_args = 1..=2)]
    pub arm_sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Vary the restriction time.
    Tau,
    /// Vary accrual and follow-up periods.
    Accrual,
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub kind: Option<SweepKind>,
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub design: DesignOverrides,
    /// Restriction-time grid (τ sweep).
    #[arg(long, value_delimiter = ',')]
    pub tau: Vec<f64>,
    /// Accrual grid (accrual sweep).
    #[arg(long, value_delimiter = ',')]
    pub accrual: Vec<f64>,
    /// Follow-up grid (accrual sweep; default: the config's follow-up).
    #[arg(long, value_delimiter = ',')]
    pub followup: Vec<f64>,
    #[arg(long)]
    pub censoring_target: Option<f64>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, clap::Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub design: DesignOverrides,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub accrual: Option<f64>,
    #[arg(long)]
    pub followup: Option<f64>,
    #[arg(long)]
    pub censoring_target: Option<f64>,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rmtld::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Input(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.kind() {
                rmtld::ErrorKind::Input => 2,
                rmtld::ErrorKind::Infeasible => 3,
                rmtld::ErrorKind::Numeric => 4,
            },
            CliError::Io { .. } | CliError::Input(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Samplesize(a) => commands::samplesize(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Calibrate(a) => commands::calibrate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
