//! `ssarx`: spike-and-slab regression with AR errors from the command line.
//!
//! Subcommands:
//! - `simulate`: synthetic selection experiment, emits mean confusion tables
//! - `fit`: two-stage fit of a CSV dataset, emits a JSON report
//! - `backtest`: rolling-origin h-step forecasts, emits prediction and
//!   metric tables
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.

mod commands;
mod csvio;
mod errors;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Transform {
    Identity,
    LogNeg,
}

#[derive(Debug, Parser)]
#[command(name = "ssarx", version, about = "Spike-and-slab regression with AR errors")]
struct Cli {
    /// Worker threads for replicate-parallel work (default: SSARX_THREADS
    /// or 1).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the synthetic selection experiment and write mean confusion
    /// tables.
    Simulate(SimulateArgs),
    /// Fit the two-stage model to a CSV dataset and write a JSON report.
    Fit(FitArgs),
    /// Rolling-origin backtest over a CSV dataset.
    Backtest(BacktestArgs),
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Observations per replicate.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Covariate count.
    #[arg(long, default_value_t = 50)]
    pub p: usize,
    /// Error-lag count (0 disables the error-lag stage).
    #[arg(long, default_value_t = 10)]
    pub q: usize,
    /// Shock standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Replicate count.
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// AR(1) correlation across covariate columns.
    #[arg(long, default_value_t = 0.0)]
    pub x_corr: f64,
    /// Gibbs iterations per chain.
    #[arg(long, default_value_t = 5000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1000)]
    pub burn_in: usize,
    /// Output directory.
    #[arg(long, default_value = "ssarx-simulate")]
    pub out_dir: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct DataArgs {
    /// Input CSV (optional leading timestamp column, header row required).
    #[arg(long)]
    pub data: PathBuf,
    /// Response column name.
    #[arg(long)]
    pub target: String,
    /// Covariate lag count r.
    #[arg(long, default_value_t = 2)]
    pub lags: usize,
    /// Maximum error lag q.
    #[arg(long, default_value_t = 5)]
    pub error_lags: usize,
    /// Drop the contemporaneous (lag 0) covariates from the design.
    #[arg(long, default_value_t = false)]
    pub exclude_current: bool,
    /// Response transformation applied before fitting.
    #[arg(long, value_enum, default_value_t = Transform::Identity)]
    pub transform: Transform,
    #[arg(long, default_value_t = 5000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, clap::Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: DataArgs,
    /// Output JSON report path.
    #[arg(long, default_value = "ssarx-fit.json")]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub common: DataArgs,
    /// Forecast horizon h.
    #[arg(long, default_value_t = 5)]
    pub horizon: usize,
    /// Initial training window T0 (default 2N/3).
    #[arg(long)]
    pub initial_window: Option<usize>,
    /// Refit cadence in origins.
    #[arg(long, default_value_t = 1)]
    pub refit_every: usize,
    /// Output directory.
    #[arg(long, default_value = "ssarx-backtest")]
    pub out_dir: PathBuf,
}

fn thread_count(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("SSARX_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(1)
    .max(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = thread_count(cli.threads);
    let result = match &cli.command {
        Command::Simulate(args) => commands::cmd_simulate(args, threads),
        Command::Fit(args) => commands::cmd_fit(args),
        Command::Backtest(args) => commands::cmd_backtest(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
