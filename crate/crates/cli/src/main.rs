//! fairlin: train and audit binary linear classifiers under group error-rate
//! fairness constraints.
//!
//! Subcommands: `synth` (benchmark data), `train` (unconstrained,
//! covariance-constrained, reweighting baseline, or threshold post-processing,
//! over repeated train/test splits), `sweep` (fairness/accuracy trade-off
//! grid), `eval` (metrics for a predictions file). Every command with a
//! `--seed` is bit-deterministic in its outputs.
//!
//! Exit codes: 0 success, 2 usage/config/data error, 3 numeric failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fairlin_core::error::Error;

mod config;
mod run;

#[derive(Parser)]
#[command(
    name = "fairlin",
    version,
    about = "Train and audit binary linear classifiers under group error-rate fairness constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one of the three synthetic benchmark settings as CSV.
    Synth {
        /// Setting index: 1, 2 or 3.
        #[arg(long)]
        setting: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train over repeated splits; writes `<out>.model.json` and `<out>.metrics.json`.
    Train(TrainArgs),
    /// Fairness/accuracy trade-off over a multiplier grid; writes a CSV table.
    Sweep(SweepArgs),
    /// Group error report for a predictions CSV against a dataset.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// CSV with a `pred` column over {-1, 1}, row-aligned with the data.
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TrainMode {
    Unconstrained,
    Constrained,
    Baseline,
    Postprocess,
}

#[derive(Parser)]
pub struct SweepArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
    /// Comma-separated kinds to constrain (omr, fpr, fnr); default fpr.
    #[arg(long)]
    pub kinds: Option<String>,
    /// Comma-separated multipliers in `[0,1]`, e.g. "1.0,0.5,0.1,0.0".
    #[arg(long)]
    pub grid: String,
    #[arg(long, default_value_t = 5)]
    pub splits: usize,
    #[arg(long, default_value_t = 0.5)]
    pub train_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Parser)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long, value_enum)]
    pub mode: TrainMode,
    /// Comma-separated kinds (omr, fpr, fnr); default fpr.
    #[arg(long)]
    pub kinds: Option<String>,
    /// Covariance multiplier m in `[0,1]` (constrained mode).
    #[arg(long)]
    pub m: Option<f64>,
    /// Absolute covariance threshold c (constrained mode).
    #[arg(long)]
    pub c: Option<f64>,
    /// Disparity target for baseline / postprocess fitting.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Baseline penalty increment per round.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub splits: usize,
    #[arg(long, default_value_t = 0.5)]
    pub train_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub l2: Option<f64>,
    /// JSON config file with solver/trainer knobs; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output prefix: writes `<out>.model.json` and `<out>.metrics.json`.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth { setting, seed, out } => run::cmd_synth(*setting, *seed, out),
        Command::Train(args) => run::cmd_train(args),
        Command::Sweep(args) => run::cmd_sweep(args),
        Command::Eval { data, schema, pred, out } => run::cmd_eval(data, schema, pred, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Numeric(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
