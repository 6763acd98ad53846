use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod output;

/// Replay-attack detection experiments with dynamic watermarking.
#[derive(Debug, Parser)]
#[command(name = "dynwm", version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML experiment configuration; omitted sections use the DC-motor study
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed for the Monte Carlo noise streams
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Monte Carlo runs per ensemble
    #[arg(long, global = true, value_name = "N")]
    runs: Option<usize>,

    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Use the hand-made reference motor detector instead of optimizing one
    #[arg(long, global = true)]
    use_paper_design: bool,

    /// Detectability margin δ for design optimization
    #[arg(long, global = true, value_name = "F64", allow_negative_numbers = true)]
    delta: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// LQG controller and Kalman filter, with the replay stealthiness verdict
    Synthesize,
    /// Optimize (or load) a dynamic detector and write its design record
    Design,
    /// Attack-free closed-loop trace
    Simulate {
        /// Trace length in samples
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Replay attack ensemble with per-β detection statistics
    Attack {
        /// Alarm thresholds to evaluate
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<usize>>,
    },
    /// Detection rate and time against β for the dynamic and i.i.d. methods
    DetectionCurve {
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<usize>>,
    },
    /// Control inputs of both methods calibrated to the same detection time
    ControlSignal,
    /// Optimized performance loss over a grid of δ
    LossSweep {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        deltas: Option<Vec<f64>>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli.common, &cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 3 })
        }
    }
}
