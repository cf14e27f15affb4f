//! Command-line front end for `phasemotion`.
//!
//! Every command that writes files also writes `run.json` next to them: the
//! full argument set and library version. `phasemotion replay run.json`
//! reruns it.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod rawio;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub use config::RunConfig;
pub use error::{CliError, CliResult};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "PHASEMOTION_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "phasemotion",
    version,
    about = "Phase-difference motion fields and baselines"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Dump per-sub-band amplitude, phase and raw coefficients.
    Decompose(DecomposeArgs),
    /// Phase-difference snippets (SNIP1 tensors) and per-pair images.
    Phasediff(PhaseDiffArgs),
    /// Horn-Schunck flow for every consecutive pair, as .flo files.
    Flow(FlowArgs),
    /// Per-frame gamma jitter.
    Corrupt(CorruptArgs),
    /// Concordance and Pearson correlation of two series.
    Ccc(CccArgs),
    /// Time the phase-difference pipeline against Horn-Schunck.
    Bench(BenchArgs),
    /// Gamma-jitter robustness sweep.
    Sweep(SweepArgs),
    /// Rerun a command from its run.json.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DecomposeArgs {
    /// Frame directory or list file.
    pub input: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub scales: usize,
    #[arg(long, default_value_t = 2)]
    pub orients: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PhaseDiffArgs {
    /// Frame directory or list file.
    pub input: PathBuf,
    /// Phase blur σ in pixels of each sub-band.
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    /// Frames per snippet; consecutive snippets share their boundary frame.
    #[arg(long, default_value_t = 13)]
    pub length: usize,
    /// Square side frames are resized to.
    #[arg(long, default_value_t = 48)]
    pub size: usize,
    /// Keep the input resolution.
    #[arg(long)]
    pub no_resize: bool,
    #[arg(long, default_value_t = 2)]
    pub scales: usize,
    #[arg(long, default_value_t = 2)]
    pub orients: usize,
    /// Skip subtracting each sub-band's mean phase difference.
    #[arg(long)]
    pub keep_rigid_motion: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FlowArgs {
    /// Frame directory or list file.
    pub input: PathBuf,
    /// Smoothness weight in 8-bit gray levels.
    #[arg(long, default_value_t = 15.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CorruptArgs {
    /// Frame directory or list file.
    pub input: PathBuf,
    /// γ is drawn from U[1-β, 1+β] per frame.
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CccArgs {
    /// Predictions, or a two-column prediction,truth CSV.
    pub pred: PathBuf,
    /// Ground truth, one value per row.
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 48, value_parser = parse_bench_size)]
    pub size: usize,
    #[arg(long, default_value_t = 5)]
    pub pairs: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Seed of the synthetic input sequence.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    pub json: bool,
    /// Also write bench.json and run.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    /// Frame directory or list file; a synthetic sequence when omitted.
    pub input: Option<PathBuf>,
    /// Length of the synthetic sequence.
    #[arg(long, default_value_t = 100)]
    pub frames: usize,
    /// Side of the synthetic sequence.
    #[arg(long, default_value_t = 48)]
    pub size: usize,
    #[arg(long, default_value_t = 2024)]
    pub sequence_seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    pub betas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub seeds: Vec<u64>,
    /// Any of phase_diff, flow.
    #[arg(long, value_delimiter = ',', default_value = "phase_diff,flow")]
    pub pipelines: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub sidecar: PathBuf,
    /// Write to this directory instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_bench_size(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n @ (48 | 224)) => Ok(n),
        _ => Err(format!("size must be 48 or 224, got '{s}'")),
    }
}

/// Applies [`THREADS_ENV`] to the global rayon pool.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::new(
            "thread setup",
            format!("{THREADS_ENV} must be a positive integer, got '{raw}'"),
        )
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::new("thread setup", e.to_string()))
}

pub fn run(command: Command) -> CliResult<()> {
    commands::dispatch(command)
}
