use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use posecast_core::data::{SplitName, SynthMode};
use posecast_core::model::ModelKind;
use serde::Serialize;

mod commands;
mod logger;

#[derive(Debug, Parser)]
#[command(name = "posecast", version, about = "Emotion-conditioned short-horizon pose forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic pose/emotion frame file.
    Synth(SynthArgs),
    /// Split, normalize and train one model; writes a run directory.
    Train(TrainArgs),
    /// Loss and denormalized MPJPE of a checkpoint on one split.
    Eval(EvalArgs),
    /// Counterfactual emotion-noise sensitivity of a checkpoint.
    Perturb(PerturbArgs),
    /// Summarize a run directory: final losses, gate trajectory, reports.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
struct SynthArgs {
    #[arg(long, value_parser = parse_from_str::<SynthMode>)]
    mode: SynthMode,
    #[arg(long, default_value_t = 3000)]
    frames: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output frame file (JSON lines).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    #[arg(long, value_parser = parse_from_str::<ModelKind>)]
    model: ModelKind,
    #[arg(long)]
    data: PathBuf,
    /// Run directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    obs_len: usize,
    #[arg(long, default_value_t = 15)]
    horizon: usize,
    /// Frames dropped before the val and test segments.
    #[arg(long, default_value_t = 24)]
    gap: usize,
    /// LSTM hidden width.
    #[arg(long, default_value_t = 128)]
    hidden: usize,
    /// Global gradient-norm cap (off unless given).
    #[arg(long)]
    clip: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "test", value_parser = parse_from_str::<SplitName>)]
    split: SplitName,
    /// Output directory; defaults to the checkpoint's directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct PerturbArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Noise levels, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    sigma: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "test", value_parser = parse_from_str::<SplitName>)]
    split: SplitName,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ReportArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_from_str<T>(s: &str) -> Result<T, String>
where
    T: std::str::FromStr<Err = posecast_core::Error>,
{
    s.parse().map_err(|e: posecast_core::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    logger::init();
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Perturb(a) => commands::perturb(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
