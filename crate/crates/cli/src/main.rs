//! `she`: experiments for the stochastic heat equation with colored noise.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "she", version, about = "Stochastic heat equation experiments")]
struct Cli {
    /// Worker threads for ensemble runs; results do not depend on it.
    #[arg(long, global = true, env = "SHE_WORKERS")]
    workers: Option<usize>,
    /// Output directory (default ./runs/<timestamp>-<hash>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dalang integrals Υ(β) or Υ_α for a kernel.
    Dalang(commands::DalangArgs),
    /// The series H(t) and its growth rates.
    Series(commands::SeriesArgs),
    /// Evaluate a moment bound from an inputs file.
    Bounds(commands::BoundsArgs),
    /// Growth class and Osgood verdict of a coefficient pair.
    Classify(commands::ClassifyArgs),
    /// Compare sampled noise covariance against the kernel.
    NoiseCheck(commands::NoiseCheckArgs),
    /// Simulate paths and write per-path records.
    Simulate(EnsembleArgs),
    /// Moment estimates and bound checks.
    Moments(EnsembleArgs),
    /// Hitting probabilities of truncation levels.
    Stopping(EnsembleArgs),
    /// Blow-up fractions over horizons.
    Blowup(EnsembleArgs),
    /// Structure-function Hölder exponents.
    Holder(EnsembleArgs),
    /// Check a config for hypothesis consistency without running it.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    let out = cli.out.as_deref();
    let result = match &cli.command {
        Command::Dalang(a) => commands::dalang(a, out),
        Command::Series(a) => commands::series(a, out),
        Command::Bounds(a) => commands::bounds(a, out),
        Command::Classify(a) => commands::classify(a, out),
        Command::NoiseCheck(a) => commands::noise_check(a, out, workers),
        Command::Validate(a) => commands::validate(&a.config, out),
        Command::Simulate(a)
        | Command::Moments(a)
        | Command::Stopping(a)
        | Command::Blowup(a)
        | Command::Holder(a) => {
            let name = match &cli.command {
                Command::Simulate(_) => "simulate",
                Command::Moments(_) => "moments",
                Command::Stopping(_) => "stopping",
                Command::Blowup(_) => "blowup",
                _ => "holder",
            };
            commands::ensemble(name, &a.config, a.paths, a.seed, out, workers)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
