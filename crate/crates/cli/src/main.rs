//! `horseshoe` command-line tool.
//!
//! Exit status: 0 on success, 2 for usage and validation errors, 3 when a
//! numerical result misses its accuracy target, 1 if output cannot be written.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use horseshoe::PriorFamily;

use crate::io::CliError;

#[derive(Debug, Parser)]
#[command(name = "horseshoe", version, about = "Horseshoe-prior estimation for sparse normal means")]
struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true, env = "HORSESHOE_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Posterior mean and variance for every observation in a file.
    Fit(FitArgs),
    /// Run a simulation experiment described by a TOML config file.
    Simulate(SimulateArgs),
    /// Tabulate the log marginal likelihood over a grid of tau values.
    Profile(ProfileArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Plain text file, one observation per line.
    pub input: PathBuf,
    /// eb_mmle, eb_simple, hb, or hb_<prior> (e.g. hb_truncated_cauchy).
    #[arg(long, default_value = "eb_mmle")]
    pub method: String,
    /// Hyperprior on tau for `--method hb`: truncated_cauchy, uniform,
    /// reciprocal or half_cauchy.
    #[arg(long)]
    pub prior: Option<PriorFamily>,
    /// Threshold constant of the simple estimator (default 2).
    #[arg(long)]
    pub c1: Option<f64>,
    /// Denominator constant of the simple estimator (default 1).
    #[arg(long)]
    pub c2: Option<f64>,
    /// Tau grid points: the MMLE scan (default 200) or the hyperprior
    /// quadrature (default 400).
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Add equal-tailed credible intervals at this level.
    #[arg(long)]
    pub level: Option<f64>,
    /// Output CSV (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML experiment config (`preset = "figure2"` plus optional overrides).
    pub config: PathBuf,
    /// Output CSV; run metadata goes to a `.meta.toml` file next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the seed of the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Plain text file, one observation per line.
    pub input: PathBuf,
    /// Number of log-spaced grid points.
    #[arg(long, default_value_t = 200)]
    pub grid_size: usize,
    /// Smallest tau of the grid (default 1/n).
    #[arg(long)]
    pub lower: Option<f64>,
    /// Largest tau of the grid (default 1).
    #[arg(long)]
    pub upper: Option<f64>,
    /// Output CSV (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.into())
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {t} threads: {e}")))?;
    }
    match cli.command {
        Command::Fit(args) => commands::fit(&args),
        Command::Simulate(args) => commands::simulate(&args, cli.threads.map(usize::from)),
        Command::Profile(args) => commands::profile(&args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
