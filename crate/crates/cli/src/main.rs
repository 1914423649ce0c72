mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::artifacts::Format;

#[derive(Parser, Debug)]
#[command(name = "uscx", version, about = "Experiments on upper semicontinuous processes")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// JSON config for the command; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed. Falls back to the config, then to USCX_SEED.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of Monte Carlo samples.
    #[arg(long, global = true)]
    pub n: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Caps the worker threads used for sampling.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate simple max-stable fields on a grid.
    Simulate(commands::SimulateArgs),
    /// Closed-form and empirical capacity functionals.
    #[command(allow_negative_numbers = true)]
    Capacity(commands::CapacityArgs),
    /// Monte Carlo check of max-stability through probe hit rates.
    #[command(name = "maxstab-check")]
    MaxstabCheck(commands::MaxstabArgs),
    /// Apply a marginal transform to grid field files.
    Sklar(commands::SklarArgs),
    /// Estimate the probabilities behind a counterexample.
    Gallery(commands::GalleryArgs),
    /// GEV parameters from three quantiles.
    #[command(allow_negative_numbers = true)]
    Gevfit(commands::GevfitArgs),
    /// Check hypo-convergence of a sequence of grid fields.
    Hypoconv(commands::HypoconvArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    }
    let start = Instant::now();
    let g = &cli.global;
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(g, a),
        Command::Capacity(a) => commands::capacity(g, a),
        Command::MaxstabCheck(a) => commands::maxstab_check(g, a),
        Command::Sklar(a) => commands::sklar(g, a),
        Command::Gallery(a) => commands::gallery(g, a),
        Command::Gevfit(a) => commands::gevfit(g, a),
        Command::Hypoconv(a) => commands::hypoconv(g, a),
    };
    // Timing stays out of the artifacts so reruns hash identically.
    eprintln!("wall time: {:.3}s", start.elapsed().as_secs_f64());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.code())
        }
    }
}
