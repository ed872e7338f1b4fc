use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod checks;
mod commands;
mod config;
mod output;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "xyforce", version, about = "Forced impurity in the XY chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Derived parameters, thresholds and forcing statistics.
    Params,
    /// Run the numerical checks; exits nonzero on failure.
    Verify,
    /// Fourier coefficients of the periodic solution.
    Periodic,
    /// Finite-history solutions.
    Volterra,
    /// Relaxation towards the periodic solution and its power-law fit.
    Compare,
    /// Periodic solution on lattice sites.
    Lattice,
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let path = cli.config.ok_or_else(|| anyhow::anyhow!("--config <path> is required"))?;
    let cfg = RunConfig::load(&path)?;
    let dir = cli.out.unwrap_or_else(|| cfg.output.dir.clone());
    match cli.command {
        Command::Params => commands::params(&cfg, &dir),
        Command::Verify => commands::verify(&cfg, &dir),
        Command::Periodic => commands::periodic(&cfg, &dir),
        Command::Volterra => commands::volterra(&cfg, &dir),
        Command::Compare => commands::compare(&cfg, &dir),
        Command::Lattice => commands::lattice(&cfg, &dir),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
