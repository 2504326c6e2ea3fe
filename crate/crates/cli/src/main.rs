mod commands;
mod config;
mod error;
mod expr;
mod plot;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "bathy", version, about = "Water waves over variable bathymetry: simulation, certificates and bottom reconstruction")]
struct Cli {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output].dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed of the randomized checks and noise (overrides [certificate].seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Time-step the wave equations on the periodic simulation domain.
    Simulate,
    /// Simulate, then record the surface data on the window at t0.
    Measure,
    /// Solve for the potential on the window at t = 0 and write the DNO.
    Solve,
    /// Stability certificate for the pair of configurations in [profiles].
    Certify,
    /// Reconstruct the bottom from a recorded measurement.
    Invert,
    /// Run the built-in oracle checks.
    Verify,
    /// Certificate along the perturbation family for [certificate].epsilons.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Measure => "measure",
            Command::Solve => "solve",
            Command::Certify => "certify",
            Command::Invert => "invert",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.certificate.seed = seed;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads {n}: {e}")))?;
    }
    let ctx = commands::Context::new(cfg, cli.command.name())?;
    match cli.command {
        Command::Simulate => commands::simulate(&ctx),
        Command::Measure => commands::measure(&ctx),
        Command::Solve => commands::solve(&ctx),
        Command::Certify => commands::certify(&ctx),
        Command::Invert => commands::invert(&ctx),
        Command::Verify => verify::verify(&ctx),
        Command::Sweep => commands::sweep(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
