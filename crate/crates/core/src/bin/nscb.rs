use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nscb::io::RunConfig;
use nscb::pipeline::{run_stage, Stage};

#[derive(Parser)]
#[command(name = "nscb", version, about = "Navier-Stokes cascade and blowup-criterion toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config file: `section.key = value` lines or JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides outputs.directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random initial data (overrides initial_data.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate the initial data and store the trajectory.
    Simulate,
    /// Split the stored trajectory into cascade layers and remainder.
    Decompose,
    /// Besov, Lebesgue, Kato and weighted-log norms of the trajectory.
    Norms,
    /// Blowup-criterion monitor and scans.
    Monitor,
    /// Invariant self-check suite.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stage = match cli.command {
        Command::Simulate => Stage::Simulate,
        Command::Decompose => Stage::Decompose,
        Command::Norms => Stage::Norms,
        Command::Monitor => Stage::Monitor,
        Command::Verify => Stage::Verify,
    };
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    };
    let mut cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("nscb: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.initial_data.seed = seed;
    }
    let out = cli.out.unwrap_or_else(|| cfg.outputs.directory.clone());
    match run_stage(stage, &cfg, &out) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("nscb: {} reported failed checks (see {})", stage.name(), out.display());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("nscb: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
