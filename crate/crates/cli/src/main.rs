//! `gbrnmf`: fit, simulate, evaluate, verify and reconstruct from the shell.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or validation
//! error, 3 numeric failure.

mod evaluate;
mod failure;
mod files;
mod fit;
mod reconstruct;
mod simulate;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use failure::Failure;

#[derive(Parser)]
#[command(name = "gbrnmf", version, about = "Group and basis restricted NMF")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factorize a CSV matrix.
    Fit(fit::Args),
    /// Generate a synthetic group-structured dataset.
    Simulate(simulate::Args),
    /// Score a fitted model against simulated ground truth.
    Evaluate(evaluate::Args),
    /// Run the numerical checks of the update rules.
    Verify(verify::Args),
    /// Write original and reconstructed rows side by side.
    Reconstruct(reconstruct::Args),
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("GBRNMF_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::usage(format!("GBRNMF_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::usage(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Fit(args) => fit::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Evaluate(args) => evaluate::run(args),
        Command::Verify(args) => verify::run(args),
        Command::Reconstruct(args) => reconstruct::run(args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
