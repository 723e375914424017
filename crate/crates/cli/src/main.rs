//! `obstacle-lab`: forward solves, stability experiments and inequality
//! checks driven by `key = value` config files.

mod config;
mod error;
mod experiment;
mod inequalities;
mod output;
mod solve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "obstacle-lab", version, about = "Numerical lab for obstacle detection in stationary Navier-Stokes flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one forward problem and write the field, diagnostics and Cauchy data.
    Solve(RunArgs),
    /// Run a stability sweep over an obstacle family and fit the moduli.
    Experiment(RunArgs),
    /// Check unique-continuation inequalities on a computed or synthetic field.
    Inequalities(RunArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for every random choice; written to all outputs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 lets rayon decide).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&RunArgs, fn(&RunArgs) -> Result<(), CliError>) = match &cli.command {
        Command::Solve(a) => (a, solve::run),
        Command::Experiment(a) => (a, experiment::run),
        Command::Inequalities(a) => (a, inequalities::run),
    };
    let result = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| CliError::config(Some("threads"), e.to_string()))
        .and_then(|pool| pool.install(|| run(args)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
