//! `ictmdp`: solve, simulate and validate impulsive CTMDPs from the command
//! line.

mod artifacts;
mod commands;
mod config;
mod error;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Output;
use crate::config::{Flags, RunConfig};
use crate::error::CliError;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  i/o or serialization failure
  2  parse error (model, params or config file, command line)
  3  validation failure (model invariants, parameter domain, --strict-hd)
  4  non-convergence
  5  improper intervention chain

On success the metadata record is printed to stdout and, with --out, written
together with the CSV tables. On failure one JSON error record goes to stderr
and nothing is written.";

#[derive(Parser)]
#[command(name = "ictmdp", version, about, after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model or epidemic parameter file.
    Validate(Flags),
    /// Solve a model; writes value.csv and solve.json.
    Solve(Flags),
    /// Estimate the discounted cost of the optimal policy by simulation;
    /// writes trajectories.csv and estimate.json.
    Simulate(Flags),
    /// Solve the carrier equation of an epidemic; writes carrier.csv and
    /// epidemic.json.
    EpidemicSolve(Flags),
    /// Threshold and critical cost over a list of immunization costs; writes
    /// sweep.csv and sweep.json.
    EpidemicSweep(Flags),
    /// Compare both sides of the discounted Dynkin formula for the solved
    /// value; writes dynkin.json.
    DynkinCheck(Flags),
}

type Action = fn(&RunConfig) -> Result<Output, CliError>;

fn run(cli: Cli) -> Result<Output, CliError> {
    let (name, flags, action): (&'static str, Flags, Action) = match cli.command {
        Command::Validate(f) => ("validate", f, commands::validate),
        Command::Solve(f) => ("solve", f, commands::solve),
        Command::Simulate(f) => ("simulate", f, commands::simulate),
        Command::EpidemicSolve(f) => ("epidemic-solve", f, commands::epidemic_solve),
        Command::EpidemicSweep(f) => ("epidemic-sweep", f, commands::epidemic_sweep),
        Command::DynkinCheck(f) => ("dynkin-check", f, commands::dynkin_check),
    };
    let cfg = RunConfig::resolve(name, flags)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    let output = action(&cfg)?;
    if let Some(dir) = &cfg.out {
        output.artifacts.write_to(dir)?;
    }
    Ok(output)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(output) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(&output.metadata).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let record = e.record();
            eprintln!("{}", serde_json::to_string(&record).unwrap_or_else(|_| e.to_string()));
            ExitCode::from(e.exit_code())
        }
    }
}
