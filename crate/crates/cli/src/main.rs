mod commands;
mod config;
mod error;
mod report;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Command, Flags, RunConfig};
use error::CliError;

/// Simulation and verification of empirical processes for the intermittent
/// map. Exit status: 0 success, 1 usage or missing input, 2 numerical error
/// or failed gate.
#[derive(Parser)]
#[command(name = "ilrd", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Generate an orbit (.bin, .csv, summary .json).
    Simulate(Flags),
    /// Ulam estimate of the invariant density with shape and ECDF checks.
    Density(Flags),
    /// Monte Carlo batch of normalized statistics against the limit law.
    Limit(Flags),
    /// Decay exponent of the lag covariances.
    Covdecay(Flags),
    /// Beta-mixing coefficients from the Ulam kernel.
    Beta(Flags),
    /// Audit of the maximal inequality.
    Maxineq(Flags),
    /// Almost-sure trend of the normalized norm over checkpoints.
    Trend(Flags),
    /// Forward orbits against reversed chains.
    Reversal(Flags),
    /// Collect the summaries in --out into report.json and report.md.
    Report(Flags),
}

impl Sub {
    fn split(self) -> (Command, Flags) {
        match self {
            Sub::Simulate(f) => (Command::Simulate, f),
            Sub::Density(f) => (Command::Density, f),
            Sub::Limit(f) => (Command::Limit, f),
            Sub::Covdecay(f) => (Command::Covdecay, f),
            Sub::Beta(f) => (Command::Beta, f),
            Sub::Maxineq(f) => (Command::Maxineq, f),
            Sub::Trend(f) => (Command::Trend, f),
            Sub::Reversal(f) => (Command::Reversal, f),
            Sub::Report(f) => (Command::Report, f),
        }
    }
}

fn execute(command: Command, flags: &Flags) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(command, flags)?;
    if let Some(t) = cfg.threads {
        // a second initialization only happens in tests; ignore it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    if command == Command::Report {
        return report::run(&cfg.out, cfg.seed);
    }
    let outputs = commands::run(&cfg)?;
    for p in outputs.write(&cfg)? {
        eprintln!("wrote {}", p.display());
    }
    match &outputs.summary {
        Some(s) if !s.passed() => Err(CliError::GatesFailed(s.failing().join(", "))),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, flags) = cli.command.split();
    match execute(command, &flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ilrd {}: {e}", command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
