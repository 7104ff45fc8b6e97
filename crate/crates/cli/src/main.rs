//! `rwexperts`: command-line front end for the private experts library.
//!
//! Exit codes: 0 on success, 2 for usage or validation errors, 3 for
//! runtime and numerical failures.

mod commands;
mod output;

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] rwexperts::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.is_usage() => 2,
            CliError::Usage(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rwexperts", version, about = "Private prediction from expert advice: curves, simulations, runs and evaluations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Baseline, amplified and (ε, δ) privacy curves for RW-AdaBatch.
    PrivacyCurve(commands::PrivacyCurveArgs),
    /// Monte Carlo batch-size PMF and the empirical tradeoff it implies.
    Simulate(commands::SimulateArgs),
    /// Prints the delay the adaptive batching rule picks for one query.
    ComputeDelay(commands::ComputeDelayArgs),
    /// Runs one algorithm over a stream file.
    Run(commands::RunArgs),
    /// Evaluates RW-Meta against its learners at several privacy levels.
    Eval(commands::EvalArgs),
    /// Writes a gain stream to disk.
    GenStream(commands::GenStreamArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::PrivacyCurve(a) => commands::privacy_curve(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::ComputeDelay(a) => commands::compute_delay(&a),
        Command::Run(a) => commands::run(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::GenStream(a) => commands::gen_stream(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
