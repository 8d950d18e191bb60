//! `mvreg`: batch front end for registration, simulation, evaluation and
//! benchmarking.
//!
//! Exit codes: 0 success, 1 invalid input or I/O failure, 2 no active voxels.

mod benchmark;
mod evaluate;
mod register;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mvreg::Error;

#[derive(Parser)]
#[command(name = "mvreg", version, about = "Multiview point-cloud registration by planar bundle adjustment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Jointly register a sequence of point clouds.
    Register(register::Args),
    /// Generate a synthetic scene folder with ground truth.
    Simulate(simulate::Args),
    /// Compare an estimated trajectory (and optionally a cloud) to a reference.
    Evaluate(evaluate::Args),
    /// Sweep simulated scenes over a parameter grid and record accuracy and runtime.
    Benchmark(benchmark::Args),
}

/// Failure carrying its exit code.
pub struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoActiveVoxels => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        Failure::input(format!("{}: {e}", path.display()))
    }
}

pub type CmdResult = Result<(), Failure>;

/// Write pretty JSON to `path`.
pub fn write_json(path: &PathBuf, value: &impl serde::Serialize) -> CmdResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::io(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Failure::io(path, e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Register(a) => register::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::Benchmark(a) => benchmark::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
