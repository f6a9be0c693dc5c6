//! `carbonsched` command-line entry point.
//!
//! Exit codes: 0 success, 1 data error, 2 configuration error.

mod args;
mod cee;
mod format;
mod serve;
mod simulate;
mod validate;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Failure classes with stable exit codes.
#[derive(Debug)]
pub enum CliError {
    Data(anyhow::Error),
    Config(anyhow::Error),
}

impl CliError {
    pub fn data(e: impl Into<anyhow::Error>) -> Self {
        CliError::Data(e.into())
    }

    pub fn config(e: impl Into<anyhow::Error>) -> Self {
        CliError::Config(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Serve(a) => serve::run(a),
        Command::Cee(a) => cee::run(a),
        Command::Validate(a) => validate::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(CliError::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
    }
}
