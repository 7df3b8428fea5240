//! `kcausal`: runs the library's checks and writes JSON or CSV reports.
//!
//! Exit status is 0 when the check passes, 1 when it fails (or hits a
//! numerical failure) and 2 on usage or input errors.

mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;
use kappa_causal::Error;

use crate::commands::Command;
use crate::config::GlobalArgs;

#[derive(Debug, Parser)]
#[command(name = "kcausal", version, about = "Causal structure checks for 1+1 kappa-Minkowski")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl CliError {
    /// Tags a library error with the operation that raised it.
    pub fn from_core(op: &str, e: Error) -> Self {
        match e {
            Error::EigenNonConvergence(_)
            | Error::ImaginaryExpectation { .. }
            | Error::Overflow(_)
            | Error::NotSquare { .. }
            | Error::NotInCone(..) => CliError::Numerical(format!("{op}: {e}")),
            _ => CliError::Input(format!("{op}: {e}")),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli.command, &cli.global) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("kcausal {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
