//! `heralded`: run entangling-operation simulations, parameter sweeps,
//! chain-growth cost estimates and self-checks from the command line.
//!
//! Exit codes: 0 ok, 1 invalid input, 2 a verification check failed,
//! 3 internal error.

mod args;
mod commands;
mod output;
mod units;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Verify(String),
    Internal(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn internal(e: impl std::fmt::Display) -> Self {
        CliError::Internal(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Verify(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Verify(m) => write!(f, "verification failed: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<heralded::Error> for CliError {
    fn from(e: heralded::Error) -> Self {
        use heralded::Error as E;
        match e {
            E::ZeroNorm | E::DimensionMismatch { .. } => CliError::Internal(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Eo(a) => commands::eo(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Grow(a) => commands::grow(a),
        Command::Verify(a) => commands::verify(a),
        Command::Budget(a) => commands::budget(a),
        Command::Run(r) => {
            let loaded = args::load_config(&r.config)?;
            dispatch(&loaded)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("heralded: invalid input: --jobs must be >= 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("heralded: internal error: {e}");
            return ExitCode::from(3);
        }
    }
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("heralded {}: {e}", cli.command.name());
            ExitCode::from(e.code())
        }
    }
}
