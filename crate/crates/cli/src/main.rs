//! `aglab`: batch front end for the forbidden-agreement workbench.
//!
//! Every report is one JSON line carrying the run configuration. Exit status
//! is 0 when every assertion held, 1 when a violation was found and 2 on
//! usage, input or budget errors.

macro_rules! ensure {
    ($cond:expr, $kind:ident, $($arg:tt)*) => {
        if !$cond {
            return Err(aglab_core::Error::$kind(format!($($arg)*)));
        }
    };
}

mod args;
mod commands;
mod input;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use output::Outcome;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Violations) => ExitCode::from(1),
        Err(e) => {
            eprintln!("aglab: {e}");
            ExitCode::from(2)
        }
    }
}
