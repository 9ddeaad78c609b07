//! Command-line front end for `edgereg`: simulation, fitting, graph
//! selection, evaluation and convergence diagnostics over files on disk.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod archive;
pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use clap::Parser;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => commands::cmd_simulate(&a).map(drop),
        Command::Fit(a) => commands::cmd_fit(&a).map(drop),
        Command::Select(a) => commands::cmd_select(&a).map(drop),
        Command::Evaluate(a) => commands::cmd_evaluate(&a).map(drop),
        Command::Diagnose(a) => commands::cmd_diagnose(&a).map(drop),
    }
}

/// Parses and runs an argument vector (first item is the program name).
pub fn run_args<I, T>(args: I) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    run(cli)
}
