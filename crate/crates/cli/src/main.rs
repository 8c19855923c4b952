#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::config::{CommandName, RunConfig};
use crate::error::{invalid, CliResult};

fn threads() -> CliResult<()> {
    let Ok(text) = std::env::var("REMLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| invalid("REMLAB_THREADS", format!("`{text}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| invalid("REMLAB_THREADS", e.to_string()))
}

fn main_inner(cli: Cli) -> CliResult<()> {
    threads()?;
    let name = match &cli.command {
        Command::Analytic(_) => CommandName::Analytic,
        Command::Simulate(_) => CommandName::Simulate,
        Command::Converge(_) => CommandName::Converge,
        Command::Ladder(_) => CommandName::Ladder,
        Command::Recover(_) => CommandName::Recover,
        Command::Validate(_) => CommandName::Validate,
    };
    let flags = cli.command.flags();
    let cfg = RunConfig::from_flags(name, flags)?;
    commands::run(&cfg, flags.manifest.clone())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
