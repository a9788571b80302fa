mod args;
mod commands;
mod error;
mod io;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use crate::args::Cli;
use crate::error::{CliError, Result};
use crate::io::{expand_config, Header};

fn configure_threads(strict: bool, threads: Option<usize>) -> Result<()> {
    let n = if strict { Some(1) } else { threads };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot start thread pool: {e}")))?;
    }
    Ok(())
}

fn run() -> Result<()> {
    let root = Cli::command();
    let argv = expand_config(&root, std::env::args_os().collect())?;
    let matches = root.clone().get_matches_from(argv);
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    let run = cli.command.run_args();
    configure_threads(run.strict, run.threads)?;
    commands::run(&cli.command, Header::from_matches(&root, &matches))
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
