use std::process::ExitCode;

use clap::Parser;
use scal_cli::commands::{dispatch, Command};

/// Active learning for subspace clustering.
#[derive(Debug, Parser)]
#[command(name = "scal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
