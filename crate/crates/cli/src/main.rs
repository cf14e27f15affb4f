use std::process::ExitCode;

use clap::Parser;
use phasemotion_cli::{configure_threads, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("phasemotion: {e}");
            ExitCode::FAILURE
        }
    }
}
