use std::process::ExitCode;

use clap::Parser;
use netscale_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("netscale: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
