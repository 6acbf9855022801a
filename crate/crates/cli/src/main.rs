use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    qh_cli::run(qh_cli::Cli::parse())
}
