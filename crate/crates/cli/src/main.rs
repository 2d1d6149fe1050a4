use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = fsb_cli::Cli::parse();
    fsb_cli::run(&cli)
}
