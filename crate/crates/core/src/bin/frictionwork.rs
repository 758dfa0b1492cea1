use std::process::ExitCode;

use clap::Parser;
use frictionwork::cli::{run, Cli};

fn main() -> ExitCode {
    run(Cli::parse())
}
