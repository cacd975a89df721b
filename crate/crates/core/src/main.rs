use std::process::ExitCode;

use clap::Parser;

use blackwell::cli::{run, Cli};

fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse()).code())
}
