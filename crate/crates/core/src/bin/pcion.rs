use clap::Parser;
use pcion_core::cli::{execute, Cli};

fn main() {
    std::process::exit(execute(Cli::parse()));
}
