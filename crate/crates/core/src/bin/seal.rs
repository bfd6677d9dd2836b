use std::process::ExitCode;

use clap::Parser;
use seal_core::cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("seal: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
