use std::process::ExitCode;

use clap::Parser;
use setmatch_harness::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) if outcome.passed => {
            println!("{}", outcome.message);
            ExitCode::SUCCESS
        }
        Ok(outcome) => {
            eprintln!("validation failed: {}", outcome.message);
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
