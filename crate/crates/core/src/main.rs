use std::process::ExitCode;

use asyncsw::cli::{run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let to_file = match &cli.command {
                asyncsw::cli::Command::Verify(a) => a.common.out.is_some(),
                _ => false,
            };
            if to_file {
                for line in &outcome.summary {
                    println!("{line}");
                }
            }
            if outcome.ok {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: verification failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
