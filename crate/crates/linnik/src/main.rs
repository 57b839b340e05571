use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use linnik::cli::{execute, Cli};
use linnik::Error;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match execute(&cli) {
        Ok(report) => {
            print!("{report}");
            let _ = std::io::stdout().flush();
            eprintln!("elapsed: {:.3}s", start.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::BudgetExceeded(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
