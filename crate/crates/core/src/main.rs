use std::process::ExitCode;

use clap::Parser;
use qdetect::cli::{self, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { cli::EXIT_INPUT } else { 0 };
            let _ = err.print();
            return ExitCode::from(code as u8);
        }
    };
    let level = cli::log_level(std::env::var("QDETECT_LOG").ok().as_deref());
    env_logger::Builder::new().filter_level(level).init();

    let outcome = cli::run(&cli);
    match &cli.global.output {
        Some(path) => {
            if let Err(err) = std::fs::write(path, &outcome.body) {
                eprintln!("error: {}: {err}", path.display());
                return ExitCode::from(cli::EXIT_INPUT as u8);
            }
        }
        None => print!("{}", outcome.body),
    }
    ExitCode::from(outcome.code as u8)
}
