//! `nsp`: command-line driver for the n-party scalar product protocol.

mod args;
mod commands;
mod error;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .target(env_logger::Target::Stderr)
        .init();

    let outcome = match &cli.command {
        Command::Run(a) => commands::run(a, false),
        Command::Verify(a) => commands::run(a, true),
        Command::Counts(a) => commands::counts(a),
        Command::Bench(a) => commands::bench(a),
        Command::Attack(a) => commands::attack(a),
        Command::Expand(a) => commands::expand(a),
        Command::Audit(a) => commands::audit(a),
    };
    match outcome {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.stdout.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
