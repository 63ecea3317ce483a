// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use secure_lipsin::cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            let to_stdout = match &cli.command {
                secure_lipsin::cli::Command::Analyze(a)
                | secure_lipsin::cli::Command::Simulate(a)
                | secure_lipsin::cli::Command::Attack(a)
                | secure_lipsin::cli::Command::Sweep(a) => a.out.is_none(),
            };
            if to_stdout && std::io::stdout().write_all(out.csv.as_bytes()).is_err() {
                return ExitCode::FAILURE;
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
