//! Batch front end: `thermal-wick run <config.json> [--out DIR] [--verbose]`.
//!
//! Exit codes: 0 when every task passes, 1 on numerical failure (the report
//! is still written), 2 on configuration or usage errors.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use thermal_wick::config::ExperimentConfig;
use thermal_wick::runner;
use thermal_wick::Error;

#[derive(Parser)]
#[command(
    name = "thermal-wick",
    version,
    about = "Thermal Green functions and their reconstruction from imaginary time"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tasks of a JSON experiment configuration.
    Run {
        /// Path to the configuration file.
        config: PathBuf,
        /// Output directory for report.json and curve CSVs.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Print each residual as it is measured.
        #[arg(long)]
        verbose: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, verbose } => {
            let raw = match std::fs::read(&config) {
                Ok(raw) => raw,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            let parsed = match std::str::from_utf8(&raw)
                .map_err(|e| Error::Config(e.to_string()))
                .and_then(ExperimentConfig::from_json)
            {
                Ok(parsed) => parsed,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            match runner::run(&parsed, &raw, &out, verbose) {
                Ok(report) => {
                    if report.overall_pass {
                        println!("all {} checks passed", report.records.len());
                        ExitCode::SUCCESS
                    } else {
                        let failed = report.records.iter().filter(|r| !r.pass).count();
                        println!("{failed} of {} checks failed", report.records.len());
                        ExitCode::from(1)
                    }
                }
                Err(e @ (Error::Config(_) | Error::Json(_))) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
