use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use deeptherm_core::acceptance;
use deeptherm_core::measurement::MitigationMode;
use deeptherm_core::pipeline::{self, Mode, Overrides, RunOptions};
use deeptherm_core::Execution;

#[derive(Parser)]
#[command(name = "deeptherm", version, about = "Projected-ensemble experiments on 2D XY lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
        /// Worker threads; 1 runs everything on the calling thread.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_mitigation)]
        mitigation: Option<MitigationMode>,
    },
    /// Run the acceptance suite; exits non-zero if any criterion fails.
    Selftest {
        /// Only run the criteria with these ids.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: deeptherm_core::Error| e.to_string())
}

fn parse_mitigation(s: &str) -> Result<MitigationMode, String> {
    s.parse().map_err(|e: deeptherm_core::Error| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, mode, workers, seed, out, mitigation } => {
            let overrides = Overrides { mode, seed, out, mitigation };
            let exec = if workers == Some(1) { Execution::Serial } else { Execution::Parallel };
            let result = pipeline::run_file(&config, &overrides, RunOptions { exec, workers })
                .with_context(|| format!("running {}", config.display()));
            match result {
                Ok(report) => {
                    println!("wrote {} files to {}", report.files.len() + 1, report.output_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Selftest { only } => {
            let mut all = true;
            for id in acceptance::CRITERIA.iter().map(|c| c.id).filter(|id| only.is_empty() || only.contains(id)) {
                let report = acceptance::run_criterion(id);
                println!("{report}");
                all &= report.passed;
            }
            if all {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
