//! `mdd`: runs MDD experiments from JSON configs and verification suites.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or config error,
//! 3 verifier violation.

mod config;
mod error;
mod experiments;
mod output;
mod verify;

use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::output::OutputDir;
use crate::verify::Suite;

#[derive(Parser)]
#[command(name = "mdd", version, about = "Measurement-based dynamical decoupling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads. Results do not depend on it.
        #[arg(long)]
        jobs: Option<NonZeroUsize>,
    },
    /// Runs a built-in verification suite and prints its JSON report.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also writes the report to `<DIR>/verify_<suite>.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<NonZeroUsize>,
    },
}

fn with_pool<T: Send>(jobs: Option<NonZeroUsize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.get());
    }
    let pool = builder.build().map_err(|e| CliError::config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Run { config, seed, out, jobs } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("results"));
            let mut output = OutputDir::create(&dir)?;
            let violations = with_pool(jobs, || experiments::run(&cfg, &mut output))??;
            for path in output.written() {
                println!("wrote {}", path.display());
            }
            if !violations.is_empty() {
                return Err(CliError::Violation(violations.join("; ")));
            }
        }
        Command::Verify { suite, seed, out, jobs } => {
            let report = with_pool(jobs, || verify::run(suite, seed))??;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if let Some(dir) = out {
                let name = format!("verify_{}.json", serde_json::to_value(suite)?.as_str().unwrap_or("suite"));
                OutputDir::create(&dir)?.json(&name, &report)?;
            }
            if !report.passed {
                let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
                return Err(CliError::Violation(failed.join(", ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mdd: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
