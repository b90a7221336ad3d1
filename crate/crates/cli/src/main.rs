use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use evill_cli::error::{CliError, Result};
use evill_cli::report;
use evill_cli::runner::{self, workers};
use evill_cli::{EstimationConfig, RunConfig};
use evill_core::diagnostics::SUITES;
use evill_core::family::RewardFamily;

/// Randomised exploration experiments for single-parameter bandits.
///
/// The worker count is read from EVILL_WORKERS.
#[derive(Debug, Parser)]
#[command(name = "evill", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run bandit replicates; writes per-replicate traces and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the estimation protocol; writes estimation.csv.
    Estimation {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a numerical property suite and print its JSON report.
    Diagnose {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Confidence level parameter for `coverage`.
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
    /// Print the regret-guarantee parameters as JSON.
    Constants {
        #[arg(long)]
        family: RewardFamily,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        d: usize,
        #[arg(long = "S")]
        s: f64,
        #[arg(long)]
        delta: f64,
        /// Warm-up accuracy to use instead of the formula (required when M = 0).
        #[arg(long)]
        b: Option<f64>,
    },
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config } => {
            let plan = RunConfig::load(&config)?.plan()?;
            let out = runner::run(&plan, workers()?)?;
            runner::write_run(&out, &plan.config.output)?;
            let s = &out.summary;
            eprintln!(
                "{} on {}: median {:?}, mean {:?} over {} replicates",
                s.policy,
                s.instance,
                s.median,
                s.mean,
                s.final_regret.len()
            );
            if let Some(f) = s.failures.first() {
                return Err(CliError::Solver(format!(
                    "{} replicate(s) failed; first: replicate {} round {}: {}",
                    s.failures.len(),
                    f.replicate,
                    f.round,
                    f.message
                )));
            }
            Ok(())
        }
        Command::Estimation { config } => {
            let cfg = EstimationConfig::load(&config)?;
            let out = runner::run_estimation(&cfg, workers()?)?;
            runner::write_estimation(&out, &cfg.output)?;
            if let Some(f) = out.failures.first() {
                return Err(CliError::Solver(format!(
                    "replicate {} round {}: {}",
                    f.replicate, f.round, f.message
                )));
            }
            Ok(())
        }
        Command::Diagnose { suite, seed, delta } => {
            print_json(&report::diagnose(&suite, seed, delta)?)
        }
        Command::Constants {
            family,
            n,
            d,
            s,
            delta,
            b,
        } => print_json(&report::constants(&family, n, d, s, delta, b)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
