//! `bundleduel`: analyze value distributions, solve pricing games, sweep
//! grand-bundle prices and run the randomized property suites.
//!
//! Exit codes: 0 success, 2 a check failed, 3 bad input, 4 work budget exceeded.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use bundleduel_core::Error;
use clap::{Parser, Subcommand};

use commands::{Run, Status};

const EXIT_CHECK: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_BUDGET: u8 = 4;

/// Environment variable that overrides the output directory of the config.
const OUT_ENV: &str = "BUNDLEDUEL_OUT";

#[derive(Parser)]
#[command(name = "bundleduel", version, about = "Bundle pricing against single-item competitors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for learning dynamics or property suites.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: BUNDLEDUEL_OUT, then the config, then `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Per-item and instance-level constants of value distributions.
    Analyze {
        /// Distribution files; override the config instance.
        files: Vec<PathBuf>,
    },
    /// Search for equilibria of the configured menu and certify them.
    Solve,
    /// Solve the grand-bundle game over a list of prices.
    Sweep,
    /// Run a randomized property suite.
    Proptest {
        /// buyer, monotone, eq3, supremum, lemmas, berry_esseen or thm3.
        suite: Option<String>,
        #[arg(long)]
        trials: Option<u32>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::NonThresholdBehavior { .. } => EXIT_CHECK,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let loaded = match config::load(cli.config.as_deref()) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let result = match &cli.command {
        Command::Analyze { files } => commands::analyze(&loaded, files),
        Command::Solve => commands::solve_cmd(&loaded, cli.seed),
        Command::Sweep => commands::sweep(&loaded, cli.seed),
        Command::Proptest { suite, trials } => commands::proptest(&loaded, suite.as_deref(), *trials, cli.seed),
    };
    let Run { outputs, status, summary } = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let dir = cli
        .out
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .or_else(|| loaded.config.output.as_ref().map(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = outputs.write_to(&dir) {
        eprintln!("error: cannot write to {}: {e}", dir.display());
        return ExitCode::from(EXIT_INPUT);
    }
    for line in &summary {
        println!("{line}");
    }
    println!("wrote {} files to {}", outputs.len(), dir.display());
    match status {
        Status::Ok => ExitCode::SUCCESS,
        Status::CheckFailed => ExitCode::from(EXIT_CHECK),
        Status::BudgetExceeded => ExitCode::from(EXIT_BUDGET),
    }
}
