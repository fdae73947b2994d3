//! Command-line driver: solve single abstract-optimization problems, run
//! constraints-consensus simulations, Monte Carlo sweeps and the two
//! application scenarios, all seeded and file-driven.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 runtime invariant
//! violation, 3 internal error.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ccons", version, about = "Distributed abstract optimization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem file with the randomized solver.
    Solve {
        /// Problem description (JSON).
        #[arg(long)]
        config: std::path::PathBuf,
        /// RNG seed for the randomized solver.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for solution.json.
        #[arg(long, default_value = "out")]
        out: std::path::PathBuf,
        /// Cross-check the result against the brute-force oracle.
        #[arg(long)]
        oracle: bool,
    },
    /// Run one constraints-consensus simulation.
    Consensus {
        #[arg(long)]
        config: std::path::PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: std::path::PathBuf,
    },
    /// Run a completion-time sweep and export plot data.
    Montecarlo {
        #[arg(long)]
        config: std::path::PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: std::path::PathBuf,
        /// Worker threads for the sweep.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Run a target-localization scenario.
    Localize {
        #[arg(long)]
        config: std::path::PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: std::path::PathBuf,
    },
    /// Run a formation-control scenario.
    Formation {
        #[arg(long)]
        config: std::path::PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: std::path::PathBuf,
    },
    /// Run the built-in self-test suites (axioms, persistency, oracles).
    Check {
        #[arg(long, default_value_t = 12345)]
        seed: u64,
        /// Swap in the cost-only LP value order to demonstrate that the
        /// locality suite catches it.
        #[arg(long, hide = true)]
        broken_lex_order: bool,
    },
}

/// Error carrying the intended process exit code.
pub enum AppError {
    Usage(String),
    Invariant(String),
    Internal(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Invariant(_) => 2,
            AppError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Usage(m) | AppError::Invariant(m) | AppError::Internal(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version requests are successes, anything else is usage
            let benign = matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = err.print();
            return if benign { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };

    let result = match cli.command {
        Command::Solve { config, seed, out, oracle } => {
            commands::cmd_solve(&config, seed, &out, oracle)
        }
        Command::Consensus { config, seed, out } => commands::cmd_consensus(&config, seed, &out),
        Command::Montecarlo { config, seed, out, jobs } => {
            commands::cmd_montecarlo(&config, seed, &out, jobs)
        }
        Command::Localize { config, seed, out } => commands::cmd_localize(&config, seed, &out),
        Command::Formation { config, seed, out } => commands::cmd_formation(&config, seed, &out),
        Command::Check { seed, broken_lex_order } => commands::cmd_check(seed, broken_lex_order),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}
