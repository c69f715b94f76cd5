//! `hsdcov`: distance correlation tests, closed-form theory and Monte-Carlo
//! experiments from the command line.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CltArgs, EigenArgs, PowerArgs, TestArgs, TheoryArgs};

#[derive(Parser)]
#[command(name = "hsdcov", version, about = "High-dimensional distance covariance toolkit")]
struct Cli {
    /// JSON file with option values; flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distance correlation test of independence for two CSV files.
    Test(TestArgs),
    /// Simulate the standardized statistic and compare its quantiles with N(0, 1).
    Clt(CltArgs),
    /// Empirical and theoretical power over a grid of kernels and bandwidths.
    Power(PowerArgs),
    /// Closed-form mean, variance and power for a covariance.
    Theory(TheoryArgs),
    /// Check the eigenvalue identity of the minimax prior construction.
    Eigencheck(EigenArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = cli.config.as_deref();
    let result = match cli.command {
        Command::Test(a) => commands::test(a, cfg),
        Command::Clt(a) => commands::clt(a, cfg),
        Command::Power(a) => commands::power(a, cfg),
        Command::Theory(a) => commands::theory(a, cfg),
        Command::Eigencheck(a) => commands::eigencheck(a, cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
