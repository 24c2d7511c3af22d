//! fracfilt: reproducible experiment driver for the fractional filtration
//! equation laboratory.
//!
//! Usage: `fracfilt <subcommand> --config <path> [--out <dir>] [--seed <u64>]`
//! Exit codes: 0 success, 1 validation error, 2 numerical failure,
//! 3 acceptance failure.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use commands::CliError;
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fracfilt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV/JSON artifacts
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for every randomized ingredient of the run
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured datum and dump the trajectory
    Solve(CommonArgs),
    /// Nested-ball minimal-solution construction and monotonicity report
    Minimal(CommonArgs),
    /// Ordered-pair comparison sweep
    Compare(CommonArgs),
    /// Cylinder extension field and its weighted energy
    Extend(CommonArgs),
    /// Dirichlet-to-Neumann flux error table over heights
    DtnCheck(CommonArgs),
    /// Trace energy identity and the local energy estimate
    EnergyCheck(CommonArgs),
    /// Cut-off scaling tables (fractional Laplacian, T_p, Q-form L1)
    CutoffScan(CommonArgs),
    /// Backward solve, energy identity, and uniqueness witness
    Duality(CommonArgs),
    /// Run the full acceptance suite
    Selftest(CommonArgs),
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let path = args.config.as_ref().ok_or_else(|| {
        CliError::Validation("--config <path> is required for this subcommand".into())
    })?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(a) => commands::run_solve(&load_config(&a)?, &a.out, a.seed),
        Command::Minimal(a) => commands::run_minimal(&load_config(&a)?, &a.out, a.seed),
        Command::Compare(a) => commands::run_compare(&load_config(&a)?, &a.out, a.seed),
        Command::Extend(a) => commands::run_extend(&load_config(&a)?, &a.out, a.seed),
        Command::DtnCheck(a) => commands::run_dtn_check(&load_config(&a)?, &a.out, a.seed),
        Command::EnergyCheck(a) => commands::run_energy_check(&load_config(&a)?, &a.out, a.seed),
        Command::CutoffScan(a) => commands::run_cutoff_scan(&load_config(&a)?, &a.out, a.seed),
        Command::Duality(a) => commands::run_duality(&load_config(&a)?, &a.out, a.seed),
        Command::Selftest(a) => commands::run_selftest(&a.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
