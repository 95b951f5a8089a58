use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
mod output;

#[derive(Debug, Parser)]
#[command(name = "qentropy", version, about = "Generalized maximum-entropy inference toolkit")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Seed for every random draw; drawn from the OS and recorded when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; a `<out>.manifest.json` is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entropies, divergences and diversity numbers of a distribution.
    Entropy(commands::EntropyArgs),
    /// Classical maximum-entropy solve under moment constraints.
    Maxent(commands::MaxentArgs),
    /// Counts, pmfs and samples of the correlated bit chain.
    Chain(commands::ChainArgs),
    /// Maximum-likelihood fit of (q, psi) to observed chain sums.
    Fit(commands::FitArgs),
    /// Exponential versus power-law growth of a phase-space series.
    Scaling(commands::ScalingArgs),
}

/// Exit status for each library error class.
fn exit_code(err: &anyhow::Error) -> u8 {
    use qentropy::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::NonConvergence { .. }) => 3,
        Some(E::InfeasibleTargets { .. }) => 4,
        Some(E::TooLarge { .. }) => 5,
        Some(E::AllPointsFailed) | Some(E::NoInteriorMaximum { .. }) => 6,
        Some(E::InsufficientPoints(_)) => 7,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Entropy(a) => commands::entropy(&cli.common, a),
        Command::Maxent(a) => commands::maxent(&cli.common, a),
        Command::Chain(a) => commands::chain(&cli.common, a),
        Command::Fit(a) => commands::fit(&cli.common, a),
        Command::Scaling(a) => commands::scaling(&cli.common, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
