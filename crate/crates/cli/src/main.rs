//! `kawa`: landscape, capacity, random-walk and simulation runs from one config.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] kawa_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use kawa_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Refused(_) | CliError::Io(_) => 2,
            CliError::Core(E::InvalidParams(_) | E::InvalidGeometry(_) | E::TooLarge { .. }) => 2,
            CliError::Check(_) | CliError::Core(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "kawa", version, about = "Two-type Kawasaki lattice gas: landscape, capacities and nucleation times")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(clap::Args, Debug, Default)]
pub struct Common {
    /// Experiment config, TOML with dotted keys or JSON.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Bundled config: preset-4x3 or preset-4x4.
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    /// Output directory; overrides output.directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the hardware parallelism.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Comma-separated β values; overrides run.betaGrid.
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    pub beta: Option<Vec<f64>>,
    /// Overrides run.seeds.
    #[arg(long = "seed-base", global = true, value_name = "N")]
    pub seed_base: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Hypothesis checks; exit 1 unless all pass and every failure is confirmed.
    Verify,
    /// Ground states, communication heights, wells and the gate.
    Landscape,
    /// Exact capacities, Θ and mean hitting times over the β grid.
    Capacity,
    /// Random-walk bounds on Θ and the escape probability.
    Srw,
    /// Transition runs from □ to ⊞ and their statistics.
    Simulate,
    /// Merge the outputs in the directory into report.json.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Landscape => "landscape",
            Command::Capacity => "capacity",
            Command::Srw => "srw",
            Command::Simulate => "simulate",
            Command::Report => "report",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command, &cli.common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kawa {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
