//! `acluster`: generate benchmark data, run clustering experiments and
//! compare their entropy series.

mod compare;
mod generate;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub const OUT_DIR_ENV: &str = "ACLUSTER_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "acluster-out";

#[derive(Parser, Debug)]
#[command(
    name = "acluster",
    version,
    about = "Stigmergic ant clustering on a toroidal grid"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic dataset and a manifest describing how it was made.
    Generate(generate::GenerateArgs),
    /// Run one experiment and write entropy, snapshots, clusters and a manifest.
    Run(Box<run::RunArgs>),
    /// Merge entropy series and rank runs by final entropy.
    Compare(compare::CompareArgs),
}

/// Failure carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(acluster::Error),
}

impl From<acluster::Error> for CliError {
    fn from(e: acluster::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Core(acluster::Error::Io {
            path: path.into(),
            source,
        })
    }

    fn exit_code(&self) -> u8 {
        use acluster::Error::*;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                Io { .. } | Format { .. } | Parse { .. } | EmptyDataset | Dimension { .. } | Json(_) => 3,
                Config(_) | Capacity { .. } | Alignment(_) | UndefinedLabel(_) => 4,
                Invariant(_) | Misuse(_) => 5,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => generate::execute(args),
        Command::Run(args) => run::execute(*args),
        Command::Compare(args) => compare::execute(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("acluster: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
