//! Command-line driver: config ingestion, subcommand dispatch, sweeps and
//! report/CSV emission.
//!
//! Exit codes: 0 success, 1 config or parse error, 2 numerical
//! non-convergence (including a failed trichotomy verification), 3
//! coefficient hypothesis violation, 4 INDETERMINATE regime under `--strict`.

pub mod commands;
pub mod config;
pub mod output;
pub mod sweep;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;
use vectorhost::Error as CoreError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("coefficient hypothesis violated:\n{0}")]
    Hypothesis(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("regime is INDETERMINATE")]
    Indeterminate,
    #[error("trichotomy verification failed: {0}")]
    VerifyFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) | CliError::VerifyFailed(_) => 2,
            CliError::Hypothesis(_) => 3,
            CliError::Indeterminate => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> CliError {
        match e {
            CoreError::Domain(_)
            | CoreError::Parse(_)
            | CoreError::Eval(_)
            | CoreError::Input(_)
            | CoreError::EpsilonTooLarge { .. } => CliError::Config(e.to_string()),
            CoreError::Coefficient { .. } | CoreError::NotCooperative { .. } => CliError::Hypothesis(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "vectorhost", version, about = "Seasonal vector-host reaction-diffusion solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// INI-style configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if absent.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// `section.key=value`; applied after the file, repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Seed for randomized initial data.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Exit with code 4 when the regime is INDETERMINATE.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Do not echo the report on stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the coefficient hypothesis on the mesh/time lattice.
    Validate,
    /// Principal eigenvalues zeta, gamma, lambda(V) and optionally lambda(V; eps).
    Eigen,
    /// Logistic orbit V, host orbit, and the endemic pair.
    Periodic,
    /// Integrate the full model and write the trajectory.
    Simulate,
    /// Regime classification.
    Classify,
    /// Classification plus convergence and sandwich checks along a trajectory.
    Verify,
    /// Classification over the [sweep] value list.
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Eigen => "eigen",
            Command::Periodic => "periodic",
            Command::Simulate => "simulate",
            Command::Classify => "classify",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(&cli) {
        Ok(outcome) => {
            if !cli.quiet {
                print!("{}", outcome.report.render());
            }
            match outcome.error {
                Some(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
                None => 0,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
