//! Command-line front-end for `cbp-core`: simulations, convergence studies,
//! diffusion sampling and diagnostics, with JSON/CSV/text outputs and a
//! manifest recording the seed and parameters of every run.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;

pub use config::ExperimentConfig;

/// Exit status when every enabled check passed.
pub const EXIT_PASS: i32 = 0;
/// Exit status when a run completed but at least one check failed.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit status for usage and validation errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for I/O and simulation failures.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] cbp_core::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Validation(_) => EXIT_USAGE,
            CliError::Core(cbp_core::Error::InvalidParameter { .. } | cbp_core::Error::Contract { .. }) => EXIT_USAGE,
            CliError::Core(_) | CliError::Io(_) => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cbp", version, about = "Controlled branching processes and their diffusion limit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// JSON config file with flat keys; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Validate and print the plan without running anything.
    #[arg(long, global = true)]
    pub dry_run: bool,

    #[command(flatten)]
    pub experiment: ExperimentConfig,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate CBP trajectories and write one CSV per path.
    Simulate(RunArgs),
    /// Marginal convergence study of W_n(t) towards the diffusion.
    Converge(RunArgs),
    /// Sample the limiting diffusion (exact marginals and/or an Euler–Maruyama path).
    Diffusion(RunArgs),
    /// Moment, conditional-moment, centred-sum and Lindeberg diagnostics.
    Diagnose(RunArgs),
    /// Calibrate the KS threshold of the default convergence study.
    Calibrate(RunArgs),
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let command_line: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match commands::dispatch(cli.command, command_line) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
