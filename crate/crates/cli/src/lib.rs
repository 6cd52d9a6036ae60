//! Command surface for spreach: configuration-driven solves, bounds,
//! verification reports, simulations and the two figure reproductions.

// Negated comparisons double as NaN rejection in input validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::execute;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SPREACH_OUT";

pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VERDICT: i32 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: msg.into(),
        }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: msg.into(),
        }
    }

    pub fn verdict(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_VERDICT,
            message: msg.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<spreach::Error> for CliError {
    fn from(e: spreach::Error) -> Self {
        use spreach::Error as E;
        let code = match &e {
            E::Numerical(_) | E::Divergence { .. } | E::Progress { .. } => EXIT_NUMERICAL,
            E::Io(_) | E::Format(_) => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "spreach",
    version,
    about = "Reachability for singularly perturbed differential games"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated list of eps values.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub eta: Option<f64>,
    /// Horizon start time (<= 0).
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    /// Nodes per axis for every grid.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (defaults to the config, then $SPREACH_OUT, then
    /// ./spreach-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the standing assumptions and write a report.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Exit with status 4 unless every check passes.
        #[arg(long)]
        expect_pass: bool,
    },
    /// Solve the reduced value function.
    Solve(Common),
    /// Solve the full value function over (z, y) for each eps.
    FullSolve(Common),
    /// Reachable-set bounds and containment checks.
    Bounds {
        #[command(flatten)]
        common: Common,
        /// Exit with status 4 if any containment check fails.
        #[arg(long)]
        expect_pass: bool,
    },
    /// Feedback simulations against random disturbances.
    Simulate(Common),
    /// Genetic-circuit containment experiment at eps = 1 and 0.01.
    ReproduceFig2(Common),
    /// Metabolic-network feedback experiment.
    ReproduceFig3(Common),
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
