//! Front end for `urnsim`: config loading, run orchestration and output.

// NaN-rejecting `!(x > 0.0)` checks and index loops over several arrays
// are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::run;
pub use config::RunConfig;
pub use error::{CliError, Result};
pub use output::Summary;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "URNSIM_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "urnsim", version, about = "Interacting Pólya urn opinion dynamics")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,

    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Base seed; overrides the config. Drawn from the clock when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Monte Carlo runs; overrides the config.
    #[arg(long, global = true)]
    pub runs: Option<u64>,

    /// Simulate on disconnected or bipartite graphs.
    #[arg(long, global = true)]
    pub allow_invalid: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Run the stochastic process (or its expected dynamics) and write
    /// trajectories.
    Simulate {
        /// Integrate the deterministic expected dynamics instead.
        #[arg(long)]
        expected: bool,
    },
    /// Decide consensus from the boundary Jacobians.
    Classify,
    /// List boundary and interior equilibria with stability labels.
    Equilibria,
    /// Estimate biases and beliefs from a trajectory file.
    Infer {
        #[arg(long)]
        trajectory: PathBuf,
        /// Number of trailing records to average.
        #[arg(long)]
        window: Option<usize>,
    },
    /// Sample the Lyapunov descent condition.
    LyapunovCheck {
        #[arg(long)]
        samples: Option<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Classify => "classify",
            Command::Equilibria => "equilibria",
            Command::Infer { .. } => "infer",
            Command::LyapunovCheck { .. } => "lyapunov-check",
        }
    }
}
