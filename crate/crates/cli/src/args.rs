use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fuelqubo::rng::DEFAULT_SEED;
use fuelqubo::PenaltyWeights;

/// Fuel reloading patterns as QUBO/Ising problems.
///
/// Machine-readable output goes to `--out` (or stdout); progress and
/// summaries go to stderr. Relative output and log paths are resolved
/// under `FUELQUBO_RESULTS_DIR` when it is set.
#[derive(Debug, Parser)]
#[command(name = "fuelqubo", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Built-in core: core13, core37, core69, core97, core121, pwr193, core241, plus5, single.
    #[arg(long, global = true)]
    pub core: Option<String>,

    /// Layout JSON file instead of a built-in core.
    #[arg(long, global = true, conflicts_with = "core")]
    pub layout_file: Option<PathBuf>,

    /// Fuel counts `fresh,once,twice`, or `table1` for the reference row.
    #[arg(long, global = true)]
    pub counts: Option<String>,

    /// Reclassify regions with this inner depth.
    #[arg(long, global = true)]
    pub inner_depth: Option<usize>,

    /// Require 90° rotational symmetry.
    #[arg(long, global = true)]
    pub rot_sym: bool,

    /// Require mirror symmetry about both axes.
    #[arg(long, global = true)]
    pub mirror_sym: bool,

    /// Penalty weights λ1..λ5, comma separated.
    #[arg(long, global = true)]
    pub weights: Option<PenaltyWeights>,

    /// Solver: sa, simcim or bruteforce.
    #[arg(long, global = true, default_value = "sa")]
    pub method: String,

    /// SA sweeps per restart.
    #[arg(long, global = true)]
    pub sweeps: Option<usize>,

    /// SimCIM steps per restart.
    #[arg(long, global = true)]
    pub steps: Option<usize>,

    #[arg(long, global = true)]
    pub restarts: Option<usize>,

    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Independent runs per benchmark instance.
    #[arg(long, global = true)]
    pub runs: Option<usize>,

    /// Stop launching restarts after this many milliseconds.
    #[arg(long, global = true)]
    pub budget_ms: Option<u64>,

    /// Worker thread cap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Write machine output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Table1,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Show the core map with region markers and the region tally.
    Layout,

    /// Write the penalty model.
    Encode {
        /// Emit the Ising form instead of the QUBO.
        #[arg(long)]
        ising: bool,
    },

    /// Encode, solve, decode and check.
    Solve {
        /// Also save the decoded pattern as a pattern file.
        #[arg(long)]
        pattern_out: Option<PathBuf>,
    },

    /// Check a pattern file; exits 1 when the pattern is infeasible.
    Check {
        #[arg(long)]
        pattern: PathBuf,
    },

    /// Estimate success probability and time-to-solution.
    Bench {
        /// Run the reference table instead of a single `--core`.
        #[arg(long, value_enum)]
        suite: Option<Suite>,

        #[arg(long, value_delimiter = ',', default_value = "sa")]
        solvers: Vec<String>,

        /// Skip table cores with more cells than this.
        #[arg(long)]
        max_core: Option<usize>,

        /// Append records to this JSONL file.
        #[arg(long)]
        log: Option<PathBuf>,
    },

    /// Map feasibility over (once, twice) counts.
    Sweep {
        /// Once-burnt range `lo:hi` (inclusive) or a single value; defaults to all.
        #[arg(long)]
        once: Option<String>,

        /// Twice-burnt range `lo:hi` (inclusive) or a single value; defaults to all.
        #[arg(long)]
        twice: Option<String>,

        /// Resume log; finished points are skipped.
        #[arg(long)]
        log: Option<PathBuf>,

        /// Settle failures exhaustively when the model is small enough.
        #[arg(long)]
        certify: bool,
    },

    /// Find reload cycles among feasible counts.
    Cycles {
        /// Sweep log to read feasible points from.
        #[arg(long, required_unless_present = "triples", conflicts_with = "triples")]
        log: Option<PathBuf>,

        /// Feasible triples `f,o,t;f,o,t;...`.
        #[arg(long)]
        triples: Option<String>,
    },
}
