use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Second-order upper bounds on the probability of a union of events.
#[derive(Debug, Parser)]
#[command(name = "cutset-bounds", version)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores). Output does
    /// not depend on this value.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Write output here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a matrix for symmetry, diagonal range and Fréchet consistency.
    Validate(InputArgs),
    /// Bounds for one ordering.
    Bound(BoundArgs),
    /// Bounds for every ordering, summarized per level.
    Search(SearchArgs),
    /// Strict-gain conditions for one ordering.
    Check(CheckArgs),
    /// Write a matrix document.
    #[command(subcommand)]
    Generate(GenerateCommand),
    /// Exact union probability of an atom system.
    Oracle(OracleArgs),
    /// Monte Carlo and sweep experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Matrix JSON document.
    #[arg(long, short)]
    input: PathBuf,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[command(flatten)]
    input: InputArgs,
    /// 1-based ordering, comma- or dash-separated (default: identity).
    #[arg(long, conflicts_with = "greedy")]
    ordering: Option<String>,
    /// Use the maximum-overlap greedy ordering.
    #[arg(long)]
    greedy: bool,
    /// Report only this level.
    #[arg(long, conflicts_with = "max_level")]
    level: Option<usize>,
    /// Report levels 1..=max-level (default: n-1).
    #[arg(long)]
    max_level: Option<usize>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    max_level: Option<usize>,
    /// Relative tolerance for counting minimizers and strict improvements.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Largest n accepted (n! orderings are enumerated).
    #[arg(long, default_value_t = cutset_bounds::search::DEFAULT_SEARCH_CAP)]
    cap: usize,
    /// Most minimizing orderings listed per level.
    #[arg(long, default_value_t = cutset_bounds::search::DEFAULT_ARGMIN_CAP)]
    argmin_cap: usize,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    ordering: Option<String>,
    /// Also count orderings satisfying the triplet condition through this
    /// 1-based column.
    #[arg(long)]
    count_column: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum GenerateCommand {
    /// `P_ij = P_i P_j + delta`.
    Delta {
        /// Comma-separated first-order probabilities.
        #[arg(long, value_delimiter = ',', required = true)]
        first_order: Vec<f64>,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
    },
    /// `P_i ~ U[0,1]`, `P_ij = min(P_i, P_j) U_ij`.
    Uniform {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// System JSON document; omit to draw a random system.
    #[arg(long, short, conflicts_with_all = ["n_el", "n"])]
    input: Option<PathBuf>,
    /// Elements of a random system.
    #[arg(long, requires = "n")]
    n_el: Option<usize>,
    /// Cut sets of a random system.
    #[arg(long, requires = "n_el")]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also report the best bound at each level up to this one.
    #[arg(long)]
    max_level: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum ExperimentCommand {
    /// Probability that one line gains under level 2 (three uniform events).
    Ti {
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Probability that the best level-(m+1) bound beats the best level-m bound.
    Improvement {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Improvement probability over several n.
    Sweep {
        #[arg(long, value_delimiter = ',', default_values_t = [4, 5, 6])]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exhaustive search of the delta model for several deltas.
    Delta {
        #[arg(long, value_delimiter = ',', required = true)]
        first_order: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        deltas: Vec<f64>,
        #[arg(long)]
        max_level: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli) {
        Ok(status) => status,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
