//! `spn`: command-line front end for the spn-core library.
//!
//! Circuit-producing subcommands print circuit JSON (or write it with `-o`);
//! analysis subcommands print a report embedding the command, its configuration
//! and the library version. Exit codes: 0 success, 1 failed assertion, 2 usage or
//! input error.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::Format;

#[derive(Parser, Debug)]
#[command(name = "spn", version, about = "Sum-product networks as monotone arithmetic circuits")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

/// Circuit input: a path, or stdin when omitted or `-`.
#[derive(Args, Debug, Clone)]
struct CircuitIn {
    circuit: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decomposability, completeness, degeneracy and strong validity.
    Check {
        #[command(flatten)]
        input: CircuitIn,
        /// Also expand the output polynomial and cross-check set-multilinearity.
        #[arg(long)]
        audit: bool,
    },
    /// Evaluate at one point.
    Eval {
        #[command(flatten)]
        input: CircuitIn,
        /// Domain values in variable order, e.g. `1,0,1/2`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<String>,
    },
    /// Exact marginal for a query file `{"integrate": {var: [values]}, "fixed": {var: value}}`.
    Marginalize {
        #[command(flatten)]
        input: CircuitIn,
        #[arg(long)]
        query: PathBuf,
        /// Evaluate even if the circuit is not decomposable and complete.
        #[arg(long)]
        force: bool,
    },
    /// Partition function `Z`.
    Partition {
        #[command(flatten)]
        input: CircuitIn,
    },
    /// Weight-normalize a D&C circuit.
    Normalize {
        #[command(flatten)]
        input: CircuitIn,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Draw samples; prints one assignment per line as CSV.
    Sample {
        #[command(flatten)]
        input: CircuitIn,
        #[arg(short = 'n', long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Compile a state machine document to a D&C circuit.
    Compile {
        #[arg(value_enum)]
        kind: MachineKind,
        machine: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Emit a built-in circuit.
    Builtin {
        #[arg(value_enum)]
        which: Builtin,
        #[arg(long)]
        n: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exact rank of the communication matrix over a variable partition.
    Rank {
        #[command(flatten)]
        input: CircuitIn,
        /// `A=i,j,...` (0-based variable ids) or `first-half`.
        #[arg(long, default_value = "first-half")]
        partition: String,
    },
    /// Balanced decomposition into at most s² products.
    Decompose {
        #[command(flatten)]
        input: CircuitIn,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Minimum second-layer width of any depth-3 D&C circuit computing the same function.
    #[command(name = "depth3-report")]
    Depth3Report {
        #[command(flatten)]
        input: CircuitIn,
        #[arg(long, default_value = "first-half")]
        partition: String,
    },
    /// Reduce a DIMACS CNF to an extended circuit that is valid iff the formula is unsatisfiable.
    Cnf2spn {
        dimacs: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Spanning trees of the complete graph.
    Sptree {
        #[command(subcommand)]
        command: SptreeCommand,
    },
}

#[derive(Subcommand, Debug)]
enum SptreeCommand {
    /// Count spanning trees consistent with forced edges (0-based edge labels).
    Count {
        #[arg(long)]
        m: usize,
        #[arg(long, value_delimiter = ',')]
        present: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        absent: Vec<usize>,
    },
    /// Uniform spanning trees by the random walk sampler.
    Sample {
        #[arg(long)]
        m: usize,
        #[arg(short = 'n', long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Classify triangles of a red/blue coloring (a file, or a random balanced one from `--seed`).
    Triangles {
        #[arg(long)]
        m: usize,
        #[arg(long, conflicts_with = "seed")]
        coloring: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fraction of sampled trees obeying the constraints derived from a coloring.
    #[command(name = "fraction-experiment")]
    FractionExperiment {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Coloring file; a random balanced coloring from the seed when omitted.
        #[arg(long)]
        coloring: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = StrategyArg::NotBoth)]
        strategy: StrategyArg,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MachineKind {
    Fpssm,
    Fplm,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Builtin {
    Parity,
    Majority,
    CountOnes,
    Equal,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum StrategyArg {
    NotBoth,
    NotC,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spn: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
