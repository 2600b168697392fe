//! Command-line surface: prune, sample, evaluate, report, sweep, synth.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage/spec error. All
//! randomness derives from one effective seed, which every command prints.
//! Outputs land in a content-addressed subdirectory of `--out` so re-runs
//! with different inputs never silently overwrite each other.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "llm4perf", version, about = "LLM-guided configuration sampling benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter performance-insensitive options out of a space via an LLM.
    Prune(CommonArgs),
    /// Run one sampler against a dataset and write the outcome file.
    Sample(CommonArgs),
    /// Run the full evaluation protocol and write report files.
    Evaluate(CommonArgs),
    /// Re-render report files from a stored report.json.
    Report(CommonArgs),
    /// Evaluate across a pipeline hyperparameter axis.
    Sweep(SweepArgs),
    /// Generate a synthetic dataset (space JSON + measurement CSV).
    Synth(SynthArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Command specification file (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Output directory; results land in a content-addressed subdirectory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed from the spec file.
    #[arg(long)]
    seed: Option<u64>,
    /// Mock script for LLM-backed stages; overrides the spec file.
    #[arg(long)]
    mock: Option<PathBuf>,
    #[arg(long, short, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SweepAxis {
    NCandidates,
    NGenerators,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    axis: SweepAxis,
    /// First axis value (inclusive, must be positive).
    #[arg(long)]
    from: usize,
    /// Last axis value (inclusive).
    #[arg(long)]
    to: usize,
}

#[derive(Args)]
struct SynthArgs {
    /// Optional landscape specification file; flags below are used otherwise.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of options in the generated space.
    #[arg(long, default_value_t = 6)]
    options: usize,
    /// Values per option.
    #[arg(long, default_value_t = 4)]
    values: usize,
    /// How many of the options are performance-sensitive.
    #[arg(long, default_value_t = 3)]
    sensitive: usize,
    /// Pairwise interaction terms among the sensitive options.
    #[arg(long, default_value_t = 1)]
    interactions: usize,
    /// Measurement-noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, short, action = clap::ArgAction::Count)]
    verbose: u8,
}

/// Command failure with its process exit code.
pub(crate) struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Failure {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<llm4perf::Error> for Failure {
    fn from(err: llm4perf::Error) -> Failure {
        use llm4perf::Error as E;
        let code = match err {
            E::Precondition(_)
            | E::BudgetTooLarge { .. }
            | E::CardinalityOverLimit { .. }
            | E::DuplicateOrMissingName(_)
            | E::UnknownOption(_)
            | E::InadmissibleValue { .. }
            | E::InvalidOption(..)
            | E::InvalidSpace(_)
            | E::HeaderMismatch(_)
            | E::IncompleteDataset(_)
            | E::DuplicateRow(_)
            | E::Json(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Prune(args) => {
            init_logging(args.verbose);
            commands::prune(&args)
        }
        Command::Sample(args) => {
            init_logging(args.verbose);
            commands::sample(&args)
        }
        Command::Evaluate(args) => {
            init_logging(args.verbose);
            commands::evaluate(&args)
        }
        Command::Report(args) => {
            init_logging(args.verbose);
            commands::report(&args)
        }
        Command::Sweep(args) => {
            init_logging(args.common.verbose);
            commands::sweep(&args)
        }
        Command::Synth(args) => {
            init_logging(args.verbose);
            commands::synth(&args)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
