//! The `dialsent` command line: corpus ingestion, training, evaluation,
//! transfer experiments, corpus analysis and gradient checking.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure
//! (divergence, non-finite values or a failed gradient check).

mod cmd;
mod data;
mod rundir;
mod settings;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use rundir::{RunDir, MANIFEST};
pub use settings::resolve_config;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<dialsent_core::Error> for CliError {
    fn from(e: dialsent_core::Error) -> Self {
        Self {
            code: if e.is_numeric() { EXIT_NUMERIC } else { EXIT_DATA },
            message: e.to_string(),
        }
    }
}

pub type CliResult<T = ()> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "dialsent", version, about = "Joint dialog-act and sentiment recognition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a raw corpus into reply trees, linearize it and report statistics.
    Ingest(cmd::ingest::IngestArgs),
    /// Train with learning-rate, restart and epoch selection on a dev set.
    Train(ExperimentArgs),
    /// Score a trained model on a test corpus, or score a predictions file.
    Eval(cmd::eval::EvalArgs),
    /// Run the label-budget transfer experiment for one regime.
    Transfer(ExperimentArgs),
    /// Sentiment transition, change-rate and positional analyses.
    Analyze(cmd::analyze::AnalyzeArgs),
    /// Finite-difference check of every operation and of the full model.
    Gradcheck(cmd::gradcheck::GradcheckArgs),
}

/// Options shared by commands driven by an experiment config. Precedence:
/// flags, then `DIALSENT_<KEY>` environment variables, then the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// `key=value` experiment config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// both-rich, sentiment-poor, dialog-act-poor, both-poor or mono-task.
    #[arg(long)]
    pub regime: Option<String>,
    /// Comma-separated dialog budgets, ascending.
    #[arg(long)]
    pub budgets: Option<String>,
    /// Run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Independent runs trained in parallel.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long = "train-corpus")]
    pub train_corpus: Option<PathBuf>,
    #[arg(long = "dev-corpus")]
    pub dev_corpus: Option<PathBuf>,
    #[arg(long = "test-corpus")]
    pub test_corpus: Option<PathBuf>,
    /// Any other config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors are reported on stderr.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Ingest(a) => cmd::ingest::run(a),
        Command::Train(a) => cmd::train::run(a),
        Command::Eval(a) => cmd::eval::run(a),
        Command::Transfer(a) => cmd::transfer::run(a),
        Command::Analyze(a) => cmd::analyze::run(a),
        Command::Gradcheck(a) => cmd::gradcheck::run(a),
    }
}
