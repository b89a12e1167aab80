//! The `dact` command line.
//!
//! Exit codes: 0 on success, 1 when a command fails at run time, 2 for
//! usage errors (bad flags, missing input paths, invalid option values).

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::RunOptions;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub(crate) fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "dact", version, about = "Dialogue-act classification toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print categories, utterances and distinct tokens of a dataset
    Stats {
        dataset: PathBuf,
        #[arg(long, default_value = "speech")]
        tokenizer: crate::corpus::TokenizerMode,
    },
    /// Convert a directory of SwDA utterance files into train/val datasets
    Prepare {
        /// Directory searched recursively for *.utt and *.txt files
        #[arg(long)]
        swda: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Fraction of dialogues held out for validation
        #[arg(long, default_value_t = 0.1)]
        val_fraction: f64,
        /// Split seed
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Train a model and write checkpoint.json and history.csv
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Score a checkpoint on a labeled dataset and write report files
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Probability matrix for prob-lstm (default: next to the checkpoint)
        #[arg(long)]
        prob_matrix: Option<PathBuf>,
        /// Only show classes with at least this support in the confusion outputs
        #[arg(long, default_value_t = 0)]
        min_support: u64,
        /// Only show the k best-supported classes in the confusion outputs
        #[arg(long)]
        top_k: Option<usize>,
        /// Results CSV to merge this model's row into
        #[arg(long)]
        results: Option<PathBuf>,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Print `<tag>\t<text>` for each input utterance
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        prob_matrix: Option<PathBuf>,
        /// One utterance; otherwise lines are read from --input or stdin
        #[arg(long, conflicts_with = "input")]
        text: Option<String>,
        /// Dataset file (required for sentence-vector models)
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Download issue threads and write them as an unlabeled dataset
    Fetch {
        /// owner/repo
        repo: String,
        /// Issue numbers
        #[arg(required = true)]
        issues: Vec<u64>,
        /// Recorded responses to serve instead of the network
        #[arg(long)]
        fixture: Option<PathBuf>,
        #[arg(long, default_value = crate::ingest::DEFAULT_API_BASE)]
        api_base: String,
        #[arg(long, default_value = "out/issues.jsonl")]
        out: PathBuf,
        #[arg(long, default_value_t = crate::ingest::DEFAULT_CONCURRENCY)]
        concurrency: usize,
    },
    /// Write deterministic unit-norm stand-in sentence embeddings
    GenFixtureEmbeddings {
        /// Datasets whose utterance keys need vectors
        #[arg(long = "dataset", required = true)]
        datasets: Vec<PathBuf>,
        #[arg(long, default_value_t = 512)]
        dim: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parse `args` (program name first), run the command and return the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    match commands::dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
