//! Run options shared by the config file and the command line.
//!
//! The config file is TOML with flat keys named like the long flags, with
//! `_` in place of `-`:
//!
//! ```toml
//! arch = "use-lstm"
//! train = "data/train.jsonl"
//! val = "data/val.jsonl"
//! test = "data/github.jsonl"
//! embeddings = "glove.6B.100d.txt"        # glove-lstm
//! sentence_embeddings = "use.jsonl"       # use, use-lstm, bert-head
//! out_dir = "runs/use-lstm"
//! tokenizer = "speech"                    # or "github"
//! hidden_dim = 128
//! max_len = 128
//! context_window = 3
//! conv_width = 3
//! dense_dims = [256, 128, 42]
//! min_freq = 5
//! learning_rate = 0.001
//! batch_size = 64
//! epochs = 10
//! adam_beta1 = 0.9
//! adam_beta2 = 0.999
//! adam_eps = 1e-8
//! seed = 42            # parameter initialization
//! shuffle_seed = 42    # minibatch order
//! ```
//!
//! Relative paths in the file resolve against the file's directory. Flags
//! given on the command line take precedence over file values.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use super::CliError;
use crate::corpus::TokenizerMode;
use crate::model::{ArchitectureKind, ModelConfig, TrainConfig};
use crate::representation::{DEFAULT_MAX_LEN, DEFAULT_MIN_FREQ};

#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    /// Architecture: prob-lstm, glove-lstm, use, use-lstm or bert-head
    #[arg(long)]
    pub arch: Option<ArchitectureKind>,
    /// Training dataset (JSON Lines)
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Validation dataset
    #[arg(long)]
    pub val: Option<PathBuf>,
    /// Test dataset
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Word-vector text file (glove-lstm)
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Sentence-embedding file (use, use-lstm, bert-head)
    #[arg(long)]
    pub sentence_embeddings: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Tokenizer for loaded datasets: speech or github
    #[arg(long)]
    pub tokenizer: Option<TokenizerMode>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub context_window: Option<usize>,
    #[arg(long)]
    pub conv_width: Option<usize>,
    /// Comma-separated widths of the three `use` dense layers
    #[arg(long, value_delimiter = ',')]
    pub dense_dims: Option<Vec<usize>>,
    /// Minimum token count for a probability-matrix row
    #[arg(long)]
    pub min_freq: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub adam_beta1: Option<f64>,
    #[arg(long)]
    pub adam_beta2: Option<f64>,
    #[arg(long)]
    pub adam_eps: Option<f64>,
    /// Parameter-initialization seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Minibatch-order seed
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
}

macro_rules! overlay {
    ($base:ident, $over:ident; $($f:ident),*) => {
        RunOptions { $($f: $over.$f.or($base.$f)),* }
    };
}

impl RunOptions {
    /// Values from `over` where present, else from `self`.
    pub fn overlay(self, over: RunOptions) -> RunOptions {
        let base = self;
        overlay!(base, over; arch, train, val, test, embeddings, sentence_embeddings, out_dir,
            tokenizer, hidden_dim, max_len, context_window, conv_width, dense_dims, min_freq,
            learning_rate, batch_size, epochs, adam_beta1, adam_beta2, adam_eps, seed, shuffle_seed)
    }

    pub fn from_toml(text: &str) -> Result<RunOptions, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    /// Read a config file, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<RunOptions, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let mut opts = RunOptions::from_toml(&text)?;
        let dir = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut opts.train,
            &mut opts.val,
            &mut opts.test,
            &mut opts.embeddings,
            &mut opts.sentence_embeddings,
            &mut opts.out_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(opts)
    }

    /// Merge an optional config file under the command-line values.
    pub fn resolve(config: Option<&Path>, flags: RunOptions) -> Result<RunOptions, CliError> {
        match config {
            Some(path) => Ok(RunOptions::load(path)?.overlay(flags)),
            None => Ok(flags),
        }
    }

    pub fn tokenizer_mode(&self) -> TokenizerMode {
        self.tokenizer.unwrap_or_default()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn train_config(&self) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            epochs: self.epochs.unwrap_or(d.epochs),
            adam_beta1: self.adam_beta1.unwrap_or(d.adam_beta1),
            adam_beta2: self.adam_beta2.unwrap_or(d.adam_beta2),
            adam_eps: self.adam_eps.unwrap_or(d.adam_eps),
            seed: self.shuffle_seed.unwrap_or(d.seed),
        }
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq.unwrap_or(DEFAULT_MIN_FREQ)
    }

    /// Model configuration for `kind` with the given input width.
    pub fn model_config(&self, kind: ArchitectureKind, input_dim: usize) -> ModelConfig {
        let d = ModelConfig::new(kind, input_dim);
        ModelConfig {
            hidden_dim: self.hidden_dim.unwrap_or(d.hidden_dim),
            max_len: self.max_len.unwrap_or(DEFAULT_MAX_LEN),
            context_window: self.context_window.unwrap_or(d.context_window),
            conv_width: self.conv_width.unwrap_or(d.conv_width),
            dense_dims: self.dense_dims.clone().unwrap_or(d.dense_dims),
            seed: self.seed.unwrap_or(d.seed),
            ..d
        }
    }
}
