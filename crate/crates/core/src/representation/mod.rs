//! Numeric views of utterances: word-to-tag probability rows, pretrained
//! word vectors and precomputed sentence vectors.

pub mod prob;
pub mod sentences;
pub mod words;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::{Dataset, TagId};

pub use prob::{ProbMatrix, DEFAULT_MIN_FREQ};
pub use sentences::{fixture_vector, SentenceEmbeddingStore, SentenceKey};
pub use words::WordEmbeddingTable;

/// Default sequence length for token-level encoders.
pub const DEFAULT_MAX_LEN: usize = 128;

#[derive(Debug, Error)]
pub enum RepresentationError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("{0}")]
    Format(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("utterance {0:?} has no tag")]
    Unlabeled(SentenceKey),
    #[error("{0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("duplicate key {0:?}")]
    DuplicateKey(SentenceKey),
    #[error("no sentence vector for {0:?}")]
    MissingVector(SentenceKey),
}

impl RepresentationError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        RepresentationError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Fixed-length model input: one vector per step plus a real/padding mask.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSequence {
    pub vectors: Vec<Vec<f64>>,
    /// `true` for real steps, `false` for padding.
    pub mask: Vec<bool>,
    pub label: Option<TagId>,
}

impl EncodedSequence {
    /// Take at most `max_len` steps and pad the rest with zero vectors.
    pub fn from_steps(
        steps: impl Iterator<Item = Vec<f64>>,
        width: usize,
        max_len: usize,
        label: Option<TagId>,
    ) -> Self {
        let mut vectors: Vec<Vec<f64>> = steps.take(max_len).collect();
        let mut mask = vec![true; vectors.len()];
        while vectors.len() < max_len {
            vectors.push(vec![0.0; width]);
            mask.push(false);
        }
        EncodedSequence {
            vectors,
            mask,
            label,
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn real_steps(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn width(&self) -> Option<usize> {
        self.vectors.first().map(Vec::len)
    }

    /// Append `extra` padding steps.
    pub fn padded(&self, extra: usize) -> Self {
        let width = self.width().unwrap_or(0);
        let mut out = self.clone();
        for _ in 0..extra {
            out.vectors.push(vec![0.0; width]);
            out.mask.push(false);
        }
        out
    }
}

/// Everything needed to turn a dataset into model inputs for one
/// architecture family.
#[derive(Debug, Clone)]
pub enum Encoder {
    Prob { matrix: ProbMatrix, max_len: usize },
    Words { table: WordEmbeddingTable, max_len: usize },
    Sentence { store: SentenceEmbeddingStore },
    SentenceContext { store: SentenceEmbeddingStore, window: usize },
}

impl Encoder {
    /// Width of each encoded step.
    pub fn input_dim(&self) -> usize {
        match self {
            Encoder::Prob { matrix, .. } => matrix.n_tags(),
            Encoder::Words { table, .. } => table.dim(),
            Encoder::Sentence { store } | Encoder::SentenceContext { store, .. } => store.dim(),
        }
    }

    /// Encode every utterance in dataset order.
    pub fn encode_dataset(&self, dataset: &Dataset) -> Result<Vec<EncodedSequence>, RepresentationError> {
        match self {
            Encoder::Prob { matrix, max_len } => Ok(dataset
                .utterances()
                .iter()
                .map(|u| matrix.encode(u, *max_len))
                .collect()),
            Encoder::Words { table, max_len } => Ok(dataset
                .utterances()
                .iter()
                .map(|u| table.encode(u, *max_len))
                .collect()),
            Encoder::Sentence { store } => {
                dataset.utterances().iter().map(|u| store.encode(u)).collect()
            }
            Encoder::SentenceContext { store, window } => {
                let mut out = Vec::with_capacity(dataset.len());
                for dialogue in dataset.dialogues() {
                    for pos in 0..dialogue.len() {
                        out.push(store.encode_context(dialogue, pos, *window)?);
                    }
                }
                Ok(out)
            }
        }
    }
}
