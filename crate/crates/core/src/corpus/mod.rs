//! Tagged-utterance datasets: SwDA transcripts, issue-comment files, the
//! DAMSL tag inventory, tokenization and corpus statistics.

mod dataset;
pub mod swda;
pub mod tagset;
pub mod text;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use dataset::{CorpusStats, Dataset, Utterance};
pub use swda::{parse_swda_file, read_swda_file, records_to_dataset, SwdaConversion, SwdaRecord};
pub use tagset::{normalize_tag, DaTag, TagId, TagRecord, TagSet, NUM_TAGS};
pub use text::{clean_speech_text, tokenize, TokenizerMode};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<CorpusError>,
    },
    #[error("unknown tag {0:?}")]
    UnknownTag(String),
    #[error("continuation marker has no tag of its own")]
    Continuation,
    #[error("tag inventory: {0}")]
    Inventory(String),
    #[error("line {line}: duplicate key ({dialogue_id:?}, {turn_index})")]
    DuplicateKey {
        line: usize,
        dialogue_id: String,
        turn_index: usize,
    },
    #[error("validation fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),
    #[error("need at least 2 dialogues to split, found {0}")]
    TooFewDialogues(usize),
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn in_file(self, path: &Path) -> Self {
        match self {
            e @ (CorpusError::Io { .. } | CorpusError::InFile { .. }) => e,
            e => CorpusError::InFile {
                path: path.to_path_buf(),
                source: Box::new(e),
            },
        }
    }

    /// The underlying error with any file context removed.
    pub fn root(&self) -> &CorpusError {
        match self {
            CorpusError::InFile { source, .. } => source.root(),
            e => e,
        }
    }
}

/// Load every SwDA utterance file under `dir` (recursively, `*.utt` or
/// `*.txt`, sorted by path) into one speech-mode dataset.
pub fn load_swda_dir(dir: &Path, name: &str) -> Result<SwdaConversion, CorpusError> {
    let mut files = Vec::new();
    collect_files(dir, &mut files).map_err(|e| CorpusError::io(dir, e))?;
    files.sort();
    let mut records = Vec::new();
    for f in &files {
        records.extend(read_swda_file(f)?);
    }
    records_to_dataset(name, &records, TagSet::damsl())
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else if matches!(
            path.extension().and_then(|e| e.to_str()),
            Some("utt") | Some("txt")
        ) {
            out.push(path);
        }
    }
    Ok(())
}
