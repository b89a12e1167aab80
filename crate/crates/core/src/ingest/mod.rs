//! Collect GitHub issue threads and turn them into unlabeled datasets.

pub mod github;
pub mod segment;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::{CorpusError, Dataset, TokenizerMode, Utterance};

pub use github::{
    Client, FixtureTransport, HttpResponse, LiveTransport, RetryPolicy, Transport, DEFAULT_API_BASE,
    DEFAULT_CONCURRENCY, TOKEN_ENV_VAR,
};
pub use segment::segment_comment;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("authentication failed for {url}")]
    Auth { url: String },
    #[error("not found: {url}")]
    NotFound { url: String },
    #[error("rate limit still exceeded after {attempts} attempts: {url}")]
    RateLimited { url: String, attempts: u32 },
    #[error("HTTP {status} from {url}")]
    Http { url: String, status: u16 },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Parse(String),
    #[error("invalid issue reference {0:?} (expected owner/repo#number)")]
    InvalidRef(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IssueRef {
    pub owner: String,
    pub repo: String,
    pub number: u64,
}

impl IssueRef {
    pub fn new(owner: impl Into<String>, repo: impl Into<String>, number: u64) -> Result<Self, IngestError> {
        let (owner, repo) = (owner.into(), repo.into());
        let ok = |s: &str| !s.is_empty() && !s.contains(['/', '#']) && !s.contains(char::is_whitespace);
        if !ok(&owner) || !ok(&repo) || number == 0 {
            return Err(IngestError::InvalidRef(format!("{owner}/{repo}#{number}")));
        }
        Ok(IssueRef { owner, repo, number })
    }

    /// Dataset dialogue id, `owner/repo#number`.
    pub fn dialogue_id(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for IssueRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}#{}", self.owner, self.repo, self.number)
    }
}

impl FromStr for IssueRef {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IngestError::InvalidRef(s.to_string());
        let (slug, number) = s.split_once('#').ok_or_else(bad)?;
        let (owner, repo) = slug.split_once('/').ok_or_else(bad)?;
        let number = number.parse().map_err(|_| bad())?;
        IssueRef::new(owner, repo, number).map_err(|_| bad())
    }
}

/// One issue body or comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawComment {
    pub issue: IssueRef,
    pub comment_id: String,
    pub author: String,
    pub created_at: String,
    pub body: String,
}

/// Segment every comment into unlabeled utterances. Each issue becomes one
/// dialogue whose turn indices run from 0 across all of its comments.
pub fn comments_to_dataset(name: &str, comments: &[RawComment]) -> Dataset {
    let mut next_turn: Vec<(String, usize)> = Vec::new();
    let mut utterances = Vec::new();
    for c in comments {
        let did = c.issue.dialogue_id();
        let slot = match next_turn.iter().position(|(d, _)| *d == did) {
            Some(i) => i,
            None => {
                next_turn.push((did.clone(), 0));
                next_turn.len() - 1
            }
        };
        for text in segment_comment(&c.body) {
            let turn = next_turn[slot].1;
            next_turn[slot].1 += 1;
            utterances.push(Utterance::new(did.clone(), turn, c.author.clone(), text, None));
        }
    }
    Dataset::new(name, TokenizerMode::Github, utterances)
}

/// Write the segmented comments as a dataset file with null tags.
pub fn emit_unlabeled(comments: &[RawComment], path: &Path) -> Result<Dataset, IngestError> {
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("github");
    let dataset = comments_to_dataset(name, comments);
    dataset.save(path)?;
    Ok(dataset)
}
