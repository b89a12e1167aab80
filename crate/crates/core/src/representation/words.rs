//! GloVe-style text embeddings: `token v1 ... vd` per line, no header.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{EncodedSequence, RepresentationError};
use crate::corpus::Utterance;

#[derive(Debug, Clone, PartialEq)]
pub struct WordEmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    vectors: Vec<f64>,
    duplicates: usize,
}

impl WordEmbeddingTable {
    pub fn load(path: &Path) -> Result<WordEmbeddingTable, RepresentationError> {
        let file = File::open(path).map_err(|e| RepresentationError::io(path, e))?;
        Self::read(BufReader::new(file))
    }

    /// Parse embeddings from a reader. A token that appears twice keeps its
    /// last vector; the number of such repeats is available from
    /// [`duplicates`](Self::duplicates).
    pub fn read<R: BufRead>(reader: R) -> Result<WordEmbeddingTable, RepresentationError> {
        let mut dim = None;
        let mut index = HashMap::new();
        let mut vectors = Vec::new();
        let mut duplicates = 0;
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| RepresentationError::Parse {
                line: line_no,
                reason: e.to_string(),
            })?;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else {
                continue;
            };
            let values = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|_| RepresentationError::Parse {
                        line: line_no,
                        reason: format!("non-numeric value {f:?}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let expected = *dim.get_or_insert(values.len());
            if values.len() != expected || expected == 0 {
                return Err(RepresentationError::Parse {
                    line: line_no,
                    reason: format!("ragged dimensions: {} values, expected {expected}", values.len()),
                });
            }
            match index.get(token) {
                Some(&row) => {
                    duplicates += 1;
                    vectors[row * expected..(row + 1) * expected].copy_from_slice(&values);
                }
                None => {
                    index.insert(token.to_string(), index.len());
                    vectors.extend(values);
                }
            }
        }
        Ok(WordEmbeddingTable {
            dim: dim.unwrap_or(0),
            index,
            vectors,
            duplicates,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&i| &self.vectors[i * self.dim..(i + 1) * self.dim])
    }

    /// Exact match first, then the lowercased token (GloVe vocabularies are
    /// lowercase while issue-comment tokens may keep case).
    fn lookup(&self, token: &str) -> Option<&[f64]> {
        self.get(token).or_else(|| {
            let lower = token.to_lowercase();
            (lower != token).then(|| self.get(&lower)).flatten()
        })
    }

    /// Embed each token; out-of-vocabulary tokens become zero vectors.
    pub fn encode(&self, utterance: &Utterance, max_len: usize) -> EncodedSequence {
        EncodedSequence::from_steps(
            utterance.tokens.iter().map(|t| match self.lookup(t) {
                Some(v) => v.to_vec(),
                None => vec![0.0; self.dim],
            }),
            self.dim,
            max_len,
            utterance.tag.map(|t| t.id()),
        )
    }
}
