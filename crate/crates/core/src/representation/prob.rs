//! Word-to-tag probability representation.
//!
//! Each keyword (a token seen at least `min_freq` times in training) is
//! represented by its empirical tag distribution: row `i` holds
//! `P(tag | keyword i)`. Tokens outside the keyword list fall back to the
//! corpus tag prior so every encoded step stays a probability vector.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EncodedSequence, RepresentationError};
use crate::corpus::{Dataset, Utterance, NUM_TAGS};

/// Default keyword frequency threshold.
pub const DEFAULT_MIN_FREQ: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProbMatrixFile", into = "ProbMatrixFile")]
pub struct ProbMatrix {
    keywords: Vec<String>,
    index: HashMap<String, usize>,
    /// keywords.len() x n_tags, row-major
    probs: Vec<f64>,
    n_tags: usize,
    min_freq: usize,
    prior: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ProbMatrixFile {
    n_tags: usize,
    min_freq: usize,
    prior: Vec<f64>,
    keywords: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl From<ProbMatrix> for ProbMatrixFile {
    fn from(pm: ProbMatrix) -> Self {
        let rows = pm.probs.chunks(pm.n_tags.max(1)).map(<[f64]>::to_vec).collect();
        ProbMatrixFile {
            n_tags: pm.n_tags,
            min_freq: pm.min_freq,
            prior: pm.prior,
            keywords: pm.keywords,
            rows,
        }
    }
}

impl TryFrom<ProbMatrixFile> for ProbMatrix {
    type Error = String;

    fn try_from(f: ProbMatrixFile) -> Result<Self, Self::Error> {
        if f.prior.len() != f.n_tags {
            return Err(format!("prior has {} entries, expected {}", f.prior.len(), f.n_tags));
        }
        if f.rows.len() != f.keywords.len() {
            return Err("keyword and row counts differ".into());
        }
        if let Some(bad) = f.rows.iter().position(|r| r.len() != f.n_tags) {
            return Err(format!("row {bad} has the wrong width"));
        }
        let index: HashMap<String, usize> =
            f.keywords.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
        if index.len() != f.keywords.len() {
            return Err("duplicate keyword".into());
        }
        Ok(ProbMatrix {
            index,
            probs: f.rows.concat(),
            keywords: f.keywords,
            n_tags: f.n_tags,
            min_freq: f.min_freq,
            prior: f.prior,
        })
    }
}

impl ProbMatrix {
    /// Count tag co-occurrences for every token of a fully labeled corpus.
    ///
    /// Every token occurrence counts once toward its utterance's tag.
    /// Keywords are sorted lexicographically.
    pub fn build(train: &Dataset, min_freq: usize) -> Result<ProbMatrix, RepresentationError> {
        if train.is_empty() {
            return Err(RepresentationError::EmptyTrainingSet);
        }
        if min_freq == 0 {
            return Err(RepresentationError::InvalidConfig("min_freq must be at least 1".into()));
        }
        let n_tags = NUM_TAGS;
        let mut counts: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
        let mut tag_counts = vec![0u64; n_tags];
        for u in train.utterances() {
            let tag = u
                .tag
                .ok_or_else(|| RepresentationError::Unlabeled(u.key()))?
                .id();
            tag_counts[tag] += 1;
            for tok in &u.tokens {
                counts.entry(tok.as_str()).or_insert_with(|| vec![0; n_tags])[tag] += 1;
            }
        }

        let mut keywords = Vec::new();
        let mut probs = Vec::new();
        for (tok, row) in counts {
            let total: u64 = row.iter().sum();
            if total < min_freq as u64 {
                continue;
            }
            keywords.push(tok.to_string());
            probs.extend(row.iter().map(|&c| c as f64 / total as f64));
        }
        let n_utts = train.len() as f64;
        let prior = tag_counts.iter().map(|&c| c as f64 / n_utts).collect();
        let index = keywords.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
        Ok(ProbMatrix {
            keywords,
            index,
            probs,
            n_tags,
            min_freq,
            prior,
        })
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn n_tags(&self) -> usize {
        self.n_tags
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// Distribution for a keyword, or `None` when the token is not one.
    pub fn row(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&i| &self.probs[i * self.n_tags..(i + 1) * self.n_tags])
    }

    /// Keyword row or, for out-of-vocabulary tokens, the prior.
    pub fn lookup(&self, token: &str) -> &[f64] {
        self.row(token).unwrap_or(&self.prior)
    }

    pub fn encode(&self, utterance: &Utterance, max_len: usize) -> EncodedSequence {
        EncodedSequence::from_steps(
            utterance.tokens.iter().map(|t| self.lookup(t).to_vec()),
            self.n_tags,
            max_len,
            utterance.tag.map(|t| t.id()),
        )
    }

    pub fn save(&self, path: &Path) -> Result<(), RepresentationError> {
        let file = File::create(path).map_err(|e| RepresentationError::io(path, e))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer(&mut w, self)
            .map_err(|e| RepresentationError::Format(e.to_string()))?;
        w.flush().map_err(|e| RepresentationError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<ProbMatrix, RepresentationError> {
        let file = File::open(path).map_err(|e| RepresentationError::io(path, e))?;
        serde_json::from_reader(BufReader::new(file))
            .map_err(|e| RepresentationError::Format(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{TagSet, TokenizerMode};

    fn corpus(rows: &[(&str, &str)]) -> Dataset {
        let ts = TagSet::damsl();
        let us = rows
            .iter()
            .enumerate()
            .map(|(i, (text, tag))| Utterance::new("d", i, "A", *text, ts.by_label(tag)))
            .collect();
        Dataset::new("toy", TokenizerMode::Speech, us)
    }

    #[test]
    fn split_distribution() {
        let ds = corpus(&[("ok", "b"), ("ok", "b"), ("ok", "aa"), ("ok yes", "aa")]);
        let pm = ProbMatrix::build(&ds, 1).unwrap();
        let ts = TagSet::damsl();
        let row = pm.row("ok").unwrap();
        let b = ts.by_label("b").unwrap().id();
        let aa = ts.by_label("aa").unwrap().id();
        for (j, &p) in row.iter().enumerate() {
            let expected = if j == b || j == aa { 0.5 } else { 0.0 };
            assert_eq!(p, expected, "tag {j}");
        }
        assert_eq!(pm.prior()[b], 0.5);
        assert_eq!(pm.prior()[aa], 0.5);
    }

    #[test]
    fn threshold_excludes_rare_tokens() {
        let ds = corpus(&[("ok rare", "b"), ("ok", "b")]);
        let pm = ProbMatrix::build(&ds, 2).unwrap();
        assert_eq!(pm.keywords(), ["ok"]);
        assert!(pm.row("rare").is_none());
        assert_eq!(pm.lookup("rare"), pm.prior());
    }

    #[test]
    fn single_tag_corpus_is_one_hot() {
        let ds = corpus(&[("a b", "sd"), ("b c d", "sd")]);
        let pm = ProbMatrix::build(&ds, 1).unwrap();
        for k in pm.keywords() {
            let row = pm.row(k).unwrap();
            assert_eq!(row[0], 1.0);
            assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn rejects_empty_and_unlabeled() {
        let empty = Dataset::empty("e", TokenizerMode::Speech);
        assert!(matches!(
            ProbMatrix::build(&empty, 1),
            Err(RepresentationError::EmptyTrainingSet)
        ));
        let us = vec![Utterance::new("d", 0, "A", "hi", None)];
        let ds = Dataset::new("u", TokenizerMode::Speech, us);
        assert!(matches!(
            ProbMatrix::build(&ds, 1),
            Err(RepresentationError::Unlabeled(_))
        ));
    }

    #[test]
    fn encode_pads_and_truncates() {
        let ds = corpus(&[("ok yes", "b"), ("ok no", "aa")]);
        let pm = ProbMatrix::build(&ds, 1).unwrap();
        let enc = pm.encode(&ds.utterances()[0], 4);
        assert_eq!(enc.mask, [true, true, false, false]);
        assert_eq!(enc.vectors[0], pm.row("ok").unwrap());
        assert!(enc.vectors[3].iter().all(|&v| v == 0.0));
        assert_eq!(enc.label, Some(TagSet::damsl().by_label("b").unwrap().id()));

        let short = pm.encode(&ds.utterances()[0], 1);
        assert_eq!(short.mask, [true]);
        assert_eq!(short.vectors[0], pm.row("ok").unwrap());

        let oov = Utterance::new("z", 0, "A", "", None);
        let mut oov = oov;
        oov.tokens = vec!["never".into(), "seen".into()];
        let enc = pm.encode(&oov, 2);
        assert!(enc.vectors.iter().all(|v| v == pm.prior()));
    }

    #[test]
    fn json_round_trip() {
        let ds = corpus(&[("ok yes", "b"), ("ok no", "aa")]);
        let pm = ProbMatrix::build(&ds, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pm.json");
        pm.save(&path).unwrap();
        assert_eq!(ProbMatrix::load(&path).unwrap(), pm);
    }
}
