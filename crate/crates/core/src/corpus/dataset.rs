use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tagset::{DaTag, TagSet};
use super::text::{tokenize, TokenizerMode};
use super::CorpusError;

/// One conversational turn or segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub dialogue_id: String,
    pub turn_index: usize,
    pub speaker: String,
    pub text: String,
    pub tokens: Vec<String>,
    pub tag: Option<DaTag>,
    pub raw_tag: Option<String>,
}

impl Utterance {
    /// Build an utterance; tokens are filled in when it joins a [`Dataset`].
    pub fn new(
        dialogue_id: impl Into<String>,
        turn_index: usize,
        speaker: impl Into<String>,
        text: impl Into<String>,
        tag: Option<DaTag>,
    ) -> Self {
        Utterance {
            dialogue_id: dialogue_id.into(),
            turn_index,
            speaker: speaker.into(),
            text: text.into(),
            tokens: Vec::new(),
            tag,
            raw_tag: None,
        }
    }

    /// Key used by sentence-embedding stores.
    pub fn key(&self) -> (String, usize) {
        (self.dialogue_id.clone(), self.turn_index)
    }
}

/// An ordered collection of utterances grouped by dialogue.
///
/// Utterances of one dialogue are contiguous, ordered by `turn_index`, and
/// numbered `0, 1, 2, ...`. Tokens always equal `tokenize(text, mode)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    name: String,
    tokenizer_mode: TokenizerMode,
    utterances: Vec<Utterance>,
}

/// Line format of the dataset JSON-Lines file.
#[derive(Debug, Serialize, Deserialize)]
struct DatasetRecord {
    dialogue_id: String,
    turn_index: usize,
    speaker: String,
    text: String,
    #[serde(default)]
    tag: Option<String>,
    #[serde(default)]
    raw_tag: Option<String>,
}

impl Dataset {
    /// Group utterances by dialogue (in order of first appearance), sort each
    /// dialogue stably by `turn_index`, renumber from 0 and tokenize.
    pub fn new(
        name: impl Into<String>,
        tokenizer_mode: TokenizerMode,
        utterances: Vec<Utterance>,
    ) -> Dataset {
        let mut order: Vec<String> = Vec::new();
        let mut groups: HashMap<String, Vec<Utterance>> = HashMap::new();
        for u in utterances {
            if !groups.contains_key(&u.dialogue_id) {
                order.push(u.dialogue_id.clone());
            }
            groups.entry(u.dialogue_id.clone()).or_default().push(u);
        }
        let mut out = Vec::new();
        for id in order {
            let mut group = groups.remove(&id).unwrap_or_default();
            group.sort_by_key(|u| u.turn_index);
            for (i, mut u) in group.into_iter().enumerate() {
                u.turn_index = i;
                u.tokens = tokenize(&u.text, tokenizer_mode);
                out.push(u);
            }
        }
        Dataset {
            name: name.into(),
            tokenizer_mode,
            utterances: out,
        }
    }

    pub fn empty(name: impl Into<String>, tokenizer_mode: TokenizerMode) -> Dataset {
        Dataset {
            name: name.into(),
            tokenizer_mode,
            utterances: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tokenizer_mode(&self) -> TokenizerMode {
        self.tokenizer_mode
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    /// Contiguous per-dialogue slices, in dataset order.
    pub fn dialogues(&self) -> Vec<&[Utterance]> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.utterances.len() {
            if i == self.utterances.len()
                || self.utterances[i].dialogue_id != self.utterances[start].dialogue_id
            {
                out.push(&self.utterances[start..i]);
                start = i;
            }
        }
        out
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.utterances.iter().all(|u| u.tag.is_some())
    }

    /// Read a dataset from the JSON-Lines interchange format. The dataset
    /// takes the file stem as its name.
    pub fn load(path: &Path, mode: TokenizerMode) -> Result<Dataset, CorpusError> {
        let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::read(BufReader::new(file), &name, mode).map_err(|e| e.in_file(path))
    }

    pub fn read<R: BufRead>(
        reader: R,
        name: &str,
        mode: TokenizerMode,
    ) -> Result<Dataset, CorpusError> {
        let tagset = TagSet::damsl();
        let mut seen = HashSet::new();
        let mut utterances = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| CorpusError::Parse {
                line: line_no,
                reason: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: DatasetRecord =
                serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
                    line: line_no,
                    reason: e.to_string(),
                })?;
            if !seen.insert((rec.dialogue_id.clone(), rec.turn_index)) {
                return Err(CorpusError::DuplicateKey {
                    line: line_no,
                    dialogue_id: rec.dialogue_id,
                    turn_index: rec.turn_index,
                });
            }
            let tag = match &rec.tag {
                None => None,
                Some(label) => Some(
                    tagset
                        .by_label(label)
                        .ok_or_else(|| CorpusError::UnknownTag(label.clone()))?,
                ),
            };
            let mut u = Utterance::new(rec.dialogue_id, rec.turn_index, rec.speaker, rec.text, tag);
            u.raw_tag = rec.raw_tag;
            utterances.push(u);
        }
        Ok(Dataset::new(name, mode, utterances))
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w).map_err(|e| CorpusError::io(path, e))?;
        w.flush().map_err(|e| CorpusError::io(path, e))
    }

    pub fn write<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for u in &self.utterances {
            let rec = DatasetRecord {
                dialogue_id: u.dialogue_id.clone(),
                turn_index: u.turn_index,
                speaker: u.speaker.clone(),
                text: u.text.clone(),
                tag: u.tag.map(|t| t.label().to_string()),
                raw_tag: u.raw_tag.clone(),
            };
            serde_json::to_writer(&mut *w, &rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Split at dialogue granularity into `(train, val)`.
    ///
    /// The validation side receives `round(n_dialogues * val_fraction)`
    /// dialogues, clamped to `1..n_dialogues`, chosen by a seeded shuffle.
    /// Both halves keep the original dialogue order.
    pub fn split_train_val(
        &self,
        val_fraction: f64,
        seed: u64,
    ) -> Result<(Dataset, Dataset), CorpusError> {
        if !(val_fraction > 0.0 && val_fraction < 1.0) {
            return Err(CorpusError::InvalidFraction(val_fraction));
        }
        let dialogues = self.dialogues();
        let n = dialogues.len();
        if n < 2 {
            return Err(CorpusError::TooFewDialogues(n));
        }
        let n_val = ((n as f64 * val_fraction).round() as usize).clamp(1, n - 1);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut is_val = vec![false; n];
        for &i in &idx[..n_val] {
            is_val[i] = true;
        }
        let mut train = Vec::new();
        let mut val = Vec::new();
        for (d, flag) in dialogues.iter().zip(is_val) {
            let dest = if flag { &mut val } else { &mut train };
            dest.extend_from_slice(d);
        }
        let make = |suffix: &str, utterances: Vec<Utterance>| Dataset {
            name: format!("{}-{suffix}", self.name),
            tokenizer_mode: self.tokenizer_mode,
            utterances,
        };
        Ok((make("train", train), make("val", val)))
    }

    pub fn stats(&self) -> CorpusStats {
        let types: HashSet<&str> = self
            .utterances
            .iter()
            .flat_map(|u| u.tokens.iter().map(String::as_str))
            .collect();
        let categories: HashSet<usize> = self
            .utterances
            .iter()
            .filter_map(|u| u.tag.map(|t| t.id()))
            .collect();
        CorpusStats {
            n_categories: categories.len(),
            n_utterances: self.utterances.len(),
            n_tokens: types.len(),
        }
    }
}

/// Table-style corpus summary. `n_tokens` counts distinct token types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub n_categories: usize,
    pub n_utterances: usize,
    pub n_tokens: usize,
}
