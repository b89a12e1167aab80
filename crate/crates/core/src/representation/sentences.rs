//! Precomputed sentence vectors keyed by `(dialogue_id, turn_index)`.
//!
//! JSON Lines. An optional first line `{"dim": D, "encoder": "<name>"}`
//! declares the width; every other line is
//! `{"dialogue_id": ..., "turn_index": ..., "vector": [...]}`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EncodedSequence, RepresentationError};
use crate::corpus::{Dataset, Utterance};

pub type SentenceKey = (String, usize);

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SentenceEmbeddingStore {
    dim: usize,
    encoder: Option<String>,
    keys: Vec<SentenceKey>,
    vectors: HashMap<SentenceKey, Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    encoder: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    dialogue_id: String,
    turn_index: usize,
    vector: Vec<f64>,
}

impl SentenceEmbeddingStore {
    pub fn new(dim: usize, encoder: Option<String>) -> Self {
        SentenceEmbeddingStore {
            dim,
            encoder,
            ..Default::default()
        }
    }

    pub fn insert(&mut self, key: SentenceKey, vector: Vec<f64>) -> Result<(), RepresentationError> {
        if vector.len() != self.dim {
            return Err(RepresentationError::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if self.vectors.contains_key(&key) {
            return Err(RepresentationError::DuplicateKey(key));
        }
        self.keys.push(key.clone());
        self.vectors.insert(key, vector);
        Ok(())
    }

    pub fn load(path: &Path) -> Result<SentenceEmbeddingStore, RepresentationError> {
        let file = File::open(path).map_err(|e| RepresentationError::io(path, e))?;
        Self::read(BufReader::new(file))
    }

    pub fn read<R: BufRead>(reader: R) -> Result<SentenceEmbeddingStore, RepresentationError> {
        let mut store: Option<SentenceEmbeddingStore> = None;
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let parse_err = |reason: String| RepresentationError::Parse {
                line: line_no,
                reason,
            };
            let line = line.map_err(|e| parse_err(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value =
                serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
            if store.is_none() && value.get("vector").is_none() && value.get("dim").is_some() {
                let header: Header =
                    serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))?;
                store = Some(SentenceEmbeddingStore::new(header.dim, header.encoder));
                continue;
            }
            let row: Row = serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))?;
            let s = store.get_or_insert_with(|| SentenceEmbeddingStore::new(row.vector.len(), None));
            s.insert((row.dialogue_id, row.turn_index), row.vector)
                .map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(store.unwrap_or_default())
    }

    pub fn save(&self, path: &Path) -> Result<(), RepresentationError> {
        let file = File::create(path).map_err(|e| RepresentationError::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w).map_err(|e| RepresentationError::io(path, e))?;
        w.flush().map_err(|e| RepresentationError::io(path, e))
    }

    pub fn write<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let header = Header {
            dim: self.dim,
            encoder: self.encoder.clone(),
        };
        serde_json::to_writer(&mut *w, &header)?;
        w.write_all(b"\n")?;
        for key in &self.keys {
            let row = Row {
                dialogue_id: key.0.clone(),
                turn_index: key.1,
                vector: self.vectors[key].clone(),
            };
            serde_json::to_writer(&mut *w, &row)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn encoder(&self) -> Option<&str> {
        self.encoder.as_deref()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn get(&self, dialogue_id: &str, turn_index: usize) -> Option<&[f64]> {
        self.vectors
            .get(&(dialogue_id.to_string(), turn_index))
            .map(Vec::as_slice)
    }

    fn require(&self, u: &Utterance) -> Result<&[f64], RepresentationError> {
        self.get(&u.dialogue_id, u.turn_index)
            .ok_or_else(|| RepresentationError::MissingVector(u.key()))
    }

    /// Keys of `dataset` with no stored vector, in dataset order.
    pub fn coverage_check(&self, dataset: &Dataset) -> Vec<SentenceKey> {
        dataset
            .utterances()
            .iter()
            .filter(|u| self.get(&u.dialogue_id, u.turn_index).is_none())
            .map(Utterance::key)
            .collect()
    }

    /// The utterance's own vector as a one-step sequence.
    pub fn encode(&self, utterance: &Utterance) -> Result<EncodedSequence, RepresentationError> {
        let v = self.require(utterance)?;
        Ok(EncodedSequence {
            vectors: vec![v.to_vec()],
            mask: vec![true],
            label: utterance.tag.map(|t| t.id()),
        })
    }

    /// Vectors of the utterance at `position` and the `window - 1` utterances
    /// before it in the same dialogue, oldest first. Steps before the start
    /// of the dialogue are zero vectors marked as padding.
    pub fn encode_context(
        &self,
        dialogue: &[Utterance],
        position: usize,
        window: usize,
    ) -> Result<EncodedSequence, RepresentationError> {
        let mut vectors = Vec::with_capacity(window);
        let mut mask = Vec::with_capacity(window);
        for back in (0..window).rev() {
            if back > position {
                vectors.push(vec![0.0; self.dim]);
                mask.push(false);
            } else {
                vectors.push(self.require(&dialogue[position - back])?.to_vec());
                mask.push(true);
            }
        }
        Ok(EncodedSequence {
            vectors,
            mask,
            label: dialogue[position].tag.map(|t| t.id()),
        })
    }

    /// Deterministic stand-in vectors for every utterance of a dataset: one
    /// pseudo-random unit-norm vector per key (see [`fixture_vector`]).
    pub fn fixture(dataset: &Dataset, dim: usize, seed: u64) -> Result<Self, RepresentationError> {
        if dim == 0 {
            return Err(RepresentationError::InvalidConfig("dim must be positive".into()));
        }
        let mut store = SentenceEmbeddingStore::new(dim, Some(format!("fixture-seed{seed}")));
        for u in dataset.utterances() {
            store.insert(u.key(), fixture_vector(&u.dialogue_id, u.turn_index, dim, seed))?;
        }
        Ok(store)
    }
}

/// Unit-norm vector with coordinates drawn uniformly from [-1, 1) and then
/// normalized. The generator is seeded from `seed` and an FNV-1a hash of the
/// key, so a key's vector does not depend on which other keys exist.
pub fn fixture_vector(dialogue_id: &str, turn_index: usize, dim: usize, seed: u64) -> Vec<f64> {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let bytes = seed
        .to_le_bytes()
        .into_iter()
        .chain(dialogue_id.bytes())
        .chain([0xff])
        .chain((turn_index as u64).to_le_bytes());
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(h);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TokenizerMode;

    const FIXTURE: &str = r#"{"dim": 4, "encoder": "test"}
{"dialogue_id": "d", "turn_index": 0, "vector": [1, 0, 0, 0]}
{"dialogue_id": "d", "turn_index": 1, "vector": [0, 1, 0, 0]}
{"dialogue_id": "e", "turn_index": 0, "vector": [0, 0, 1, 0.5]}
"#;

    fn dataset() -> Dataset {
        let us = vec![
            Utterance::new("d", 0, "A", "a", None),
            Utterance::new("d", 1, "B", "b", None),
            Utterance::new("e", 0, "A", "c", None),
        ];
        Dataset::new("x", TokenizerMode::Speech, us)
    }

    #[test]
    fn reads_fixture() {
        let s = SentenceEmbeddingStore::read(FIXTURE.as_bytes()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.dim(), 4);
        assert_eq!(s.encoder(), Some("test"));
        assert_eq!(s.get("e", 0).unwrap(), [0.0, 0.0, 1.0, 0.5]);
    }

    #[test]
    fn headerless_and_empty() {
        let rows: String = FIXTURE.lines().skip(1).map(|l| format!("{l}\n")).collect();
        let s = SentenceEmbeddingStore::read(rows.as_bytes()).unwrap();
        assert_eq!((s.len(), s.dim()), (3, 4));
        assert!(SentenceEmbeddingStore::read("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn rejects_duplicates_and_mismatched_widths() {
        let dup = format!("{FIXTURE}{{\"dialogue_id\": \"d\", \"turn_index\": 0, \"vector\": [0,0,0,0]}}\n");
        assert!(matches!(
            SentenceEmbeddingStore::read(dup.as_bytes()),
            Err(RepresentationError::Parse { line: 5, .. })
        ));
        let bad = "{\"dim\": 3}\n{\"dialogue_id\": \"d\", \"turn_index\": 0, \"vector\": [1, 2]}\n";
        let err = SentenceEmbeddingStore::read(bad.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("dimension"), "{err}");
    }

    #[test]
    fn coverage() {
        let s = SentenceEmbeddingStore::read(FIXTURE.as_bytes()).unwrap();
        assert!(s.coverage_check(&dataset()).is_empty());
        assert!(s.coverage_check(&Dataset::empty("e", TokenizerMode::Speech)).is_empty());

        let partial: String = FIXTURE.lines().filter(|l| !l.contains("\"turn_index\": 1")).map(|l| format!("{l}\n")).collect();
        let s = SentenceEmbeddingStore::read(partial.as_bytes()).unwrap();
        assert_eq!(s.coverage_check(&dataset()), [("d".to_string(), 1)]);
    }

    #[test]
    fn context_window_pads_at_dialogue_start() {
        let s = SentenceEmbeddingStore::read(FIXTURE.as_bytes()).unwrap();
        let ds = dataset();
        let dialogue = ds.dialogues()[0];
        let enc = s.encode_context(dialogue, 1, 3).unwrap();
        assert_eq!(enc.mask, [false, true, true]);
        assert_eq!(enc.vectors[0], [0.0; 4]);
        assert_eq!(enc.vectors[1], [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(enc.vectors[2], [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn fixture_vectors_are_unit_and_deterministic() {
        let ds = dataset();
        let a = SentenceEmbeddingStore::fixture(&ds, 512, 9).unwrap();
        let b = SentenceEmbeddingStore::fixture(&ds, 512, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.coverage_check(&ds).is_empty());
        let v = a.get("d", 1).unwrap();
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(SentenceEmbeddingStore::fixture(&ds, 0, 9).is_err());
        assert_eq!(v, fixture_vector("d", 1, 512, 9));
        assert_ne!(v, fixture_vector("d", 1, 512, 10));
        assert_ne!(v, fixture_vector("d", 0, 512, 9));

        let mut bytes = Vec::new();
        a.write(&mut bytes).unwrap();
        let back = SentenceEmbeddingStore::read(bytes.as_slice()).unwrap();
        assert_eq!(back, a);
    }
}
