#![allow(dead_code)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use dialogue_acts::corpus::{Dataset, TagSet, TokenizerMode, Utterance};
use dialogue_acts::model::{ArchitectureKind, ModelConfig};
use dialogue_acts::representation::{
    fixture_vector, Encoder, ProbMatrix, SentenceEmbeddingStore, WordEmbeddingTable,
};

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Run the `dact` binary in `cwd`, feeding `stdin` if given.
pub fn dact(cwd: &Path, args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_dact"))
        .args(args)
        .current_dir(cwd)
        .env_remove("GH_TOKEN")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn dact");
    {
        let mut pipe = child.stdin.take().unwrap();
        if let Some(text) = stdin {
            pipe.write_all(text.as_bytes()).unwrap();
        }
    }
    let out = child.wait_with_output().unwrap();
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub const TOY_TAGS: [&str; 5] = ["sd", "b", "qy", "aa", "nn"];

fn toy_word(class: usize, j: usize) -> String {
    format!("{}{j}", ["state", "ack", "ask", "agree", "deny"][class])
}

/// 50 utterances over 5 tags in 10 dialogues. Each tag owns three words and
/// every utterance uses only its own tag's words, so the classes are
/// separable for every representation.
pub fn separable_toy() -> Dataset {
    let tags = TagSet::damsl();
    let mut utts = Vec::new();
    for i in 0..50 {
        let class = (i * 3 + i / 5) % 5;
        let len = 2 + i % 3;
        let words: Vec<String> = (0..len).map(|k| toy_word(class, (i + k) % 3)).collect();
        let tag = tags.by_label(TOY_TAGS[class]).unwrap();
        utts.push(Utterance::new(format!("toy{}", i / 5), i % 5, ["A", "B"][i % 2], words.join(" "), Some(tag)));
    }
    Dataset::new("toy", TokenizerMode::Speech, utts)
}

fn class_of(ds_tag: &str) -> usize {
    TOY_TAGS.iter().position(|t| *t == ds_tag).unwrap()
}

/// Word vectors: a class indicator plus a small per-word offset.
pub fn toy_word_table(dim: usize) -> WordEmbeddingTable {
    let mut text = String::new();
    for class in 0..5 {
        for j in 0..3 {
            let w = toy_word(class, j);
            let noise = fixture_vector(&w, 0, dim, 1);
            let v: Vec<String> = (0..dim)
                .map(|d| {
                    let base = if d == class { 1.0 } else { 0.0 };
                    format!("{}", base + 0.1 * noise[d])
                })
                .collect();
            text.push_str(&format!("{w} {}\n", v.join(" ")));
        }
    }
    WordEmbeddingTable::read(text.as_bytes()).unwrap()
}

/// Sentence vectors: a class indicator plus a small per-utterance offset.
pub fn toy_sentence_store(ds: &Dataset, dim: usize) -> SentenceEmbeddingStore {
    let mut store = SentenceEmbeddingStore::new(dim, Some("toy".into()));
    for u in ds.utterances() {
        let class = class_of(u.tag.unwrap().label());
        let noise = fixture_vector(&u.dialogue_id, u.turn_index, dim, 3);
        let v = (0..dim)
            .map(|d| if d == class { 1.0 } else { 0.0 } + 0.1 * noise[d])
            .collect();
        store.insert(u.key(), v).unwrap();
    }
    store
}

pub fn toy_encoder(kind: ArchitectureKind, ds: &Dataset, max_len: usize) -> Encoder {
    match kind {
        ArchitectureKind::ProbLstm => Encoder::Prob { matrix: ProbMatrix::build(ds, 1).unwrap(), max_len },
        ArchitectureKind::GloveLstm => Encoder::Words { table: toy_word_table(8), max_len },
        ArchitectureKind::UseConvLstm => Encoder::SentenceContext { store: toy_sentence_store(ds, 8), window: 3 },
        ArchitectureKind::UseDense | ArchitectureKind::BertHead => {
            Encoder::Sentence { store: toy_sentence_store(ds, 8) }
        }
    }
}

pub fn small_config(kind: ArchitectureKind, input_dim: usize, hidden: usize, max_len: usize) -> ModelConfig {
    ModelConfig {
        hidden_dim: hidden,
        max_len,
        dense_dims: vec![16, 16, 42],
        ..ModelConfig::new(kind, input_dim)
    }
}
