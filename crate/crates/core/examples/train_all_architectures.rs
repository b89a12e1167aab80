//! Train the five architectures on the bundled SwDA fixtures, score them on
//! the bundled GitHub-style test set and print a results table.
//!
//! Sentence vectors come from deterministic stand-in embeddings, so the
//! sentence-level models can only memorize; the point is the plumbing.

use std::path::Path;

use dialogue_acts::corpus::{load_swda_dir, Dataset, TokenizerMode};
use dialogue_acts::eval::{evaluate, render_results_table, ResultRow, TableFormat};
use dialogue_acts::model::{train, ArchitectureKind, Model, ModelConfig, TrainConfig};
use dialogue_acts::representation::{
    fixture_vector, Encoder, ProbMatrix, SentenceEmbeddingStore, WordEmbeddingTable,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let (train_ds, val_ds) = load_swda_dir(&fixtures.join("swda"), "swda")?.dataset.split_train_val(0.25, 42)?;
    let test_ds = Dataset::load(&fixtures.join("github_test.jsonl"), TokenizerMode::Github)?;

    let mut store = SentenceEmbeddingStore::new(32, Some("fixture".into()));
    for ds in [&train_ds, &val_ds, &test_ds] {
        for u in ds.utterances() {
            store.insert(u.key(), fixture_vector(&u.dialogue_id, u.turn_index, 32, 7))?;
        }
    }
    let glove = WordEmbeddingTable::load(&fixtures.join("glove_toy.txt"))?;
    let prob = ProbMatrix::build(&train_ds, 1)?;

    let tc = TrainConfig {
        epochs: 8,
        batch_size: 16,
        learning_rate: 0.01,
        ..Default::default()
    };
    let mut rows = Vec::new();
    for kind in ArchitectureKind::ALL {
        let encoder = match kind {
            ArchitectureKind::ProbLstm => Encoder::Prob { matrix: prob.clone(), max_len: 12 },
            ArchitectureKind::GloveLstm => Encoder::Words { table: glove.clone(), max_len: 12 },
            ArchitectureKind::UseConvLstm => Encoder::SentenceContext { store: store.clone(), window: 3 },
            _ => Encoder::Sentence { store: store.clone() },
        };
        let config = ModelConfig {
            hidden_dim: 16,
            max_len: 12,
            dense_dims: vec![32, 16, 42],
            ..ModelConfig::new(kind, encoder.input_dim())
        };
        let tm = train(
            Model::build(config)?,
            &encoder.encode_dataset(&train_ds)?,
            &encoder.encode_dataset(&val_ds)?,
            &tc,
        )?;
        let report = evaluate(&tm.model, &test_ds, &encoder)?;
        let last = tm.history.last().unwrap();
        rows.push(ResultRow {
            model: kind.display_name().into(),
            acc: Some(last.train_accuracy),
            val_acc: last.val_accuracy,
            test_acc: Some(report.accuracy),
        });
    }
    print!("{}", String::from_utf8(render_results_table(&rows, TableFormat::Text))?);
    Ok(())
}
