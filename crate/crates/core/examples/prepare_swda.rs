//! Parse SwDA utterance files, normalize their tags to the 42-label set and
//! split the result into train/validation datasets by dialogue.
//!
//! ```text
//! cargo run --example prepare_swda [SWDA_DIR]
//! ```

use std::path::PathBuf;

use dialogue_acts::corpus::{load_swda_dir, normalize_tag};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/swda"));

    for raw in ["sd^e", "qy^d", "fx", "%-", "aa,sd", "b@", "sd(^q)"] {
        println!("{raw:>8} -> {}", normalize_tag(raw)?.label());
    }

    let conv = load_swda_dir(&dir, "swda")?;
    let stats = conv.dataset.stats();
    println!(
        "\n{} dialogues, {} utterances, {} tags, {} token types ({} continuations dropped)",
        conv.dataset.dialogues().len(),
        stats.n_utterances,
        stats.n_categories,
        stats.n_tokens,
        conv.dropped_continuations
    );

    let first = &conv.dataset.dialogues()[0];
    for u in first.iter().take(6) {
        let tag = u.tag.map_or("-", |t| t.label());
        println!("  {:>2} {} {:<5} {}", u.turn_index, u.speaker, tag, u.text);
    }

    let (train, val) = conv.dataset.split_train_val(0.25, 42)?;
    println!("\ntrain: {} utterances, val: {} utterances", train.len(), val.len());
    Ok(())
}
