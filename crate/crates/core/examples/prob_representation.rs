//! Build the word-to-tag probability matrix from a training set and encode
//! an utterance with it. Unknown words fall back to the tag prior.

use std::path::Path;

use dialogue_acts::corpus::{load_swda_dir, Dataset, TagSet, TokenizerMode, Utterance};
use dialogue_acts::representation::ProbMatrix;

fn top_tags(row: &[f64], k: usize) -> String {
    let mut ids: Vec<usize> = (0..row.len()).collect();
    ids.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    ids.iter()
        .take(k)
        .map(|&i| format!("{}={:.2}", TagSet::damsl().get(i).unwrap().label(), row[i]))
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/swda");
    let train = load_swda_dir(&dir, "swda")?.dataset;
    let matrix = ProbMatrix::build(&train, 2)?;
    println!("{} keywords with at least {} occurrences", matrix.keywords().len(), matrix.min_freq());
    println!("prior: {}", top_tags(matrix.prior(), 4));

    for word in ["uh-huh", "kids", "?", "no", "zebra"] {
        let known = if matrix.row(word).is_some() { "" } else { " (unknown: prior)" };
        println!("{word:>8}: {}{known}", top_tags(matrix.lookup(word), 3));
    }

    let probe = Dataset::new(
        "probe",
        TokenizerMode::Speech,
        vec![Utterance::new("p", 0, "A", "do you have kids ?", None)],
    );
    let seq = matrix.encode(&probe.utterances()[0], 8);
    println!("\nencoded {} real steps of width {}, padded to {}", seq.real_steps(), matrix.n_tags(), seq.len());
    Ok(())
}
