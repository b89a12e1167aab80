mod common;

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::Command;

use common::{dact, fixture, separable_toy};
use dialogue_acts::corpus::{Dataset, TagSet, TokenizerMode};
use dialogue_acts::eval::parse_metrics_csv;
use dialogue_acts::representation::SentenceEmbeddingStore;

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Save the separable toy corpus and train a prob-lstm model on it.
fn memorized(dir: &Path) {
    separable_toy().save(&dir.join("toy.jsonl")).unwrap();
    let o = dact(
        dir,
        &[
            "train", "--arch", "prob-lstm", "--train", "toy.jsonl", "--out-dir", "run", "--min-freq", "1",
            "--hidden-dim", "8", "--max-len", "6", "--epochs", "30", "--batch-size", "10", "--learning-rate", "0.02",
        ],
        None,
    );
    assert_eq!(o.code, 0, "{}", o.stderr);
}

#[test]
fn stats_on_bundled_fixture() {
    let o = dact(&std::env::temp_dir(), &["stats", s(&fixture("github_test.jsonl")), "--tokenizer", "github"], None);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let mut lines = o.stdout.lines();
    assert_eq!(lines.next(), Some("dataset\tcategories\tutterances\ttokens"));
    // 11 distinct tags, 20 utterances and 64 distinct token types, counted by hand.
    assert_eq!(lines.next().unwrap().split('\t').skip(1).collect::<Vec<_>>(), ["11", "20", "64"]);
}

#[test]
fn missing_file_is_a_usage_error() {
    let d = tmp();
    let o = dact(d.path(), &["stats", "nope.jsonl"], None);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("nope.jsonl"), "{}", o.stderr);
}

#[test]
fn bad_flags_and_config_keys_are_usage_errors() {
    let d = tmp();
    assert_eq!(dact(d.path(), &["train", "--no-such-flag"], None).code, 2);
    assert_eq!(dact(d.path(), &["train", "--arch", "lstm"], None).code, 2);
    std::fs::write(d.path().join("bad.toml"), "epoch = 3\n").unwrap();
    assert_eq!(dact(d.path(), &["train", "--config", "bad.toml"], None).code, 2);
    assert_eq!(dact(d.path(), &["--help"], None).code, 0);
}

#[test]
fn sentence_model_without_embeddings_is_a_usage_error() {
    let d = tmp();
    separable_toy().save(&d.path().join("toy.jsonl")).unwrap();
    let o = dact(d.path(), &["train", "--arch", "use", "--train", "toy.jsonl"], None);
    assert_eq!(o.code, 2, "{}", o.stderr);
    assert!(!d.path().join("out/checkpoint.json").exists());
}

#[test]
fn missing_embedding_coverage_lists_keys() {
    let d = tmp();
    separable_toy().save(&d.path().join("toy.jsonl")).unwrap();
    std::fs::write(d.path().join("emb.jsonl"), "{\"dim\":2}\n{\"dialogue_id\":\"toy0\",\"turn_index\":0,\"vector\":[1,0]}\n")
        .unwrap();
    let o = dact(d.path(), &["train", "--arch", "use", "--train", "toy.jsonl", "--sentence-embeddings", "emb.jsonl"], None);
    assert_ne!(o.code, 0);
    assert!(o.stderr.contains("missing for 49 utterances: toy0#1, toy0#2"), "{}", o.stderr);
}

#[test]
fn fixture_embeddings() {
    let d = tmp();
    separable_toy().save(&d.path().join("toy.jsonl")).unwrap();
    let gen = |out: &str, dim: &str| dact(d.path(), &["gen-fixture-embeddings", "--dataset", "toy.jsonl", "--dim", dim, "--out", out], None);
    assert_eq!(gen("a.jsonl", "512").code, 0);
    assert_eq!(gen("b.jsonl", "512").code, 0);
    let (a, b) = (std::fs::read(d.path().join("a.jsonl")).unwrap(), std::fs::read(d.path().join("b.jsonl")).unwrap());
    assert_eq!(a, b);
    let store = SentenceEmbeddingStore::load(&d.path().join("a.jsonl")).unwrap();
    assert_eq!(store.dim(), 512);
    assert!(store.coverage_check(&separable_toy()).is_empty());
    let o = gen("c.jsonl", "0");
    assert_eq!(o.code, 2);
    assert!(!d.path().join("c.jsonl").exists());
}

#[test]
fn train_writes_history_and_is_deterministic() {
    let d = tmp();
    separable_toy().save(&d.path().join("toy.jsonl")).unwrap();
    for out in ["r1", "r2"] {
        let o = dact(
            d.path(),
            &["train", "--arch", "glove-lstm", "--train", "toy.jsonl", "--val", "toy.jsonl", "--embeddings",
              s(&fixture("glove_toy.txt")), "--hidden-dim", "6", "--max-len", "5", "--epochs", "3", "--seed", "5",
              "--shuffle-seed", "8", "--out-dir", out],
            None,
        );
        assert_eq!(o.code, 0, "{}", o.stderr);
        assert!(o.stdout.contains("acc ") && o.stdout.contains("val_acc "), "{}", o.stdout);
    }
    let h1 = std::fs::read_to_string(d.path().join("r1/history.csv")).unwrap();
    assert_eq!(h1.lines().count(), 1 + 3);
    assert_eq!(h1, std::fs::read_to_string(d.path().join("r2/history.csv")).unwrap());
    assert_eq!(std::fs::read(d.path().join("r1/checkpoint.json")).unwrap(), std::fs::read(d.path().join("r2/checkpoint.json")).unwrap());
}

#[test]
fn memorized_toy_evaluates_to_one() {
    let d = tmp();
    memorized(d.path());
    let o = dact(d.path(), &["evaluate", "--checkpoint", "run/checkpoint.json", "--arch", "prob-lstm", "--test", "toy.jsonl",
        "--out-dir", "eval", "--max-len", "6", "--top-k", "3"], None);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.stdout.trim(), "accuracy 1.0000");
    let rows = parse_metrics_csv(&std::fs::read(d.path().join("eval/metrics.csv")).unwrap()).unwrap();
    assert_eq!(rows.iter().find(|r| r.tag == "sd").unwrap().f1, 1.0);
    let confusion = std::fs::read_to_string(d.path().join("eval/confusion.csv")).unwrap();
    assert_eq!(confusion.lines().count(), 4);
    assert!(std::fs::read_to_string(d.path().join("eval/confusion.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn predict_outputs() {
    let d = tmp();
    memorized(d.path());
    let base = ["predict", "--checkpoint", "run/checkpoint.json", "--max-len", "6"];

    let o = dact(d.path(), &base, Some(""));
    assert_eq!((o.code, o.stdout.as_str()), (0, ""));

    let toy = separable_toy();
    let u = &toy.utterances()[0];
    let mut args = base.to_vec();
    args.extend(["--text", &u.text]);
    let o = dact(d.path(), &args, None);
    assert_eq!(o.stdout, format!("{}\t{}\n", u.tag.unwrap().label(), u.text));

    let o = dact(d.path(), &base, Some("zzz qqq\nxylophone\n"));
    assert_eq!(o.code, 0, "{}", o.stderr);
    let lines: Vec<&str> = o.stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    for line in lines {
        let tag = line.split('\t').next().unwrap();
        assert!(TagSet::damsl().by_label(tag).is_some(), "{line}");
    }
}

#[test]
fn sentence_predict_needs_input_file() {
    let d = tmp();
    separable_toy().save(&d.path().join("toy.jsonl")).unwrap();
    assert_eq!(dact(d.path(), &["gen-fixture-embeddings", "--dataset", "toy.jsonl", "--dim", "8", "--out", "e.jsonl"], None).code, 0);
    let o = dact(d.path(), &["train", "--arch", "bert-head", "--train", "toy.jsonl", "--sentence-embeddings", "e.jsonl", "--epochs", "1"], None);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let o = dact(d.path(), &["predict", "--checkpoint", "out/checkpoint.json", "--sentence-embeddings", "e.jsonl", "--text", "hi"], None);
    assert_eq!(o.code, 2);
    let o = dact(d.path(), &["predict", "--checkpoint", "out/checkpoint.json", "--sentence-embeddings", "e.jsonl", "--input", "toy.jsonl"], None);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.stdout.lines().count(), 50);
}

#[test]
fn fetch_from_fixture() {
    let d = tmp();
    let o = dact(d.path(), &["fetch", "octo/widgets", "101", "103", "--fixture", s(&fixture("github_responses.json")), "--out", "issues.jsonl"], None);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let ds = Dataset::load(&d.path().join("issues.jsonl"), TokenizerMode::Github).unwrap();
    let dialogues: Vec<&str> = ds.dialogues().iter().map(|d| d[0].dialogue_id.as_str()).collect();
    assert_eq!(dialogues, ["octo/widgets#101", "octo/widgets#103"]);
    assert_eq!(ds.len(), 10);
    assert!(ds.utterances().iter().all(|u| u.tag.is_none()));

    let o = dact(d.path(), &["fetch", "octo/widgets", "404", "--fixture", s(&fixture("github_responses.json"))], None);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("not found"), "{}", o.stderr);
    assert_eq!(dact(d.path(), &["fetch", "widgets", "1"], None).code, 2);
}

#[test]
fn live_fetch_with_rejected_token() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut auth = String::new();
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if line.to_ascii_lowercase().starts_with("authorization:") {
                auth = line.trim().to_string();
            }
            if line.trim().is_empty() {
                break;
            }
        }
        let body = "{\"message\":\"Bad credentials\"}";
        let mut stream = stream;
        write!(stream, "HTTP/1.1 401 Unauthorized\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}", body.len()).unwrap();
        auth
    });
    let d = tmp();
    let out = Command::new(env!("CARGO_BIN_EXE_dact"))
        .args(["fetch", "octo/widgets", "1", "--api-base", &format!("http://{addr}"), "--out", "x.jsonl"])
        .current_dir(d.path())
        .env("GH_TOKEN", "bad-token")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("authentication failed"));
    assert_eq!(server.join().unwrap().to_ascii_lowercase(), "authorization: bearer bad-token");
    assert!(!d.path().join("x.jsonl").exists());
}
