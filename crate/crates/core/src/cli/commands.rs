use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use super::config::RunOptions;
use super::{CliError, Command};
use crate::corpus::{load_swda_dir, Dataset, TokenizerMode, Utterance};
use crate::eval::{
    evaluate, predict_dataset, render_confusion, render_metrics_csv, render_results_table, tag_label,
    ConfusionFormat, ConfusionOptions, ResultRow, TableFormat,
};
use crate::ingest::{Client, FixtureTransport, IssueRef, LiveTransport, Transport};
use crate::model::{
    load_checkpoint, save_checkpoint, train, ArchitectureKind, Model, ModelConfig, ModelError, TrainedModel,
};
use crate::representation::{fixture_vector, Encoder, ProbMatrix, SentenceEmbeddingStore, WordEmbeddingTable};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const PROB_MATRIX_FILE: &str = "prob_matrix.json";

pub fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Stats { dataset, tokenizer } => cmd_stats(&dataset, tokenizer, out),
        Command::Prepare {
            swda,
            out_dir,
            val_fraction,
            seed,
        } => cmd_prepare(&swda, &out_dir, val_fraction, seed, out),
        Command::Train { config, opts } => cmd_train(RunOptions::resolve(config.as_deref(), opts)?, out),
        Command::Evaluate {
            checkpoint,
            config,
            prob_matrix,
            min_support,
            top_k,
            results,
            opts,
        } => cmd_evaluate(
            &checkpoint,
            RunOptions::resolve(config.as_deref(), opts)?,
            prob_matrix.as_deref(),
            ConfusionOptions { min_support, top_k },
            results.as_deref(),
            out,
        ),
        Command::Predict {
            checkpoint,
            config,
            prob_matrix,
            text,
            input,
            opts,
        } => cmd_predict(
            &checkpoint,
            RunOptions::resolve(config.as_deref(), opts)?,
            prob_matrix.as_deref(),
            text,
            input.as_deref(),
            out,
        ),
        Command::Fetch {
            repo,
            issues,
            fixture,
            api_base,
            out: path,
            concurrency,
        } => cmd_fetch(&repo, &issues, fixture.as_deref(), &api_base, &path, concurrency, out),
        Command::GenFixtureEmbeddings {
            datasets,
            dim,
            seed,
            out: path,
        } => cmd_gen_fixture_embeddings(&datasets, dim, seed, &path, out),
    }
}

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} not found: {}", path.display())))
    }
}

fn require<'a>(value: &'a Option<PathBuf>, flag: &str, why: &str) -> Result<&'a Path, CliError> {
    let p = value
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("--{flag} is required {why}")))?;
    require_file(p, &format!("--{flag} file"))?;
    Ok(p)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))
}

fn load_dataset(path: &Path, mode: TokenizerMode) -> Result<Dataset, CliError> {
    Dataset::load(path, mode).map_err(CliError::runtime)
}

fn acc4(x: f64) -> String {
    crate::eval::round_half_up(x, 4)
}

fn model_error(e: ModelError) -> CliError {
    match e {
        ModelError::Config(m) => CliError::Usage(m),
        other => CliError::runtime(other),
    }
}

fn cmd_stats(path: &Path, mode: TokenizerMode, out: &mut dyn Write) -> Result<(), CliError> {
    require_file(path, "dataset")?;
    let ds = load_dataset(path, mode)?;
    let s = ds.stats();
    let _ = writeln!(out, "dataset\tcategories\tutterances\ttokens");
    let _ = writeln!(out, "{}\t{}\t{}\t{}", ds.name(), s.n_categories, s.n_utterances, s.n_tokens);
    Ok(())
}

fn cmd_prepare(swda: &Path, out_dir: &Path, val_fraction: f64, seed: u64, out: &mut dyn Write) -> Result<(), CliError> {
    if !swda.is_dir() {
        return Err(CliError::Usage(format!("SwDA directory not found: {}", swda.display())));
    }
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(CliError::Usage(format!("--val-fraction must lie in (0, 1), got {val_fraction}")));
    }
    let conv = load_swda_dir(swda, "swda").map_err(CliError::runtime)?;
    let (train_ds, val_ds) = conv
        .dataset
        .split_train_val(val_fraction, seed)
        .map_err(CliError::runtime)?;
    create_dir(out_dir)?;
    for (ds, file) in [(&train_ds, "train.jsonl"), (&val_ds, "val.jsonl")] {
        ds.save(&out_dir.join(file)).map_err(CliError::runtime)?;
        let _ = writeln!(
            out,
            "{file}: {} utterances in {} dialogues",
            ds.len(),
            ds.dialogues().len()
        );
    }
    let _ = writeln!(out, "dropped {} unresolved continuations", conv.dropped_continuations);
    Ok(())
}

/// Inputs an architecture needs beyond the datasets.
fn check_context(kind: ArchitectureKind, opts: &RunOptions) -> Result<(), CliError> {
    let why = format!("for --arch {kind}");
    match kind {
        ArchitectureKind::ProbLstm => Ok(()),
        ArchitectureKind::GloveLstm => require(&opts.embeddings, "embeddings", &why).map(|_| ()),
        _ => require(&opts.sentence_embeddings, "sentence-embeddings", &why).map(|_| ()),
    }
}

fn build_encoder(
    config: &ModelConfig,
    opts: &RunOptions,
    prob_matrix: Option<ProbMatrix>,
) -> Result<Encoder, CliError> {
    let store = || -> Result<SentenceEmbeddingStore, CliError> {
        let path = opts.sentence_embeddings.as_deref().expect("checked");
        SentenceEmbeddingStore::load(path).map_err(CliError::runtime)
    };
    Ok(match config.kind {
        ArchitectureKind::ProbLstm => Encoder::Prob {
            matrix: prob_matrix.expect("prob-lstm needs a matrix"),
            max_len: config.max_len,
        },
        ArchitectureKind::GloveLstm => Encoder::Words {
            table: WordEmbeddingTable::load(opts.embeddings.as_deref().expect("checked"))
                .map_err(CliError::runtime)?,
            max_len: config.max_len,
        },
        ArchitectureKind::UseDense | ArchitectureKind::BertHead => Encoder::Sentence { store: store()? },
        ArchitectureKind::UseConvLstm => Encoder::SentenceContext {
            store: store()?,
            window: config.context_window,
        },
    })
}

fn check_coverage(encoder: &Encoder, datasets: &[&Dataset]) -> Result<(), CliError> {
    let store = match encoder {
        Encoder::Sentence { store } | Encoder::SentenceContext { store, .. } => store,
        _ => return Ok(()),
    };
    let missing: Vec<_> = datasets.iter().flat_map(|d| store.coverage_check(d)).collect();
    if missing.is_empty() {
        return Ok(());
    }
    let shown: Vec<String> = missing.iter().take(10).map(|(d, t)| format!("{d}#{t}")).collect();
    let more = if missing.len() > 10 {
        format!(" and {} more", missing.len() - 10)
    } else {
        String::new()
    };
    Err(CliError::Runtime(format!(
        "sentence embeddings missing for {} utterances: {}{more}",
        missing.len(),
        shown.join(", ")
    )))
}

fn history_csv(tm: &TrainedModel) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if tm.history.is_empty() {
        w.write_record(["epoch", "train_accuracy", "val_accuracy", "mean_loss"])
            .expect("writing to memory");
    }
    for rec in &tm.history {
        w.serialize(rec).expect("writing to memory");
    }
    w.into_inner().expect("flush to memory")
}

fn cmd_train(opts: RunOptions, out: &mut dyn Write) -> Result<(), CliError> {
    let kind = opts
        .arch
        .ok_or_else(|| CliError::Usage("--arch is required".into()))?;
    let train_path = require(&opts.train, "train", "")?;
    if let Some(v) = &opts.val {
        require_file(v, "--val file")?;
    }
    check_context(kind, &opts)?;
    let tc = opts.train_config();
    tc.validate().map_err(model_error)?;
    let base = opts.model_config(kind, 1);
    base.validate().map_err(model_error)?;

    let mode = opts.tokenizer_mode();
    let train_ds = load_dataset(train_path, mode)?;
    let val_ds = match &opts.val {
        Some(v) => load_dataset(v, mode)?,
        None => Dataset::empty("val", mode),
    };
    let prob = match kind {
        ArchitectureKind::ProbLstm => Some(ProbMatrix::build(&train_ds, opts.min_freq()).map_err(CliError::runtime)?),
        _ => None,
    };
    let encoder = build_encoder(&base, &opts, prob.clone())?;
    check_coverage(&encoder, &[&train_ds, &val_ds])?;
    let config = ModelConfig {
        input_dim: encoder.input_dim(),
        ..base
    };
    let model = Model::build(config).map_err(model_error)?;
    let train_set = encoder.encode_dataset(&train_ds).map_err(CliError::runtime)?;
    let val_set = encoder.encode_dataset(&val_ds).map_err(CliError::runtime)?;
    let tm = train(model, &train_set, &val_set, &tc).map_err(CliError::runtime)?;

    let dir = opts.out_dir();
    create_dir(&dir)?;
    save_checkpoint(&tm, &dir.join(CHECKPOINT_FILE)).map_err(CliError::runtime)?;
    write_file(&dir.join(HISTORY_FILE), &history_csv(&tm))?;
    if let Some(m) = &prob {
        m.save(&dir.join(PROB_MATRIX_FILE)).map_err(CliError::runtime)?;
    }
    match tm.history.last() {
        Some(last) => {
            let val = last.val_accuracy.map_or("-".to_string(), acc4);
            let _ = writeln!(out, "acc {} val_acc {val}", acc4(last.train_accuracy));
        }
        None => {
            let _ = writeln!(out, "no epochs run");
        }
    }
    let _ = writeln!(out, "checkpoint written to {}", dir.join(CHECKPOINT_FILE).display());
    Ok(())
}

/// Checkpoint plus the matching encoder, with consistency checks.
fn load_model_and_encoder(
    checkpoint: &Path,
    opts: &RunOptions,
    prob_matrix: Option<&Path>,
) -> Result<(TrainedModel, Encoder), CliError> {
    require_file(checkpoint, "checkpoint")?;
    let tm = load_checkpoint(checkpoint).map_err(CliError::runtime)?;
    let config = tm.config().clone();
    if let Some(k) = opts.arch.filter(|&k| k != config.kind) {
        return Err(CliError::Usage(format!(
            "--arch {k} does not match the checkpoint's {}",
            config.kind
        )));
    }
    check_context(config.kind, opts)?;
    let prob = match config.kind {
        ArchitectureKind::ProbLstm => {
            let default = checkpoint.with_file_name(PROB_MATRIX_FILE);
            let path = prob_matrix.unwrap_or(&default);
            require_file(path, "probability matrix")?;
            Some(ProbMatrix::load(path).map_err(CliError::runtime)?)
        }
        _ => None,
    };
    let encoder = build_encoder(&config, opts, prob)?;
    if encoder.input_dim() != config.input_dim {
        return Err(CliError::Runtime(format!(
            "checkpoint expects input width {}, but the supplied representation has width {}",
            config.input_dim,
            encoder.input_dim()
        )));
    }
    Ok((tm, encoder))
}

fn read_results(path: &Path) -> Result<Vec<ResultRow>, CliError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let cell = |s: &str| -> Result<Option<f64>, CliError> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|_| CliError::Runtime(format!("{}: bad number {s:?}", path.display())))
        }
    };
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        if rec.len() != 4 {
            return Err(CliError::Runtime(format!("{}: expected 4 columns", path.display())));
        }
        rows.push(ResultRow {
            model: rec[0].to_string(),
            acc: cell(&rec[1])?,
            val_acc: cell(&rec[2])?,
            test_acc: cell(&rec[3])?,
        });
    }
    Ok(rows)
}

fn write_results(csv_path: &Path, rows: &[ResultRow]) -> Result<(), CliError> {
    write_file(csv_path, &render_results_table(rows, TableFormat::Csv))?;
    write_file(&csv_path.with_extension("txt"), &render_results_table(rows, TableFormat::Text))
}

fn cmd_evaluate(
    checkpoint: &Path,
    opts: RunOptions,
    prob_matrix: Option<&Path>,
    confusion: ConfusionOptions,
    results: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let test_path = require(&opts.test, "test", "")?;
    let (tm, encoder) = load_model_and_encoder(checkpoint, &opts, prob_matrix)?;
    let test_ds = load_dataset(test_path, opts.tokenizer_mode())?;
    check_coverage(&encoder, &[&test_ds])?;
    let report = evaluate(&tm.model, &test_ds, &encoder).map_err(CliError::runtime)?;

    let dir = opts.out_dir();
    create_dir(&dir)?;
    write_file(&dir.join("metrics.csv"), &render_metrics_csv(&report))?;
    write_file(
        &dir.join("confusion.csv"),
        &render_confusion(&report.confusion, ConfusionFormat::Csv, &confusion),
    )?;
    write_file(
        &dir.join("confusion.svg"),
        &render_confusion(&report.confusion, ConfusionFormat::Svg, &confusion),
    )?;
    let last = tm.history.last();
    let row = ResultRow {
        model: tm.config().kind.display_name().to_string(),
        acc: last.map(|h| h.train_accuracy),
        val_acc: last.and_then(|h| h.val_accuracy),
        test_acc: Some(report.accuracy),
    };
    write_results(&dir.join("results.csv"), std::slice::from_ref(&row))?;
    if let Some(path) = results {
        let mut rows = read_results(path)?;
        match rows.iter_mut().find(|r| r.model == row.model) {
            Some(existing) => *existing = row,
            None => rows.push(row),
        }
        write_results(path, &rows)?;
    }
    let _ = writeln!(out, "accuracy {}", acc4(report.accuracy));
    Ok(())
}

fn cmd_predict(
    checkpoint: &Path,
    opts: RunOptions,
    prob_matrix: Option<&Path>,
    text: Option<String>,
    input: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    require_file(checkpoint, "checkpoint")?;
    if let Some(p) = input {
        require_file(p, "--input file")?;
    }
    let mode = opts.tokenizer_mode();
    let dataset = match (input, text) {
        (Some(p), _) => load_dataset(p, mode)?,
        (None, text) => {
            let lines: Vec<String> = match text {
                Some(t) => vec![t],
                None => std::io::stdin()
                    .lock()
                    .lines()
                    .collect::<Result<_, _>>()
                    .map_err(CliError::runtime)?,
            };
            let utts = lines
                .into_iter()
                .filter(|l| !l.trim().is_empty())
                .enumerate()
                .map(|(i, l)| Utterance::new("input", i, "", l, None))
                .collect();
            Dataset::new("input", mode, utts)
        }
    };
    let (tm, encoder) = load_model_and_encoder(checkpoint, &opts, prob_matrix)?;
    if input.is_none() && tm.config().kind.uses_sentence_vectors() {
        return Err(CliError::Usage(format!(
            "--arch {} needs --input with a dataset covered by --sentence-embeddings",
            tm.config().kind
        )));
    }
    if dataset.is_empty() {
        return Ok(());
    }
    check_coverage(&encoder, &[&dataset])?;
    let preds = predict_dataset(&tm.model, &dataset, &encoder).map_err(CliError::runtime)?;
    for (u, p) in dataset.utterances().iter().zip(preds) {
        let _ = writeln!(out, "{}\t{}", tag_label(p), u.text);
    }
    Ok(())
}

fn cmd_fetch(
    repo: &str,
    numbers: &[u64],
    fixture: Option<&Path>,
    api_base: &str,
    path: &Path,
    concurrency: usize,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (owner, name) = repo
        .split_once('/')
        .ok_or_else(|| CliError::Usage(format!("expected owner/repo, got {repo:?}")))?;
    let refs = numbers
        .iter()
        .map(|&n| IssueRef::new(owner, name, n))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let transport: Box<dyn Transport> = match fixture {
        Some(p) => {
            require_file(p, "fixture")?;
            Box::new(FixtureTransport::load(p).map_err(CliError::runtime)?)
        }
        None => Box::new(LiveTransport::new()),
    };
    let mut client = Client::new(transport.as_ref()).with_env_token();
    client.api_base = api_base.to_string();
    let threads = client.fetch_issues(&refs, concurrency).map_err(CliError::runtime)?;
    let comments: Vec<_> = threads.into_iter().flatten().collect();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let ds = crate::ingest::emit_unlabeled(&comments, path).map_err(CliError::runtime)?;
    let _ = writeln!(
        out,
        "wrote {} utterances from {} issues to {}",
        ds.len(),
        refs.len(),
        path.display()
    );
    Ok(())
}

fn cmd_gen_fixture_embeddings(
    datasets: &[PathBuf],
    dim: usize,
    seed: u64,
    path: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if dim == 0 {
        return Err(CliError::Usage("--dim must be positive".into()));
    }
    for d in datasets {
        require_file(d, "dataset")?;
    }
    let mut store = SentenceEmbeddingStore::new(dim, Some(format!("fixture-seed{seed}")));
    for d in datasets {
        let ds = load_dataset(d, TokenizerMode::Speech)?;
        for u in ds.utterances() {
            if store.get(&u.dialogue_id, u.turn_index).is_none() {
                store
                    .insert(u.key(), fixture_vector(&u.dialogue_id, u.turn_index, dim, seed))
                    .map_err(CliError::runtime)?;
            }
        }
    }
    let mut bytes = Vec::new();
    store.write(&mut bytes).map_err(CliError::runtime)?;
    write_file(path, &bytes)?;
    let _ = writeln!(out, "wrote {} vectors of dim {dim} to {}", store.len(), path.display());
    Ok(())
}
