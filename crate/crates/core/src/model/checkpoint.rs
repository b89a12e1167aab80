//! Checkpoint files.
//!
//! A checkpoint is one JSON document:
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "config": { "kind": "use", "input_dim": 512, "hidden_dim": 128, ... },
//!   "parameters": [ { "name": "dense0.b", "shape": [256], "values": [0.0, ...] }, ... ],
//!   "history": [ { "epoch": 1, "train_accuracy": 0.5, "val_accuracy": 0.4, "mean_loss": 2.1 }, ... ]
//! }
//! ```
//!
//! `config` holds every [`ModelConfig`] field. Parameters appear in name
//! order with row-major values written in shortest round-trip decimal form,
//! so loading reproduces every weight bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::arch::{Model, ModelConfig};
use super::tensor::{Parameters, Tensor};
use super::train::{EpochRecord, TrainedModel};
use super::ModelError;

pub const CHECKPOINT_FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct NamedTensor {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u64,
    config: ModelConfig,
    parameters: Vec<NamedTensor>,
    history: Vec<EpochRecord>,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u64,
}

pub fn checkpoint_to_string(tm: &TrainedModel) -> String {
    let file = CheckpointFile {
        format_version: CHECKPOINT_FORMAT_VERSION,
        config: tm.config().clone(),
        parameters: tm
            .parameters()
            .iter()
            .map(|(name, t)| NamedTensor {
                name: name.clone(),
                shape: t.shape().to_vec(),
                values: t.data().to_vec(),
            })
            .collect(),
        history: tm.history.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("checkpoint serializes");
    s.push('\n');
    s
}

pub fn save_checkpoint(tm: &TrainedModel, path: &Path) -> Result<(), ModelError> {
    fs::write(path, checkpoint_to_string(tm)).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn checkpoint_from_str(text: &str, path: &Path) -> Result<TrainedModel, ModelError> {
    let corrupted = |reason: String| ModelError::CorruptedCheckpoint {
        path: path.to_path_buf(),
        reason,
    };
    let probe: VersionProbe = serde_json::from_str(text).map_err(|e| corrupted(e.to_string()))?;
    if probe.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(ModelError::VersionMismatch {
            path: path.to_path_buf(),
            found: probe.format_version,
            expected: CHECKPOINT_FORMAT_VERSION,
        });
    }
    let file: CheckpointFile = serde_json::from_str(text).map_err(|e| corrupted(e.to_string()))?;
    let mut params = Parameters::new();
    for nt in file.parameters {
        let t = Tensor::new(nt.shape, nt.values).map_err(|e| corrupted(format!("{}: {e}", nt.name)))?;
        if params.insert(nt.name.clone(), t).is_some() {
            return Err(corrupted(format!("duplicate parameter {}", nt.name)));
        }
    }
    let model = Model::from_parts(file.config, params)?;
    Ok(TrainedModel {
        model,
        history: file.history,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<TrainedModel, ModelError> {
    let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    checkpoint_from_str(&text, path)
}
