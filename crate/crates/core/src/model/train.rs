use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState, TrainConfig};
use super::arch::{Model, ModelConfig};
use super::tensor::{accumulate, zeros_like, Parameters};
use super::ModelError;
use crate::representation::EncodedSequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
    pub mean_loss: f64,
}

/// Trained weights plus the per-epoch history.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: Model,
    pub history: Vec<EpochRecord>,
}

impl TrainedModel {
    pub fn config(&self) -> &ModelConfig {
        self.model.config()
    }

    pub fn parameters(&self) -> &Parameters {
        self.model.parameters()
    }
}

/// Fraction of labeled examples whose argmax prediction matches the label.
pub fn accuracy(model: &Model, data: &[EncodedSequence]) -> Result<f64, ModelError> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let hits: Vec<bool> = data
        .par_iter()
        .map(|s| -> Result<bool, ModelError> {
            let label = s.label.ok_or(ModelError::Unlabeled)?;
            Ok(model.predict(s)?.tag == label)
        })
        .collect::<Result<_, _>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / data.len() as f64)
}

/// Minibatch Adam training.
///
/// Each epoch shuffles the example order with a generator seeded from
/// `cfg.seed`. Per-example gradients within a batch run in parallel and are
/// summed in batch order, so results do not depend on thread scheduling.
/// Accuracies are measured after each epoch's updates.
pub fn train(
    mut model: Model,
    train_set: &[EncodedSequence],
    val_set: &[EncodedSequence],
    cfg: &TrainConfig,
) -> Result<TrainedModel, ModelError> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if train_set.iter().chain(val_set).any(|s| s.label.is_none()) {
        return Err(ModelError::Unlabeled);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = AdamState::new(model.parameters());
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut step = 0u64;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let results: Vec<(f64, Parameters)> = batch
                .par_iter()
                .map(|&i| model.loss_and_gradients(&train_set[i]))
                .collect::<Result<_, _>>()?;
            let mut grads = zeros_like(model.parameters());
            for (loss, g) in &results {
                total_loss += loss;
                accumulate(&mut grads, g)?;
            }
            let k = 1.0 / batch.len() as f64;
            grads.values_mut().for_each(|t| t.scale(k));
            step += 1;
            let (params, next) = adam_step(model.parameters(), &grads, &state, step, cfg)?;
            model.set_parameters(params);
            state = next;
        }
        let train_accuracy = accuracy(&model, train_set)?;
        let val_accuracy = if val_set.is_empty() {
            None
        } else {
            Some(accuracy(&model, val_set)?)
        };
        history.push(EpochRecord {
            epoch,
            train_accuracy,
            val_accuracy,
            mean_loss: total_loss / train_set.len() as f64,
        });
    }
    Ok(TrainedModel { model, history })
}
