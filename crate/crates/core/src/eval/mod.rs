//! Scoring: accuracy, per-tag precision/recall/F1, averages and confusion
//! matrices, plus their CSV/SVG/text renderings.

pub mod render;

use thiserror::Error;

use crate::corpus::{Dataset, TagId, TagSet, NUM_TAGS};
use crate::model::{Model, ModelError};
use crate::representation::{Encoder, RepresentationError};

pub use render::{
    parse_metrics_csv, render_confusion, render_metrics_csv, render_results_table, round_half_up,
    ConfusionFormat, ConfusionOptions, MetricsRow, ResultRow, TableFormat,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("utterance {dialogue_id}#{turn_index} has no tag")]
    Unlabeled { dialogue_id: String, turn_index: usize },
    #[error("{predictions} predictions for {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("tag id {0} out of range")]
    TagOutOfRange(TagId),
    #[error(transparent)]
    Representation(#[from] RepresentationError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Counts indexed `[true tag][predicted tag]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl Default for ConfusionMatrix {
    fn default() -> Self {
        ConfusionMatrix::new()
    }
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; NUM_TAGS]; NUM_TAGS],
        }
    }

    pub fn from_pairs(labels: &[TagId], predictions: &[TagId]) -> Result<Self, EvalError> {
        if labels.len() != predictions.len() {
            return Err(EvalError::LengthMismatch {
                predictions: predictions.len(),
                labels: labels.len(),
            });
        }
        let mut cm = ConfusionMatrix::new();
        for (&t, &p) in labels.iter().zip(predictions) {
            cm.record(t, p)?;
        }
        Ok(cm)
    }

    pub fn record(&mut self, truth: TagId, predicted: TagId) -> Result<(), EvalError> {
        for id in [truth, predicted] {
            if id >= NUM_TAGS {
                return Err(EvalError::TagOutOfRange(id));
            }
        }
        self.counts[truth][predicted] += 1;
        Ok(())
    }

    pub fn get(&self, truth: TagId, predicted: TagId) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    /// Support of `truth`.
    pub fn row_sum(&self, truth: TagId) -> u64 {
        self.counts[truth].iter().sum()
    }

    /// Number of predictions of `predicted`.
    pub fn col_sum(&self, predicted: TagId) -> u64 {
        self.counts.iter().map(|r| r[predicted]).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_TAGS).map(|i| self.counts[i][i]).sum()
    }

    /// trace / total, or 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        ratio(self.trace(), self.total())
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `2PR / (P + R)`, or 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Precision/recall/F1 triple.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-tag metrics indexed by tag id.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub classes: Vec<ClassMetrics>,
}

impl ClassReport {
    pub fn total_support(&self) -> u64 {
        self.classes.iter().map(|c| c.support).sum()
    }
}

/// Per-tag metrics; any zero denominator yields 0.
pub fn precision_recall_f1(cm: &ConfusionMatrix) -> ClassReport {
    let classes = (0..NUM_TAGS)
        .map(|j| {
            let tp = cm.get(j, j);
            let precision = ratio(tp, cm.col_sum(j));
            let recall = ratio(tp, cm.row_sum(j));
            ClassMetrics {
                precision,
                recall,
                f1: f1_score(precision, recall),
                support: cm.row_sum(j),
            }
        })
        .collect();
    ClassReport { classes }
}

/// `(macro, weighted)`: the unweighted mean over every class and the
/// support-weighted mean.
pub fn averages(report: &ClassReport) -> (Averages, Averages) {
    let n = report.classes.len().max(1) as f64;
    let mut macro_avg = Averages::default();
    let mut weighted = Averages::default();
    let total = report.total_support() as f64;
    for c in &report.classes {
        macro_avg.precision += c.precision / n;
        macro_avg.recall += c.recall / n;
        macro_avg.f1 += c.f1 / n;
        if total > 0.0 {
            let w = c.support as f64 / total;
            weighted.precision += w * c.precision;
            weighted.recall += w * c.recall;
            weighted.f1 += w * c.f1;
        }
    }
    (macro_avg, weighted)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub class_report: ClassReport,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub confusion: ConfusionMatrix,
}

impl EvalReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        let class_report = precision_recall_f1(&confusion);
        let (macro_avg, weighted_avg) = averages(&class_report);
        EvalReport {
            accuracy: confusion.accuracy(),
            class_report,
            macro_avg,
            weighted_avg,
            confusion,
        }
    }

    pub fn from_predictions(labels: &[TagId], predictions: &[TagId]) -> Result<Self, EvalError> {
        Ok(EvalReport::from_confusion(ConfusionMatrix::from_pairs(labels, predictions)?))
    }
}

/// Predicted tag id for every utterance, in dataset order.
pub fn predict_dataset(model: &Model, dataset: &Dataset, encoder: &Encoder) -> Result<Vec<TagId>, EvalError> {
    use rayon::prelude::*;
    let encoded = encoder.encode_dataset(dataset)?;
    let preds = encoded
        .par_iter()
        .map(|s| model.predict(s).map(|p| p.tag))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(preds)
}

/// Score `model` on a fully labeled dataset.
pub fn evaluate(model: &Model, dataset: &Dataset, encoder: &Encoder) -> Result<EvalReport, EvalError> {
    let labels = dataset
        .utterances()
        .iter()
        .map(|u| {
            u.tag.map(|t| t.id()).ok_or_else(|| EvalError::Unlabeled {
                dialogue_id: u.dialogue_id.clone(),
                turn_index: u.turn_index,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let predictions = predict_dataset(model, dataset, encoder)?;
    EvalReport::from_predictions(&labels, &predictions)
}

/// Label for a tag id in the standard tagset.
pub fn tag_label(id: TagId) -> &'static str {
    TagSet::damsl().get(id).map_or("?", |t| t.label())
}
