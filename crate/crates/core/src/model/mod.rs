//! A small double-precision neural network library: dense, 1-D convolution
//! and LSTM layers with hand-written backward passes, softmax cross-entropy,
//! Adam, the five classifier architectures, training and checkpoints.

pub mod adam;
pub mod arch;
pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod tensor;
pub mod train;

use std::path::PathBuf;

use thiserror::Error;

pub use adam::{adam_step, AdamState, TrainConfig};
pub use arch::{argmax, ArchitectureKind, ForwardCache, Model, ModelConfig, Prediction};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT_VERSION};
pub use gradcheck::{grad_check, grad_check_against};
pub use layers::Activation;
pub use tensor::{Parameters, Tensor};
pub use train::{accuracy, train, EpochRecord, TrainedModel};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("example has no label")]
    Unlabeled,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("{path}: corrupted checkpoint: {reason}")]
    CorruptedCheckpoint { path: PathBuf, reason: String },
    #[error("{path}: checkpoint format version {found}, expected {expected}")]
    VersionMismatch {
        path: PathBuf,
        found: u64,
        expected: u64,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
