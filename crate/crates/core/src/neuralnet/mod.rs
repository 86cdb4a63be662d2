//! Tensor autodiff core and the CNN / RNN / CNN-ATT / RNN-ATT sentence classifiers.

pub mod checkpoint;
pub mod cv;
pub mod gradcheck;
pub mod graph;
pub mod loss;
pub mod model;
pub mod optim;
pub mod params;
pub mod tensor;
pub mod train;

use thiserror::Error;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, TrainingMeta};
pub use cv::{cross_validate, CvResult};
pub use gradcheck::{grad_check, toy_config, toy_model, toy_sample, GradCheckReport};
pub use graph::{Graph, Var};
pub use loss::{bce_loss, loss};
pub use model::{attention_head, AttentionHeadParams, ModelConfig, SequenceClassifier, Topology};
pub use optim::{Optimizer, OptimizerKind};
pub use params::{Gradients, ParamStore};
pub use tensor::Tensor;
pub use train::{
    evaluate_model, predict_all, predict_labels, train, EpochRecord, LabeledSet, Sample, TrainOutcome, TrainerConfig,
};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("empty input sequence")]
    EmptySequence,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("label spaces differ")]
    LabelSpaceMismatch,
    #[error("{0} set is empty")]
    EmptySet(&'static str),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("corrupt checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<crate::config::ConfigError> for NnError {
    fn from(e: crate::config::ConfigError) -> Self {
        NnError::Config(e.to_string())
    }
}
