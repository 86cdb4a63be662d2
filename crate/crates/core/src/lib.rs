//! Automatic labeling toolkit for Spanish chest x-ray reports.
//!
//! The crate is organised the way reports flow through it:
//!
//! * [`preprocess`] turns raw report text into stemmed sentences.
//! * [`taxonomy`] hosts the findings / diagnoses / locations trees and the
//!   report-level label resolution rules.
//! * [`locextract`] pulls anatomical locations out of stemmed sentences.
//! * [`embeddings`] trains subword word vectors, document vectors and k-means topics.
//! * [`neuralnet`] is a small reverse-mode autodiff core with the CNN, RNN,
//!   CNN-ATT and RNN-ATT sentence classifiers.
//! * [`metrics`] is the multi-label evaluation suite.
//! * [`pipeline`] wires everything together: dataset CSV, synthetic corpora,
//!   annotation and experiments.
//!
//! Numeric code is generic over [`Scalar`] (`f32` / `f64`) and the metrics
//! additionally run on exact rationals; the aliases below pin the concrete
//! types used by the command-line tool.

pub mod config;
pub mod embeddings;
pub mod error;
pub mod locextract;
pub mod metrics;
pub mod neuralnet;
pub mod pipeline;
pub mod preprocess;
pub mod scalar;
pub mod taxonomy;

pub use error::{Error, Result};
pub use scalar::{MetricScalar, Scalar};

/// Exact rational used for bit-exact metric checks.
pub type Rational = num_rational::Ratio<i64>;

/// Dense row-major tensor in double precision (training precision).
pub type Tensor64 = neuralnet::Tensor<f64>;
/// Dense row-major tensor in single precision (storage precision).
pub type Tensor32 = neuralnet::Tensor<f32>;
/// Sentence classifier at training precision.
pub type Classifier = neuralnet::SequenceClassifier<f64>;
/// Subword embedding model as stored on disk.
pub type SubwordEmbeddings = embeddings::SubwordEmbeddingModel<f32>;
/// Document vectors as stored on disk.
pub type DocVectors = embeddings::DocVectorModel<f32>;
/// k-means topics over single-precision document vectors.
pub type Topics = embeddings::TopicModel<f32>;
/// Floating-point metric report.
pub type Metrics = metrics::MetricsReport<f64>;
/// Metric report computed in exact rational arithmetic.
pub type ExactMetrics = metrics::MetricsReport<Rational>;
