//! Subword word embeddings, paragraph vectors and k-means topics.
//!
//! Everything trains single-threaded from a seeded ChaCha8 stream, so two
//! runs with the same seed produce bit-identical vectors.

mod docvec;
mod io;
mod kmeans;
mod sgns;
mod subword;
mod topics;

use thiserror::Error;

use crate::config::ConfigError;

pub use docvec::{train_doc_vectors, DocVecConfig, DocVectorModel};
pub use io::{
    export_vec, load_doc_vectors, load_subword, save_doc_vectors, save_subword, DOCVEC_MAGIC, EMBEDDING_FORMAT_VERSION,
    SUBWORD_MAGIC,
};
pub use kmeans::{kmeans_cluster, TopicModel, MAX_LLOYD_ITERATIONS};
pub use sgns::fnv1a;
pub use subword::{char_ngrams, train_subword_embeddings, EmbeddingTrainConfig, SubwordEmbeddingModel};
pub use topics::topic_summary;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("no token occurs at least {min_count} times")]
    EmptyVocabulary { min_count: u64 },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("need at least {k} vectors, got {got}")]
    TooFewVectors { k: usize, got: usize },
    #[error("vector {index} has length {got}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, got: usize },
    #[error("{assignments} topic assignments for {documents} documents")]
    CorpusMismatch { assignments: usize, documents: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
