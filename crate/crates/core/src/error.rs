use thiserror::Error;

use crate::config::ConfigError;
use crate::embeddings::EmbeddingError;
use crate::locextract::LocError;
use crate::metrics::MetricsError;
use crate::neuralnet::NnError;
use crate::pipeline::PipelineError;
use crate::preprocess::PreprocessError;
use crate::taxonomy::TaxonomyError;

/// Umbrella error for callers that drive several modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Location(#[from] LocError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 for schema problems, 3 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Pipeline(e) if e.is_schema() => 2,
            Error::Pipeline(e) if e.is_config() => 3,
            Error::Metrics(MetricsError::Schema(_)) => 2,
            Error::Taxonomy(TaxonomyError::Parse { .. } | TaxonomyError::UnknownLabel(_)) => 2,
            Error::Embedding(EmbeddingError::Format(_)) => 2,
            Error::Nn(NnError::Checkpoint(_) | NnError::LabelSpaceMismatch) => 2,
            Error::Config(_) => 3,
            Error::Embedding(EmbeddingError::InvalidConfig(_) | EmbeddingError::Config(_)) => 3,
            Error::Nn(NnError::InvalidConfig(_) | NnError::Config(_)) => 3,
            Error::Preprocess(
                PreprocessError::Config(_) | PreprocessError::BadPattern { .. } | PreprocessError::UnknownStemmer(_),
            ) => 3,
            Error::Location(LocError::Syntax { .. } | LocError::BadPattern { .. } | LocError::UnknownConcept { .. }) => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
