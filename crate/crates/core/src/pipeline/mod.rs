//! Dataset CSV, synthetic corpora, annotation and experiments.

mod annotate;
mod corpus;
mod dataset;
mod experiment;
mod listfmt;
mod synth;
mod timeline;

use thiserror::Error;

use crate::config::ConfigError;
use crate::embeddings::EmbeddingError;
use crate::locextract::LocError;
use crate::metrics::MetricsError;
use crate::neuralnet::NnError;
use crate::preprocess::PreprocessError;
use crate::taxonomy::TaxonomyError;

pub use annotate::{read_reports, read_reports_from, Annotator, GoldLabeler, NeuralLabeler, ReportInput, SentenceLabeler};
pub use corpus::{
    corpus_label_space, embed_sentence, labeled_set, read_corpus, read_corpus_from, write_corpus, write_corpus_to,
    SentenceRecord, Split, CORPUS_FIELDS,
};
pub use dataset::{
    check_header, read_dataset, read_dataset_from, write_dataset, write_dataset_to, DatasetRow, FIELDS, METHOD_PHYSICIAN,
    METHOD_RNN,
};
pub use experiment::{curve_csv, run_experiment, CorpusSource, ExperimentConfig, ExperimentReport, ResultRow};
pub use listfmt::{format_list, format_nested, parse_list, parse_nested};
pub use synth::{
    generate_synthetic_corpus, invert_templates, SyntheticCorpus, SyntheticGrammar, SyntheticSpec, LOCATION_PHRASES,
};
pub use timeline::{resolve_dataset_timelines, study_date};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("schema error in column `{column}` (line {line}): {message}")]
    Schema { column: String, line: usize, message: String },
    #[error("label `{0}` is not in the taxonomy")]
    UnknownLabel(String),
    #[error("synthetic corpus needs at least {needed} sentences, got {got}")]
    SpecTooSmall { needed: usize, got: usize },
    #[error("{0}")]
    InvalidSpec(String),
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
    Config(#[from] ConfigError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// Malformed input files and labels outside the taxonomy.
    pub fn is_schema(&self) -> bool {
        matches!(
            self,
            PipelineError::Schema { .. }
                | PipelineError::UnknownLabel(_)
                | PipelineError::Taxonomy(TaxonomyError::UnknownLabel(_))
                | PipelineError::Metrics(MetricsError::Schema(_))
        )
    }

    pub fn is_config(&self) -> bool {
        matches!(
            self,
            PipelineError::Config(_)
                | PipelineError::InvalidSpec(_)
                | PipelineError::SpecTooSmall { .. }
                | PipelineError::Nn(NnError::InvalidConfig(_) | NnError::Config(_))
                | PipelineError::Embedding(EmbeddingError::InvalidConfig(_) | EmbeddingError::Config(_))
        )
    }
}
