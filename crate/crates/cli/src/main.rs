//! `radtag`: command-line front end for the report labeling toolkit.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use radtag_core::neuralnet::Topology;

#[derive(Parser, Debug)]
#[command(name = "radtag", version, about = "Label Spanish chest x-ray reports")]
struct Cli {
    /// Seed for every random choice made by the command.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract, normalize, split, filter and stem report text.
    Preprocess(PreprocessArgs),
    /// Inspect the concept trees.
    #[command(subcommand)]
    Taxonomy(TaxonomyCmd),
    /// Extract anatomical locations from preprocessed sentences.
    Locextract(LocextractArgs),
    /// Train or query subword embeddings.
    #[command(subcommand)]
    Embed(EmbedCmd),
    /// Cluster document vectors into topics.
    #[command(subcommand)]
    Topics(TopicsCmd),
    /// Train a sentence classifier.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a sentence corpus.
    Eval(EvalArgs),
    /// Compare analytic and numeric gradients on a toy model.
    Gradcheck(GradcheckArgs),
    /// k-fold cross-validation of validation MicroF1 curves.
    Cv(CvArgs),
    /// Multi-label metrics between two label files.
    Metrics(MetricsArgs),
    /// Produce dataset rows from raw reports.
    Annotate(AnnotateArgs),
    /// Resolve `unchanged` labels across each patient's studies.
    Timeline(TimelineArgs),
    /// Train and compare topologies end to end.
    Experiment(ExperimentArgs),
    /// Generate a synthetic labeled sentence corpus.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    /// CSV with columns report_id, patient_id, study_date, text.
    #[arg(long)]
    input: PathBuf,
    /// Sentence CSV to write (stdout if omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    /// key=value preprocessing configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print corpus statistics to stderr.
    #[arg(long)]
    stats: bool,
}

#[derive(Subcommand, Debug)]
enum TaxonomyCmd {
    /// Verify the count identities of a tree file.
    Check {
        file: PathBuf,
        #[arg(long, default_value = "findings")]
        kind: String,
    },
    /// Root-to-node paths of a label.
    Ancestors { label: String },
    /// CUIs of labels.
    Cui {
        #[arg(required = true)]
        labels: Vec<String>,
    },
}

#[derive(Args, Debug)]
struct LocextractArgs {
    /// Rule table (bundled table if omitted).
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Sentence CSV with report_id, index and tokens columns.
    #[arg(long)]
    sentences: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum EmbedCmd {
    /// Train subword embeddings on the `tokens` column of a CSV.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// key=value overrides of the embedding configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write a plain-text `.vec` export.
        #[arg(long)]
        vec: Option<PathBuf>,
    },
    /// Nearest vocabulary tokens of a token.
    Query {
        #[arg(long)]
        model: PathBuf,
        token: String,
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
}

#[derive(Subcommand, Debug)]
enum TopicsCmd {
    /// Train document vectors and cluster them.
    Fit {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 20)]
        k: usize,
        /// Topic model JSON to write.
        #[arg(long)]
        output: PathBuf,
        /// key=value overrides of the document-vector configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also save the document vectors.
        #[arg(long)]
        vectors: Option<PathBuf>,
    },
    /// Top terms per topic.
    Show {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
}

#[derive(Args, Debug)]
struct ModelData {
    /// Sentence corpus CSV (id, split, tokens, labels).
    #[arg(long)]
    corpus: PathBuf,
    /// Subword embeddings used to embed tokens.
    #[arg(long)]
    embeddings: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    topology: Topology,
    /// key=value file with model and trainer fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: ModelData,
    /// Checkpoint to write.
    #[arg(long)]
    output: PathBuf,
    /// Learning-curve CSV to write.
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Sentence corpus CSV.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    /// Split to evaluate: train, validation, test or all.
    #[arg(long, default_value = "test")]
    split: String,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    #[arg(long)]
    topology: Topology,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    /// Sentence length of the random sample.
    #[arg(long, default_value_t = 12)]
    len: usize,
    /// Fail when the maximum relative error reaches this value.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

#[derive(Args, Debug)]
struct CvArgs {
    #[arg(long, default_value_t = 11)]
    k: usize,
    #[arg(long)]
    topology: Topology,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: ModelData,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// CSV: sample id, `;`-joined labels.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Label space, `;`-joined (union of both files if omitted).
    #[arg(long)]
    labels: Option<String>,
}

#[derive(Args, Debug)]
struct AnnotateArgs {
    /// CSV with ReportID, Report and optional metadata columns.
    #[arg(long)]
    reports: PathBuf,
    /// Manual sentence labels (ReportID, Sentence, Labels).
    #[arg(long, conflicts_with_all = ["checkpoint", "embeddings"])]
    gold: Option<PathBuf>,
    #[arg(long, requires = "embeddings")]
    checkpoint: Option<PathBuf>,
    #[arg(long, requires = "checkpoint")]
    embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// key=value preprocessing configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Dataset CSV to write.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct TimelineArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// key=value experiment description.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the configuration).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 30)]
    labels: usize,
    #[arg(long, default_value_t = 500)]
    sentences: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
