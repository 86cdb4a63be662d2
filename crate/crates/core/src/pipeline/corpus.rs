//! Labelled sentence corpora: CSV with columns `id`, `split`, `tokens`
//! (space separated) and `labels` (bracketed list).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::listfmt::{format_list, parse_list};
use super::PipelineError;
use crate::embeddings::SubwordEmbeddingModel;
use crate::neuralnet::{LabeledSet, Sample, Tensor};
use crate::scalar::Scalar;

pub const CORPUS_FIELDS: [&str; 4] = ["id", "split", "tokens", "labels"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceRecord {
    pub id: String,
    pub split: Split,
    pub tokens: Vec<String>,
    /// Gold labels in annotation order.
    pub labels: Vec<String>,
}

impl SentenceRecord {
    pub fn label_set(&self) -> BTreeSet<String> {
        self.labels.iter().cloned().collect()
    }
}

pub fn write_corpus_to(records: &[SentenceRecord], writer: impl Write) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CORPUS_FIELDS)?;
    for r in records {
        w.write_record([r.id.as_str(), r.split.name(), &r.tokens.join(" "), &format_list(&r.labels)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_corpus(records: &[SentenceRecord], path: impl AsRef<Path>) -> Result<(), PipelineError> {
    write_corpus_to(records, std::fs::File::create(path)?)
}

pub fn read_corpus_from(reader: impl Read) -> Result<Vec<SentenceRecord>, PipelineError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    for (i, f) in CORPUS_FIELDS.iter().enumerate() {
        if headers.get(i) != Some(*f) {
            return Err(PipelineError::Schema { column: f.to_string(), line: 1, message: "missing column".into() });
        }
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let schema = |column: &str, message: String| PipelineError::Schema { column: column.into(), line, message };
        out.push(SentenceRecord {
            id: rec[0].to_string(),
            split: rec[1].parse().map_err(|m| schema("split", m))?,
            tokens: rec[2].split_whitespace().map(String::from).collect(),
            labels: parse_list(&rec[3]).map_err(|m| schema("labels", m))?,
        });
    }
    Ok(out)
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<SentenceRecord>, PipelineError> {
    read_corpus_from(std::fs::File::open(path)?)
}

/// Sorted union of all labels in the corpus.
pub fn corpus_label_space(records: &[SentenceRecord]) -> Vec<String> {
    records.iter().flat_map(|r| r.labels.iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect()
}

/// Token matrix of a sentence: one embedding row per token, truncated to `max_len` rows.
pub fn embed_sentence<T: Scalar, E: Scalar>(tokens: &[String], emb: &SubwordEmbeddingModel<E>, max_len: usize) -> Tensor<T> {
    let n = tokens.len().min(max_len);
    let d = emb.dim();
    let mut data = Vec::with_capacity(n * d);
    for t in &tokens[..n] {
        data.extend(emb.embed_token(t).into_iter().map(|v| T::of(v.as_f64())));
    }
    Tensor::matrix(n, d, data)
}

/// Embed every record of one split over `labels`. Records with no tokens are
/// skipped; labels outside `labels` are an error.
pub fn labeled_set<T: Scalar, E: Scalar>(
    records: &[SentenceRecord],
    split: Split,
    labels: &[String],
    emb: &SubwordEmbeddingModel<E>,
    max_len: usize,
) -> Result<LabeledSet<T>, PipelineError> {
    let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut samples = Vec::new();
    for r in records.iter().filter(|r| r.split == split && !r.tokens.is_empty()) {
        let y = r
            .labels
            .iter()
            .map(|l| index.get(l.as_str()).copied().ok_or_else(|| PipelineError::UnknownLabel(l.clone())))
            .collect::<Result<_, _>>()?;
        samples.push(Sample { x: embed_sentence(&r.tokens, emb, max_len), y });
    }
    Ok(LabeledSet { labels: labels.to_vec(), samples })
}
