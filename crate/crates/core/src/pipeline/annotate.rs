use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;

use super::corpus::embed_sentence;
use super::dataset::{DatasetRow, METHOD_PHYSICIAN, METHOD_RNN};
use super::listfmt::parse_list;
use super::PipelineError;
use crate::embeddings::SubwordEmbeddingModel;
use crate::locextract::{attach_locations, LocationRule, LOC_PREFIX};
use crate::neuralnet::{predict_labels, SequenceClassifier};
use crate::preprocess::{preprocess_report, report_string, CleanSentence, PreprocessConfig, PreprocessError, RawReport};
use crate::scalar::Scalar;
use crate::taxonomy::{is_non_finding, map_labels_to_cuis, resolve_report_labels, EXCLUDE};
use crate::taxonomy::{LabelSet, Taxonomy};

/// Assigns labels to the sentences of one report.
pub trait SentenceLabeler {
    /// Value of the `MethodLabel` column.
    fn method(&self) -> &str;
    /// One label list per sentence, in sentence order.
    fn label_sentences(&self, report_id: &str, sentences: &[CleanSentence]) -> Result<Vec<Vec<String>>, PipelineError>;
}

/// Manual sentence labels keyed by report id and sentence index.
#[derive(Debug, Clone, Default)]
pub struct GoldLabeler {
    labels: HashMap<(String, usize), Vec<String>>,
}

impl GoldLabeler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, report_id: impl Into<String>, sentence: usize, labels: Vec<String>) {
        self.labels.insert((report_id.into(), sentence), labels);
    }

    /// CSV with columns `ReportID`, `Sentence` (0-based index), `Labels`.
    pub fn read_from(reader: impl Read) -> Result<Self, PipelineError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        for (i, f) in ["ReportID", "Sentence", "Labels"].iter().enumerate() {
            if headers.get(i) != Some(*f) {
                return Err(PipelineError::Schema { column: f.to_string(), line: 1, message: "missing column".into() });
            }
        }
        let mut out = Self::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let schema = |column: &str, message: String| PipelineError::Schema { column: column.into(), line: i + 2, message };
            let idx = rec[1].trim().parse().map_err(|_| schema("Sentence", format!("`{}` is not an index", &rec[1])))?;
            out.insert(&rec[0], idx, parse_list(&rec[2]).map_err(|m| schema("Labels", m))?);
        }
        Ok(out)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

impl SentenceLabeler for GoldLabeler {
    fn method(&self) -> &str {
        METHOD_PHYSICIAN
    }

    fn label_sentences(&self, report_id: &str, sentences: &[CleanSentence]) -> Result<Vec<Vec<String>>, PipelineError> {
        Ok(sentences
            .iter()
            .map(|s| self.labels.get(&(report_id.to_string(), s.index)).cloned().unwrap_or_default())
            .collect())
    }
}

/// Sentence classifier over subword embeddings.
pub struct NeuralLabeler<'a, T: Scalar, E: Scalar> {
    model: &'a SequenceClassifier<T>,
    embeddings: &'a SubwordEmbeddingModel<E>,
    threshold: f64,
}

impl<'a, T: Scalar, E: Scalar> NeuralLabeler<'a, T, E> {
    /// Fails when a model label is not a finding or diagnosis of `taxonomy`,
    /// or when the embedding width does not match the model.
    pub fn new(
        model: &'a SequenceClassifier<T>,
        embeddings: &'a SubwordEmbeddingModel<E>,
        threshold: f64,
        taxonomy: &Taxonomy,
    ) -> Result<Self, PipelineError> {
        if let Some(l) = model.labels.iter().find(|l| taxonomy.tree_of(l).is_none() || taxonomy.is_location(l)) {
            return Err(PipelineError::UnknownLabel(l.clone()));
        }
        if embeddings.dim() != model.config.embed_dim {
            return Err(PipelineError::InvalidSpec(format!(
                "embeddings have {} dimensions, model expects {}",
                embeddings.dim(),
                model.config.embed_dim
            )));
        }
        Ok(Self { model, embeddings, threshold })
    }
}

impl<T: Scalar, E: Scalar> SentenceLabeler for NeuralLabeler<'_, T, E> {
    fn method(&self) -> &str {
        METHOD_RNN
    }

    fn label_sentences(&self, _report_id: &str, sentences: &[CleanSentence]) -> Result<Vec<Vec<String>>, PipelineError> {
        sentences
            .iter()
            .map(|s| {
                let x = embed_sentence::<T, E>(&s.tokens, self.embeddings, self.model.config.max_len);
                let idx = predict_labels(self.model, &x, self.threshold)?;
                Ok(idx.into_iter().map(|i| self.model.labels[i].clone()).collect())
            })
            .collect()
    }
}

/// Raw report with the metadata columns to carry into the output row.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReportInput {
    pub meta: DatasetRow,
    pub text: String,
}

const PASSTHROUGH: [&str; 9] =
    ["ImageID", "ImageDir", "StudyID", "PatientID", "PatientBirth", "Projection", "Pediatric", "MethodProjection", "ReportID"];

/// CSV of raw reports: `ReportID` and `Report` are required; any other
/// dataset metadata column present is copied through.
pub fn read_reports_from(reader: impl Read) -> Result<Vec<ReportInput>, PipelineError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let report_col = col("Report").ok_or_else(|| PipelineError::Schema {
        column: "Report".into(),
        line: 1,
        message: "missing column".into(),
    })?;
    if col("ReportID").is_none() {
        return Err(PipelineError::Schema { column: "ReportID".into(), line: 1, message: "missing column".into() });
    }
    let cols: Vec<Option<usize>> = PASSTHROUGH.iter().map(|c| col(c)).collect();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let v: Vec<String> = cols.iter().map(|c| c.and_then(|i| rec.get(i)).unwrap_or("").to_string()).collect();
        let meta = DatasetRow {
            image_id: v[0].clone(),
            image_dir: v[1].clone(),
            study_id: v[2].clone(),
            patient_id: v[3].clone(),
            patient_birth: v[4].clone(),
            projection: v[5].clone(),
            pediatric: v[6].clone(),
            method_projection: v[7].clone(),
            report_id: v[8].clone(),
            ..Default::default()
        };
        out.push(ReportInput { meta, text: rec.get(report_col).unwrap_or("").to_string() });
    }
    Ok(out)
}

pub fn read_reports(path: impl AsRef<Path>) -> Result<Vec<ReportInput>, PipelineError> {
    read_reports_from(std::fs::File::open(path)?)
}

/// Shared resources for annotation.
pub struct Annotator<'a> {
    pub preprocess: &'a PreprocessConfig,
    pub taxonomy: &'a Taxonomy,
    pub rules: &'a [LocationRule],
}

fn push_unique(v: &mut Vec<String>, s: &str) {
    if !v.iter().any(|x| x == s) {
        v.push(s.to_string());
    }
}

impl Annotator<'_> {
    fn check_labels(&self, labels: &[String]) -> Result<(), PipelineError> {
        match labels.iter().find(|l| self.taxonomy.tree_of(l).is_none() || self.taxonomy.is_location(l)) {
            Some(l) => Err(PipelineError::UnknownLabel(l.clone())),
            None => Ok(()),
        }
    }

    fn excluded(&self, mut row: DatasetRow) -> DatasetRow {
        row.labels = vec![EXCLUDE.to_string()];
        row.labels_localizations_by_sentence = vec![row.labels.clone()];
        row
    }

    /// Fill in `Report` and every label column for one report.
    pub fn annotate_report(&self, input: &ReportInput, labeler: &dyn SentenceLabeler) -> Result<DatasetRow, PipelineError> {
        let mut row = DatasetRow { method_label: labeler.method().to_string(), ..input.meta.clone() };
        let raw = RawReport::new(&row.report_id, &row.patient_id, NaiveDate::default(), &input.text);
        let sentences = match preprocess_report(&raw, self.preprocess) {
            Ok(s) if !s.is_empty() => s,
            Ok(_) | Err(PreprocessError::SectionNotFound(_)) => return Ok(self.excluded(row)),
            Err(e) => return Err(e.into()),
        };
        row.report = report_string(&sentences);
        let per_sentence = labeler.label_sentences(&row.report_id, &sentences)?;
        if per_sentence.len() != sentences.len() {
            return Err(PipelineError::InvalidSpec(format!(
                "labeler returned {} label lists for {} sentences of report {}",
                per_sentence.len(),
                sentences.len(),
                row.report_id
            )));
        }
        for labels in &per_sentence {
            self.check_labels(labels)?;
        }
        let sets: Vec<LabelSet> = per_sentence.iter().map(|l| l.iter().cloned().collect()).collect();
        let resolved = resolve_report_labels(&sets);

        for (sentence, labels) in sentences.iter().zip(&per_sentence) {
            let mut kept: Vec<String> = Vec::new();
            for l in labels.iter().filter(|l| resolved.contains(*l)) {
                push_unique(&mut kept, l);
            }
            if kept.is_empty() {
                continue;
            }
            let group = if kept.iter().any(|l| !is_non_finding(l)) {
                attach_locations(&kept, &sentence.text(), self.rules)
            } else {
                kept
            };
            for entry in &group {
                if entry.starts_with(LOC_PREFIX) {
                    push_unique(&mut row.localizations, entry);
                } else {
                    push_unique(&mut row.labels, entry);
                }
            }
            row.labels_localizations_by_sentence.push(group);
        }
        self.fill_cuis(&mut row)?;
        Ok(row)
    }

    /// Recompute `LabelCUIS` and `LocalizationsCUIS` from the label columns.
    pub fn fill_cuis(&self, row: &mut DatasetRow) -> Result<(), PipelineError> {
        row.label_cuis = map_labels_to_cuis(&row.labels, self.taxonomy)?;
        row.localizations_cuis.clear();
        for loc in &row.localizations {
            let name = loc.strip_prefix(LOC_PREFIX).unwrap_or(loc);
            if let Some(cui) = self.taxonomy.locations.cui_of(name)? {
                push_unique(&mut row.localizations_cuis, cui);
            }
        }
        Ok(())
    }

    pub fn annotate_dataset(&self, inputs: &[ReportInput], labeler: &dyn SentenceLabeler) -> Result<Vec<DatasetRow>, PipelineError> {
        inputs.iter().map(|i| self.annotate_report(i, labeler)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locextract::bundled_rules;

    fn input(id: &str, text: &str) -> ReportInput {
        ReportInput { meta: DatasetRow { report_id: id.into(), ..Default::default() }, text: text.into() }
    }

    #[test]
    fn normal_only_and_empty_reports() {
        let tax = Taxonomy::bundled();
        let rules = bundled_rules(&tax.locations);
        let pre = PreprocessConfig::default();
        let ann = Annotator { preprocess: &pre, taxonomy: &tax, rules: &rules };
        let mut gold = GoldLabeler::new();
        gold.insert("r1", 0, vec!["normal".into()]);
        gold.insert("r1", 1, vec!["normal".into()]);
        let row = ann.annotate_report(&input("r1", "Hallazgos: Sin alteraciones. Sin derrame pleural."), &gold).unwrap();
        assert_eq!(row.labels, vec!["normal"]);
        assert_eq!(row.labels_localizations_by_sentence, vec![vec!["normal"], vec!["normal"]]);
        assert!(row.localizations.is_empty());
        let empty = ann.annotate_report(&input("r2", ""), &gold).unwrap();
        assert_eq!(empty.labels, vec!["exclude"]);
        assert_eq!(empty.method_label, METHOD_PHYSICIAN);
    }

    #[test]
    fn normal_is_dropped_next_to_findings_and_unknown_labels_fail() {
        let tax = Taxonomy::bundled();
        let rules = bundled_rules(&tax.locations);
        let pre = PreprocessConfig::default();
        let ann = Annotator { preprocess: &pre, taxonomy: &tax, rules: &rules };
        let mut gold = GoldLabeler::new();
        gold.insert("r", 0, vec!["normal".into()]);
        gold.insert("r", 1, vec!["cardiomegaly".into()]);
        let row = ann.annotate_report(&input("r", "Hallazgos: Sin derrame. Cardiomegalia."), &gold).unwrap();
        assert_eq!(row.labels, vec!["cardiomegaly"]);
        assert_eq!(row.labels_localizations_by_sentence, vec![vec!["cardiomegaly", "loc cardiac"]]);
        assert_eq!(row.localizations, vec!["loc cardiac"]);
        gold.insert("r", 1, vec!["no such label".into()]);
        assert!(matches!(ann.annotate_report(&input("r", "Hallazgos: Sin derrame. Cardiomegalia."), &gold), Err(PipelineError::UnknownLabel(_))));
    }

    #[test]
    fn gold_file_and_reports_file() {
        let g = GoldLabeler::read_from("ReportID,Sentence,Labels\nr,1,\"['kyphosis']\"\n".as_bytes()).unwrap();
        assert_eq!(g.labels[&("r".to_string(), 1)], vec!["kyphosis"]);
        assert!(GoldLabeler::read_from("ReportID,Labels\n".as_bytes()).unwrap_err().is_schema());
        let r = read_reports_from("ReportID,PatientID,Report\n7,p,texto\n".as_bytes()).unwrap();
        assert_eq!(r[0].meta.patient_id, "p");
        assert_eq!(r[0].text, "texto");
        assert!(read_reports_from("ReportID,Text\n".as_bytes()).unwrap_err().is_schema());
    }
}
