use std::io::{Read, Write};
use std::path::Path;

use super::listfmt::{format_list, format_nested, parse_list, parse_nested};
use super::PipelineError;
use crate::locextract::LOC_PREFIX;

pub const METHOD_PHYSICIAN: &str = "Physician";
pub const METHOD_RNN: &str = "RNN_model";

/// Column names, in file order.
pub const FIELDS: [&str; 16] = [
    "ImageID",
    "ImageDir",
    "StudyID",
    "PatientID",
    "PatientBirth",
    "Projection",
    "Pediatric",
    "MethodProjection",
    "ReportID",
    "Report",
    "MethodLabel",
    "Labels",
    "Localizations",
    "LabelsLocalizationsBySentence",
    "LabelCUIS",
    "LocalizationsCUIS",
];

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetRow {
    pub image_id: String,
    pub image_dir: String,
    pub study_id: String,
    pub patient_id: String,
    pub patient_birth: String,
    pub projection: String,
    pub pediatric: String,
    pub method_projection: String,
    pub report_id: String,
    /// Stemmed report, sentences terminated by ` .`.
    pub report: String,
    pub method_label: String,
    pub labels: Vec<String>,
    /// Each entry starts with `loc `.
    pub localizations: Vec<String>,
    pub labels_localizations_by_sentence: Vec<Vec<String>>,
    pub label_cuis: Vec<String>,
    pub localizations_cuis: Vec<String>,
}

impl DatasetRow {
    fn to_record(&self) -> [String; 16] {
        [
            self.image_id.clone(),
            self.image_dir.clone(),
            self.study_id.clone(),
            self.patient_id.clone(),
            self.patient_birth.clone(),
            self.projection.clone(),
            self.pediatric.clone(),
            self.method_projection.clone(),
            self.report_id.clone(),
            self.report.clone(),
            self.method_label.clone(),
            format_list(&self.labels),
            format_list(&self.localizations),
            format_nested(&self.labels_localizations_by_sentence),
            format_list(&self.label_cuis),
            format_list(&self.localizations_cuis),
        ]
    }

    fn from_record(rec: &csv::StringRecord, line: usize) -> Result<Self, PipelineError> {
        let get = |i: usize| rec.get(i).unwrap_or("").to_string();
        let schema = |i: usize, message: String| PipelineError::Schema { column: FIELDS[i].to_string(), line, message };
        let list = |i: usize| parse_list(rec.get(i).unwrap_or("")).map_err(|m| schema(i, m));
        let row = Self {
            image_id: get(0),
            image_dir: get(1),
            study_id: get(2),
            patient_id: get(3),
            patient_birth: get(4),
            projection: get(5),
            pediatric: get(6),
            method_projection: get(7),
            report_id: get(8),
            report: get(9),
            method_label: get(10),
            labels: list(11)?,
            localizations: list(12)?,
            labels_localizations_by_sentence: parse_nested(rec.get(13).unwrap_or("")).map_err(|m| schema(13, m))?,
            label_cuis: list(14)?,
            localizations_cuis: list(15)?,
        };
        row.validate().map_err(|(i, m)| schema(i, m))?;
        Ok(row)
    }

    /// Field invariants; the error names the offending column index.
    fn validate(&self) -> Result<(), (usize, String)> {
        if self.method_label != METHOD_PHYSICIAN && self.method_label != METHOD_RNN {
            return Err((10, format!("`{}` is neither {METHOD_PHYSICIAN} nor {METHOD_RNN}", self.method_label)));
        }
        if let Some(l) = self.localizations.iter().find(|l| !l.starts_with(LOC_PREFIX)) {
            return Err((12, format!("`{l}` does not start with `{LOC_PREFIX}`")));
        }
        Ok(())
    }
}

/// Check that `headers` are exactly [`FIELDS`].
pub fn check_header(headers: &csv::StringRecord) -> Result<(), PipelineError> {
    for (i, f) in FIELDS.iter().enumerate() {
        match headers.get(i) {
            Some(h) if h == *f => {}
            Some(h) => {
                let message = if headers.iter().any(|x| x == *f) {
                    format!("column out of order (found `{h}` at position {i})")
                } else {
                    "missing column".to_string()
                };
                return Err(PipelineError::Schema { column: f.to_string(), line: 1, message });
            }
            None => return Err(PipelineError::Schema { column: f.to_string(), line: 1, message: "missing column".into() }),
        }
    }
    if let Some(extra) = headers.get(FIELDS.len()) {
        return Err(PipelineError::Schema { column: extra.to_string(), line: 1, message: "unexpected column".into() });
    }
    Ok(())
}

pub fn read_dataset_from(reader: impl Read) -> Result<Vec<DatasetRow>, PipelineError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    check_header(rdr.headers()?)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != FIELDS.len() {
            return Err(PipelineError::Schema {
                column: FIELDS.get(rec.len()).unwrap_or(&"?").to_string(),
                line: i + 2,
                message: format!("{} fields, expected {}", rec.len(), FIELDS.len()),
            });
        }
        rows.push(DatasetRow::from_record(&rec, i + 2)?);
    }
    Ok(rows)
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<DatasetRow>, PipelineError> {
    read_dataset_from(std::fs::File::open(path)?)
}

pub fn write_dataset_to(rows: &[DatasetRow], writer: impl Write) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(FIELDS)?;
    for r in rows {
        w.write_record(r.to_record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset(rows: &[DatasetRow], path: impl AsRef<Path>) -> Result<(), PipelineError> {
    write_dataset_to(rows, std::fs::File::create(path)?)
}
