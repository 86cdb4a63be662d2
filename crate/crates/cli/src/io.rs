use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;

use radtag_core::pipeline::PipelineError;
use radtag_core::preprocess::{CleanSentence, RawReport};

pub type Result<T> = std::result::Result<T, PipelineError>;

pub fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn schema(column: &str, line: usize, message: impl Into<String>) -> PipelineError {
    PipelineError::Schema { column: column.into(), line, message: message.into() }
}

fn columns<const N: usize>(headers: &csv::StringRecord, names: [&str; N]) -> Result<[usize; N]> {
    let mut out = [0; N];
    for (slot, name) in out.iter_mut().zip(names) {
        *slot = headers.iter().position(|h| h == name).ok_or_else(|| schema(name, 1, "missing column"))?;
    }
    Ok(out)
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    if s.is_empty() {
        return Some(NaiveDate::default());
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").or_else(|_| NaiveDate::parse_from_str(s, "%Y%m%d")).ok()
}

/// Reports CSV: `report_id`, `patient_id`, `study_date` (`YYYY-MM-DD`, `YYYYMMDD` or empty), `text`.
pub fn read_raw_reports(path: &Path) -> Result<Vec<RawReport>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let [id, patient, date, text] = columns(rdr.headers()?, ["report_id", "patient_id", "study_date", "text"])?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let d = parse_date(&rec[date]).ok_or_else(|| schema("study_date", i + 2, format!("`{}` is not a date", &rec[date])))?;
        out.push(RawReport::new(&rec[id], &rec[patient], d, &rec[text]));
    }
    Ok(out)
}

pub fn write_sentences(sentences: &[CleanSentence], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["report_id", "index", "tokens", "raw"])?;
    for s in sentences {
        w.write_record([s.report_id.as_str(), &s.index.to_string(), &s.text(), &s.raw])?;
    }
    w.flush()?;
    Ok(())
}

/// `(report_id, index, tokens)` from a sentence CSV.
pub fn read_sentences(path: &Path) -> Result<Vec<(String, usize, String)>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let [id, index, tokens] = columns(rdr.headers()?, ["report_id", "index", "tokens"])?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let idx = rec[index].trim().parse().map_err(|_| schema("index", i + 2, format!("`{}` is not an index", &rec[index])))?;
        out.push((rec[id].to_string(), idx, rec[tokens].to_string()));
    }
    Ok(out)
}

/// Token lists from the `tokens` column (space separated) of any CSV.
pub fn read_token_docs(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let [tokens] = columns(rdr.headers()?, ["tokens"])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        out.push(rec?[tokens].split_whitespace().map(str::to_string).collect());
    }
    Ok(out)
}
