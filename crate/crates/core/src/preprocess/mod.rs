//! Report text normalization: section extraction, accent folding, sentence
//! splitting, stopword filtering and stemming.

pub mod stats;
pub mod stemmer;

use std::collections::BTreeSet;
use std::path::Path;

use chrono::NaiveDate;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::config::{ConfigError, KeyValues};
pub use stats::{corpus_stats, CorpusStats};
pub use stemmer::{stem, StemmerKind};

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_es.txt");
const DEFAULT_SECTIONS: &str = include_str!("../../data/sections.txt");

/// Words kept even though they appear in the stopword list.
pub const STOPWORD_EXCEPTIONS: [&str; 4] = ["sin", "no", "ni", "con"];

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("report {0}: no radiography section found")]
    SectionNotFound(String),
    #[error("corpus contains no sentences")]
    EmptyCorpus,
    #[error("invalid section pattern `{pattern}`: {source}")]
    BadPattern {
        pattern: String,
        #[source]
        source: regex::Error,
    },
    #[error("unknown stemmer `{0}`")]
    UnknownStemmer(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawReport {
    pub report_id: String,
    pub patient_id: String,
    pub study_date: NaiveDate,
    pub text: String,
}

impl RawReport {
    pub fn new(report_id: impl Into<String>, patient_id: impl Into<String>, study_date: NaiveDate, text: impl Into<String>) -> Self {
        Self { report_id: report_id.into(), patient_id: patient_id.into(), study_date, text: text.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanSentence {
    pub report_id: String,
    pub index: usize,
    pub tokens: Vec<String>,
    /// Normalized sentence text before stopword removal and stemming.
    pub raw: String,
}

impl CleanSentence {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    pub section_regexes: Vec<Regex>,
    pub stopwords: BTreeSet<String>,
    pub stopword_exceptions: BTreeSet<String>,
    pub stemmer: StemmerKind,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self::from_sources(DEFAULT_SECTIONS, DEFAULT_STOPWORDS, StemmerKind::SnowballSpanish)
            .expect("bundled preprocessing data is valid")
    }
}

impl PreprocessConfig {
    /// Build from the text of a pattern file and a stopword file.
    pub fn from_sources(sections: &str, stopwords: &str, stemmer: StemmerKind) -> Result<Self, PreprocessError> {
        let section_regexes = parse_patterns(sections)?;
        let stopwords = stopwords
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(normalize_text)
            .filter(|w| !w.is_empty())
            .collect();
        Ok(Self {
            section_regexes,
            stopwords,
            stopword_exceptions: STOPWORD_EXCEPTIONS.iter().map(|s| s.to_string()).collect(),
            stemmer,
        })
    }

    /// Load a `key=value` file with keys `stopwords`, `sections`, `stemmer`.
    /// Missing keys fall back to the bundled resources.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PreprocessError> {
        let kv = KeyValues::load(path)?;
        kv.reject_unknown(&["stopwords", "sections", "stemmer"])?;
        let read = |key: &str, fallback: &str| -> Result<String, PreprocessError> {
            match kv.path(key) {
                Some(p) => std::fs::read_to_string(&p).map_err(|source| {
                    PreprocessError::Config(ConfigError::Io { path: p.display().to_string(), source })
                }),
                None => Ok(fallback.to_string()),
            }
        };
        let stemmer = match kv.get("stemmer") {
            Some(id) => StemmerKind::parse(id).ok_or_else(|| PreprocessError::UnknownStemmer(id.to_string()))?,
            None => StemmerKind::SnowballSpanish,
        };
        Self::from_sources(&read("sections", DEFAULT_SECTIONS)?, &read("stopwords", DEFAULT_STOPWORDS)?, stemmer)
    }

    pub fn is_filtered(&self, token: &str) -> bool {
        self.stopwords.contains(token) && !self.stopword_exceptions.contains(token)
    }
}

fn parse_patterns(text: &str) -> Result<Vec<Regex>, PreprocessError> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            Regex::new(l).map_err(|source| PreprocessError::BadPattern { pattern: l.to_string(), source })
        })
        .collect()
}

/// Lowercase, fold accents, keep only ASCII alphanumerics, spaces and dots.
pub fn normalize_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.nfd().filter(|c| !is_combining_mark(*c)).flat_map(char::to_lowercase) {
        if c.is_whitespace() {
            pending_space = true;
        } else if c.is_ascii_alphanumeric() || c == '.' {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        }
    }
    out
}

/// Return the radiography description of `report` using the first pattern that matches.
pub fn extract_radiography_section<'a>(report: &'a RawReport, cfg: &PreprocessConfig) -> Result<&'a str, PreprocessError> {
    let not_found = || PreprocessError::SectionNotFound(report.report_id.clone());
    for re in &cfg.section_regexes {
        if let Some(caps) = re.captures(&report.text) {
            let m = caps.get(1).or_else(|| caps.get(0)).ok_or_else(not_found)?;
            let body = m.as_str().trim();
            return if body.is_empty() { Err(not_found()) } else { Ok(body) };
        }
    }
    Err(not_found())
}

pub fn split_sentences(text: &str) -> Vec<String> {
    text.split('.').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

pub fn tokenize_filter_stem(sentence: &str, cfg: &PreprocessConfig) -> Vec<String> {
    sentence
        .split_whitespace()
        .filter(|t| !cfg.is_filtered(t))
        .map(|t| cfg.stemmer.stem(t))
        .filter(|t| !t.is_empty() && !cfg.is_filtered(t))
        .collect()
}

/// Sentences of an already extracted section.
pub fn preprocess_text(report_id: &str, section: &str, cfg: &PreprocessConfig) -> Vec<CleanSentence> {
    split_sentences(&normalize_text(section))
        .into_iter()
        .filter_map(|raw| {
            let tokens = tokenize_filter_stem(&raw, cfg);
            (!tokens.is_empty()).then_some((raw, tokens))
        })
        .enumerate()
        .map(|(index, (raw, tokens))| CleanSentence { report_id: report_id.to_string(), index, tokens, raw })
        .collect()
}

pub fn preprocess_report(report: &RawReport, cfg: &PreprocessConfig) -> Result<Vec<CleanSentence>, PreprocessError> {
    let section = extract_radiography_section(report, cfg)?;
    Ok(preprocess_text(&report.report_id, section, cfg))
}

/// Join stemmed sentences into the single-string report form (`"a b . c ."`).
pub fn report_string(sentences: &[CleanSentence]) -> String {
    sentences.iter().map(|s| format!("{} .", s.text())).collect::<Vec<_>>().join(" ")
}
