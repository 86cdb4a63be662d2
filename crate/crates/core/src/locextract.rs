//! Rule-based extraction of anatomical locations from stemmed sentences.
//!
//! A rule file is tab-separated `pattern<TAB>concept`, one rule per line, in
//! priority order. Patterns run over the stemmed sentence (tokens joined with
//! single spaces).

use std::path::Path;

use regex::Regex;
use serde::Serialize;
use thiserror::Error;

use crate::taxonomy::TaxonomyTree;

const DEFAULT_RULES: &str = include_str!("../data/locations.rules");

/// Prefix marking a location inside a per-sentence label sequence.
pub const LOC_PREFIX: &str = "loc ";

#[derive(Debug, Error)]
pub enum LocError {
    #[error("rule row {row}: invalid pattern `{pattern}`: {source}")]
    BadPattern {
        row: usize,
        pattern: String,
        #[source]
        source: regex::Error,
    },
    #[error("rule row {row}: concept `{concept}` is not in the locations tree")]
    UnknownConcept { row: usize, concept: String },
    #[error("rule row {row}: expected `pattern<TAB>concept`")]
    Syntax { row: usize },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct LocationRule {
    pub pattern: Regex,
    pub concept: String,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocationMatch {
    pub concept: String,
    pub span: (usize, usize),
    pub rule_rank: usize,
}

pub fn compile_rules(table: &str, locations: &TaxonomyTree) -> Result<Vec<LocationRule>, LocError> {
    let mut rules = Vec::new();
    for (i, line) in table.lines().enumerate() {
        let row = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (pattern, concept) = line.split_once('\t').ok_or(LocError::Syntax { row })?;
        let concept = concept.trim();
        let pattern = Regex::new(pattern).map_err(|source| LocError::BadPattern {
            row,
            pattern: pattern.to_string(),
            source,
        })?;
        if !locations.contains(concept) {
            return Err(LocError::UnknownConcept { row, concept: concept.to_string() });
        }
        rules.push(LocationRule { pattern, concept: concept.to_string(), rank: rules.len() });
    }
    Ok(rules)
}

pub fn load_rules(path: impl AsRef<Path>, locations: &TaxonomyTree) -> Result<Vec<LocationRule>, LocError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LocError::Io { path: path.display().to_string(), source })?;
    compile_rules(&text, locations)
}

pub fn bundled_rules(locations: &TaxonomyTree) -> Vec<LocationRule> {
    compile_rules(DEFAULT_RULES, locations).expect("bundled rules compile")
}

fn contains(outer: (usize, usize), inner: (usize, usize)) -> bool {
    outer.0 <= inner.0 && inner.1 <= outer.1
}

/// All rule matches that survive span-containment suppression, ordered by start
/// offset. A match is dropped when another match strictly contains it, or when an
/// earlier rule matched exactly the same span.
pub fn find_matches(sentence: &str, rules: &[LocationRule]) -> Vec<LocationMatch> {
    let sentence = sentence.trim();
    let all: Vec<LocationMatch> = rules
        .iter()
        .flat_map(|r| {
            r.pattern.find_iter(sentence).filter(|m| m.start() < m.end()).map(|m| LocationMatch {
                concept: r.concept.clone(),
                span: (m.start(), m.end()),
                rule_rank: r.rank,
            })
        })
        .collect();
    let mut kept: Vec<LocationMatch> = all
        .iter()
        .filter(|m| {
            !all.iter().any(|o| {
                contains(o.span, m.span) && (o.span != m.span || o.rule_rank < m.rule_rank)
            })
        })
        .cloned()
        .collect();
    kept.sort_by_key(|m| (m.span.0, m.rule_rank));
    kept
}

/// Location concepts mentioned in a stemmed sentence, first occurrence kept.
pub fn extract_locations(sentence: &str, rules: &[LocationRule]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for m in find_matches(sentence, rules) {
        if !out.contains(&m.concept) {
            out.push(m.concept);
        }
    }
    out
}

/// The sentence's labels followed by `loc <concept>` for each extracted location.
pub fn attach_locations<S: AsRef<str>>(labels: &[S], sentence: &str, rules: &[LocationRule]) -> Vec<String> {
    if labels.is_empty() {
        return Vec::new();
    }
    let mut out: Vec<String> = labels.iter().map(|l| l.as_ref().to_string()).collect();
    out.extend(extract_locations(sentence, rules).into_iter().map(|c| format!("{LOC_PREFIX}{c}")));
    out
}
