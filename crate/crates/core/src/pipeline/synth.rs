//! Seeded synthetic sentence corpora with template-derived gold labels.
//!
//! A finding sentence is a `y`-joined list of segments, each an entity phrase
//! optionally followed by a location phrase. A normality sentence negates one
//! or two entities (`sin X ni Y`) and carries only the `normal` label.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::corpus::{SentenceRecord, Split};
use super::PipelineError;
use crate::config::{ConfigError, KeyValues};
use crate::taxonomy::{is_non_finding, NORMAL, UNCHANGED};
use crate::taxonomy::Taxonomy;

pub const CONNECTOR: &str = "y";
pub const NEGATION: &str = "sin";
pub const NEGATION_JOIN: &str = "ni";
pub const MAX_LABELS_PER_SENTENCE: usize = 9;

/// Stemmed location phrases, each matched by the bundled location rules.
pub const LOCATION_PHRASES: [&str; 16] = [
    "bas",
    "bibasal",
    "apical",
    "lobul inferior derech",
    "lobul superior izquierd",
    "hili derech",
    "hemitorax izquierd",
    "camp pulmonar derech",
    "perihiliar",
    "retrocardiac",
    "subpleural",
    "sen cost derech",
    "lsd",
    "lii",
    "mediastin anterior",
    "column dorsal",
];

/// Tokens inserted at random when `noise_rate > 0`; they carry no label.
pub const FILLERS: [&str; 6] = ["leve", "discret", "probabl", "sutil", "pequen", "sugest"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub seed: u64,
    /// Labels in the corpus, `normal` included.
    pub label_count: usize,
    pub sentence_count: usize,
    /// Per-token probability of inserting a filler before it.
    pub noise_rate: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self { seed: 0, label_count: 30, sentence_count: 500, noise_rate: 0.0 }
    }
}

impl SyntheticSpec {
    pub const KEYS: [&'static str; 4] = ["seed", "label_count", "sentence_count", "noise_rate"];

    pub fn apply(&mut self, kv: &KeyValues) -> Result<(), ConfigError> {
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = kv.parse_opt(stringify!($f))? { self.$f = v; }
            )*};
        }
        set!(seed, label_count, sentence_count, noise_rate);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticGrammar {
    /// `normal` first, then the finding labels with their entity phrases.
    pub labels: Vec<String>,
    pub phrases: Vec<(String, Vec<String>)>,
    pub locations: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub records: Vec<SentenceRecord>,
    pub grammar: SyntheticGrammar,
}

fn words(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_ascii_alphanumeric()).filter(|w| !w.is_empty()).map(str::to_ascii_lowercase).collect()
}

fn reserved() -> BTreeSet<String> {
    let mut r: BTreeSet<String> = [CONNECTOR, NEGATION, NEGATION_JOIN].iter().map(|s| s.to_string()).collect();
    r.extend(FILLERS.iter().map(|s| s.to_string()));
    r.extend(LOCATION_PHRASES.iter().flat_map(|p| words(p)));
    r
}

fn build_grammar(taxonomy: &Taxonomy, label_count: usize, rng: &mut ChaCha8Rng) -> Result<SyntheticGrammar, PipelineError> {
    let reserved = reserved();
    let mut candidates: Vec<String> =
        taxonomy.label_space().into_iter().filter(|l| !is_non_finding(l) && l != UNCHANGED).collect();
    candidates.shuffle(rng);
    let mut phrases: Vec<(String, Vec<String>)> = Vec::new();
    for label in candidates {
        if phrases.len() + 1 == label_count {
            break;
        }
        let p = words(&label);
        if p.is_empty() || p.iter().any(|w| reserved.contains(w)) {
            continue;
        }
        let clash = phrases.iter().any(|(_, q)| q.starts_with(&p) || p.starts_with(q));
        if !clash {
            phrases.push((label, p));
        }
    }
    if phrases.len() + 1 < label_count {
        return Err(PipelineError::InvalidSpec(format!("only {} usable labels", phrases.len() + 1)));
    }
    let mut labels = vec![NORMAL.to_string()];
    labels.extend(phrases.iter().map(|(l, _)| l.clone()));
    Ok(SyntheticGrammar { labels, phrases, locations: LOCATION_PHRASES.iter().map(|p| words(p)).collect() })
}

/// Labels per finding sentence: `n` in 1..=9 with weight 1/n².
fn draw_label_count(rng: &mut ChaCha8Rng, max: usize) -> usize {
    let max = max.min(MAX_LABELS_PER_SENTENCE);
    let weights: Vec<f64> = (1..=max).map(|n| 1.0 / (n * n) as f64).collect();
    let mut u = rng.random::<f64>() * weights.iter().sum::<f64>();
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i + 1;
        }
        u -= w;
    }
    max
}

fn add_noise(tokens: Vec<String>, rate: f64, rng: &mut ChaCha8Rng) -> Vec<String> {
    if rate <= 0.0 {
        return tokens;
    }
    let mut out = Vec::with_capacity(tokens.len());
    for t in tokens {
        if rng.random_bool(rate.min(1.0)) {
            out.push(FILLERS[rng.random_range(0..FILLERS.len())].to_string());
        }
        out.push(t);
    }
    out
}

/// Generate `sentence_count` sentences over `label_count` labels. Every label
/// leads at least `sentence_count / label_count` sentences. About 10 % of the
/// sentences are held out for test, and 10 % of the rest for validation.
pub fn generate_synthetic_corpus(spec: &SyntheticSpec, taxonomy: &Taxonomy) -> Result<SyntheticCorpus, PipelineError> {
    if spec.label_count < 2 {
        return Err(PipelineError::InvalidSpec("label_count must be at least 2".into()));
    }
    if spec.sentence_count < 10 * spec.label_count {
        return Err(PipelineError::SpecTooSmall { needed: 10 * spec.label_count, got: spec.sentence_count });
    }
    if !(0.0..=1.0).contains(&spec.noise_rate) {
        return Err(PipelineError::InvalidSpec("noise_rate must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let grammar = build_grammar(taxonomy, spec.label_count, &mut rng)?;
    let nf = grammar.phrases.len();
    let mut leaders: Vec<usize> = (0..=nf).collect();
    leaders.shuffle(&mut rng);

    let mut records = Vec::with_capacity(spec.sentence_count);
    for i in 0..spec.sentence_count {
        let lead = leaders[i % leaders.len()];
        let (tokens, labels) = if lead == 0 {
            let k = if rng.random_bool(0.3) { 2 } else { 1 };
            let mut picks: Vec<usize> = (0..nf).collect();
            picks.shuffle(&mut rng);
            let mut tokens = vec![NEGATION.to_string()];
            for (j, &p) in picks[..k].iter().enumerate() {
                if j > 0 {
                    tokens.push(NEGATION_JOIN.to_string());
                }
                tokens.extend(grammar.phrases[p].1.iter().cloned());
            }
            (tokens, vec![NORMAL.to_string()])
        } else {
            let n = draw_label_count(&mut rng, nf);
            let mut chosen = vec![lead - 1];
            let mut rest: Vec<usize> = (0..nf).filter(|&p| p != lead - 1).collect();
            rest.shuffle(&mut rng);
            chosen.extend(&rest[..n - 1]);
            let mut tokens = Vec::new();
            for (j, &p) in chosen.iter().enumerate() {
                if j > 0 {
                    tokens.push(CONNECTOR.to_string());
                }
                tokens.extend(grammar.phrases[p].1.iter().cloned());
                if rng.random_bool(0.4) {
                    tokens.extend(grammar.locations[rng.random_range(0..grammar.locations.len())].iter().cloned());
                }
            }
            (tokens, chosen.iter().map(|&p| grammar.phrases[p].0.clone()).collect())
        };
        let tokens = add_noise(tokens, spec.noise_rate, &mut rng);
        records.push(SentenceRecord { id: format!("syn{i:05}"), split: Split::Train, tokens, labels });
    }

    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut rng);
    let n_test = (records.len() as f64 * 0.1).round() as usize;
    let n_val = ((records.len() - n_test) as f64 * 0.1).round() as usize;
    for &i in &order[..n_test] {
        records[i].split = Split::Test;
    }
    for &i in &order[n_test..n_test + n_val] {
        records[i].split = Split::Validation;
    }
    Ok(SyntheticCorpus { records, grammar })
}

/// Recover the labels of a noise-free synthetic sentence from its tokens;
/// `None` if the sentence does not parse under the grammar.
pub fn invert_templates(tokens: &[String], grammar: &SyntheticGrammar) -> Option<Vec<String>> {
    if tokens.first().map(String::as_str) == Some(NEGATION) {
        let body = &tokens[1..];
        let ok = body
            .split(|t| t == NEGATION_JOIN)
            .all(|seg| grammar.phrases.iter().any(|(_, p)| p.as_slice() == seg));
        return ok.then(|| vec![NORMAL.to_string()]);
    }
    let mut labels = Vec::new();
    for seg in tokens.split(|t| t == CONNECTOR) {
        let (label, _) = grammar.phrases.iter().find(|(_, p)| {
            seg.starts_with(p) && {
                let rest = &seg[p.len()..];
                rest.is_empty() || grammar.locations.iter().any(|l| l.as_slice() == rest)
            }
        })?;
        if !labels.contains(label) {
            labels.push(label.clone());
        }
    }
    (!labels.is_empty()).then_some(labels)
}
