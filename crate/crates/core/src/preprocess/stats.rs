use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{CleanSentence, PreprocessError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub reports: usize,
    pub sentences: usize,
    /// Tokens after filtering and stemming.
    pub words: usize,
    /// Whitespace words of the normalized sentences before filtering.
    pub raw_words: usize,
    pub vocab_raw: usize,
    pub vocab_stemmed: usize,
    pub mean_tokens: f64,
    pub median_tokens: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Unique stemmed sentences, most frequent first (ties alphabetical).
    pub frequencies: Vec<(String, usize)>,
    /// `pareto[k]` = occurrences covered by the `k + 1` most frequent unique sentences.
    pub pareto: Vec<usize>,
}

impl CorpusStats {
    pub fn unique_sentences(&self) -> usize {
        self.frequencies.len()
    }

    /// Occurrences covered by the top `k` unique sentences.
    pub fn coverage(&self, k: usize) -> usize {
        match k {
            0 => 0,
            k => self.pareto[k.min(self.pareto.len()) - 1],
        }
    }

    pub fn coverage_fraction(&self, k: usize) -> f64 {
        self.coverage(k) as f64 / self.sentences as f64
    }
}

pub fn corpus_stats(corpus: &[CleanSentence]) -> Result<CorpusStats, PreprocessError> {
    if corpus.is_empty() {
        return Err(PreprocessError::EmptyCorpus);
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut vocab_raw = BTreeSet::new();
    let mut vocab_stemmed = BTreeSet::new();
    let mut reports = BTreeSet::new();
    let mut raw_words = 0;
    let mut lengths = Vec::with_capacity(corpus.len());
    for s in corpus {
        *counts.entry(s.text()).or_default() += 1;
        reports.insert(s.report_id.as_str());
        for w in s.raw.split_whitespace() {
            raw_words += 1;
            vocab_raw.insert(w);
        }
        vocab_stemmed.extend(s.tokens.iter().map(String::as_str));
        lengths.push(s.tokens.len());
    }
    let words: usize = lengths.iter().sum();
    lengths.sort_unstable();
    let n = lengths.len();
    let median_tokens = if n % 2 == 1 {
        lengths[n / 2] as f64
    } else {
        (lengths[n / 2 - 1] + lengths[n / 2]) as f64 / 2.0
    };
    let mut frequencies: Vec<(String, usize)> = counts.into_iter().collect();
    frequencies.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let pareto = frequencies
        .iter()
        .scan(0, |acc, (_, c)| {
            *acc += c;
            Some(*acc)
        })
        .collect();
    Ok(CorpusStats {
        reports: reports.len(),
        sentences: n,
        words,
        raw_words,
        vocab_raw: vocab_raw.len(),
        vocab_stemmed: vocab_stemmed.len(),
        mean_tokens: words as f64 / n as f64,
        median_tokens,
        min_tokens: lengths[0],
        max_tokens: lengths[n - 1],
        frequencies,
        pareto,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sentence(text: &str) -> CleanSentence {
        CleanSentence {
            report_id: "r".into(),
            index: 0,
            tokens: text.split_whitespace().map(String::from).collect(),
            raw: text.into(),
        }
    }

    #[test]
    fn repeated_sentences() {
        let corpus: Vec<_> = ["a b", "a b", "c", "a b"].iter().map(|t| sentence(t)).collect();
        let st = corpus_stats(&corpus).unwrap();
        assert_eq!(st.unique_sentences(), 2);
        assert_eq!(st.coverage(1), 3);
        assert_eq!(st.coverage_fraction(1), 0.75);
        assert_eq!(st.frequencies[0], ("a b".to_string(), 3));
        assert_eq!(st.median_tokens, 2.0);
    }

    #[test]
    fn single_sentence() {
        let st = corpus_stats(&[sentence("a b c d e")]).unwrap();
        assert_eq!((st.mean_tokens, st.median_tokens), (5.0, 5.0));
        assert!(matches!(corpus_stats(&[]), Err(PreprocessError::EmptyCorpus)));
    }

    proptest! {
        #[test]
        fn pareto_monotone_and_complete(texts in proptest::collection::vec("[ab]( [ab]){0,2}", 1..40)) {
            let corpus: Vec<_> = texts.iter().map(|t| sentence(t)).collect();
            let st = corpus_stats(&corpus).unwrap();
            prop_assert!(st.pareto.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(*st.pareto.last().unwrap(), corpus.len());
            prop_assert_eq!(st.coverage(usize::MAX), corpus.len());
        }
    }
}
