use std::collections::{BTreeMap, BTreeSet};

use super::kmeans::TopicModel;
use super::EmbeddingError;

/// Top `top_n` terms per topic, scored `tf_topic × ln(1 + N / df)` where `df`
/// counts documents of the whole corpus; ties break alphabetically.
pub fn topic_summary<T>(
    topics: &TopicModel<T>,
    corpus: &[Vec<String>],
    top_n: usize,
) -> Result<Vec<Vec<(String, f64)>>, EmbeddingError> {
    if topics.assignment.len() != corpus.len() {
        return Err(EmbeddingError::CorpusMismatch { assignments: topics.assignment.len(), documents: corpus.len() });
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in corpus {
        for t in doc.iter().map(String::as_str).collect::<BTreeSet<_>>() {
            *df.entry(t).or_default() += 1;
        }
    }
    let n = corpus.len() as f64;
    let mut tf: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); topics.k];
    for (doc, &a) in corpus.iter().zip(&topics.assignment) {
        for t in doc {
            *tf[a].entry(t).or_default() += 1;
        }
    }
    Ok(tf
        .into_iter()
        .map(|counts| {
            let mut scored: Vec<(String, f64)> =
                counts.into_iter().map(|(t, c)| (t.to_string(), c as f64 * (1.0 + n / df[t] as f64).ln())).collect();
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            scored.truncate(top_n);
            scored
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(assignment: Vec<usize>, k: usize) -> TopicModel<f32> {
        TopicModel { k, centroids: vec![vec![0.0]; k], assignment, inertia_history: vec![0.0], iterations: 0 }
    }

    fn corpus(text: &str) -> Vec<Vec<String>> {
        text.split('|').map(|s| s.split_whitespace().map(String::from).collect()).collect()
    }

    #[test]
    fn copd_cluster_is_led_by_its_stems() {
        let c = corpus(
            "epoc sign radiolog atrap aere|epoc atrap aere|sign epoc atrap aere bilateral|cardiomegal|sin hallazg|sign cardiomegal",
        );
        let s = topic_summary(&model(vec![0, 0, 0, 1, 1, 1], 2), &c, 3).unwrap();
        let top: BTreeSet<&str> = s[0].iter().map(|(t, _)| t.as_str()).collect();
        assert_eq!(top, ["aere", "atrap", "epoc"].into());
    }

    #[test]
    fn single_and_empty_topics() {
        let c = corpus("derram pleural derech|cardiomegal");
        let s = topic_summary(&model(vec![0, 2], 3), &c, 10).unwrap();
        assert_eq!(s[0].iter().map(|(t, _)| t.as_str()).collect::<Vec<_>>(), vec!["derech", "derram", "pleural"]);
        assert!(s[1].is_empty());
        assert!(topic_summary(&model(vec![0], 1), &c, 3).is_err());
    }
}
