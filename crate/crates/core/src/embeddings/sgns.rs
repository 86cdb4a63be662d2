//! Negative-sampling machinery shared by the word and document trainers.

use std::collections::{BTreeMap, HashMap};

use rand::RngExt;

use crate::scalar::Scalar;

/// 32-bit FNV-1a over the UTF-8 bytes.
pub fn fnv1a(s: &str) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for b in s.bytes() {
        h ^= b as u32;
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

/// Tokens with frequency ≥ `min_count`, most frequent first, ties alphabetical.
#[derive(Debug, Clone)]
pub(crate) struct Vocab {
    pub words: Vec<(String, u64)>,
    pub index: HashMap<String, usize>,
    pub total: u64,
}

impl Vocab {
    pub fn build(corpus: &[Vec<String>], min_count: u64) -> Self {
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for doc in corpus {
            for t in doc {
                *counts.entry(t).or_default() += 1;
            }
        }
        let mut words: Vec<(String, u64)> =
            counts.into_iter().filter(|&(_, c)| c >= min_count).map(|(w, c)| (w.to_string(), c)).collect();
        words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let index = words.iter().enumerate().map(|(i, (w, _))| (w.clone(), i)).collect();
        let total = words.iter().map(|(_, c)| c).sum();
        Self { words, index, total }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn ids(&self, doc: &[String]) -> Vec<usize> {
        doc.iter().filter_map(|t| self.index.get(t).copied()).collect()
    }

    /// Keep probability per word: `sqrt(t/f) + t/f`, capped at 1.
    pub fn keep_probabilities(&self, threshold: f64) -> Vec<f64> {
        self.words
            .iter()
            .map(|&(_, c)| {
                let f = c as f64 / self.total as f64;
                ((threshold / f).sqrt() + threshold / f).min(1.0)
            })
            .collect()
    }
}

/// Sampler over the unigram distribution raised to 0.75.
#[derive(Debug, Clone)]
pub(crate) struct NegativeTable {
    cumulative: Vec<f64>,
}

impl NegativeTable {
    pub fn new(vocab: &Vocab) -> Self {
        let mut acc = 0.0;
        let cumulative = vocab
            .words
            .iter()
            .map(|&(_, c)| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        Self { cumulative }
    }

    pub fn sample(&self, rng: &mut impl RngExt) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let u = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

/// Linear decay to zero over the whole run, floored at 1e-4 of the start.
pub(crate) fn decayed_lr(lr0: f64, done: u64, total: u64) -> f64 {
    let progress = done as f64 / total.max(1) as f64;
    lr0 * (1.0 - progress).max(1e-4)
}

fn log_sigmoid(x: f64) -> f64 {
    -(1.0 + (-x).exp()).ln().min(-(1e-12f64).ln())
}

/// One binary-logistic update of the output rows for `target` and its
/// negatives. Returns the loss; accumulates the gradient for the hidden
/// vector into `grad`.
pub(crate) fn ns_step<T: Scalar>(
    hidden: &[T],
    output: &mut [T],
    target: usize,
    negatives: &[usize],
    lr: f64,
    grad: &mut [T],
) -> f64 {
    let dim = hidden.len();
    let mut loss = 0.0;
    for (k, &o) in std::iter::once(&target).chain(negatives).enumerate() {
        let label = if k == 0 { 1.0 } else { 0.0 };
        let row = &mut output[o * dim..(o + 1) * dim];
        let score: f64 = row.iter().zip(hidden).map(|(&a, &b)| (a * b).as_f64()).sum();
        loss -= if k == 0 { log_sigmoid(score) } else { log_sigmoid(-score) };
        let p = 1.0 / (1.0 + (-score).exp());
        let alpha = T::of(lr * (label - p));
        for d in 0..dim {
            grad[d] += alpha * row[d];
            row[d] += alpha * hidden[d];
        }
    }
    loss
}

/// Draw `n` negatives, skipping the target itself.
pub(crate) fn draw_negatives(table: &NegativeTable, target: usize, n: usize, vocab_len: usize, rng: &mut impl RngExt) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    if vocab_len < 2 {
        return out;
    }
    while out.len() < n {
        let s = table.sample(rng);
        if s != target {
            out.push(s);
        }
    }
    out
}

/// Mean of the given rows of a flat row-major matrix.
pub(crate) fn mean_rows<T: Scalar>(matrix: &[T], dim: usize, rows: &[usize]) -> Vec<T> {
    let mut h = vec![T::zero(); dim];
    for &r in rows {
        for (a, &b) in h.iter_mut().zip(&matrix[r * dim..(r + 1) * dim]) {
            *a += b;
        }
    }
    let inv = T::one() / T::of(rows.len() as f64);
    h.iter_mut().for_each(|a| *a *= inv);
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(""), 0x811c9dc5);
        assert_eq!(fnv1a("a"), 0xe40c292c);
        assert_eq!(fnv1a("foobar"), 0xbf9cf968);
    }

    fn corpus(text: &str) -> Vec<Vec<String>> {
        text.split('|').map(|s| s.split_whitespace().map(String::from).collect()).collect()
    }

    #[test]
    fn vocab_order_and_min_count() {
        let v = Vocab::build(&corpus("b a a|c b a|d"), 2);
        assert_eq!(v.words, vec![("a".to_string(), 3), ("b".to_string(), 2)]);
        assert_eq!(v.total, 5);
        assert_eq!(v.ids(&["d".into(), "b".into()]), vec![1]);
    }

    #[test]
    fn negative_sampling_follows_power_law() {
        let v = Vocab::build(&corpus("a a a a a a a a a a a a a a a a b"), 1);
        let t = NegativeTable::new(&v);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20000;
        let a = (0..n).filter(|_| t.sample(&mut rng) == 0).count() as f64 / n as f64;
        let expect = 16f64.powf(0.75) / (16f64.powf(0.75) + 1.0);
        assert!((a - expect).abs() < 0.01, "{a} vs {expect}");
    }

    #[test]
    fn ns_step_gradient_matches_loss_derivative() {
        let hidden = [0.3, -0.2];
        let out0 = vec![0.5, 0.1, -0.4, 0.7];
        let loss_at = |h: [f64; 2]| {
            let mut o = out0.clone();
            let mut g = [0.0; 2];
            ns_step(&h, &mut o, 0, &[1], 0.0, &mut g)
        };
        let mut o = out0.clone();
        let mut g = [0.0; 2];
        ns_step(&hidden, &mut o, 0, &[1], 1.0, &mut g);
        for d in 0..2 {
            let mut hp = hidden;
            let mut hm = hidden;
            hp[d] += 1e-6;
            hm[d] -= 1e-6;
            let numeric = (loss_at(hp) - loss_at(hm)) / 2e-6;
            assert!((g[d] + numeric).abs() < 1e-6, "{} vs {}", g[d], -numeric);
        }
    }
}
