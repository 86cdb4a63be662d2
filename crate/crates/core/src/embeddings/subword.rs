use std::collections::{BTreeMap, HashMap};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sgns::{decayed_lr, draw_negatives, fnv1a, mean_rows, ns_step, NegativeTable, Vocab};
use super::EmbeddingError;
use crate::config::{ConfigError, KeyValues};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTrainConfig {
    pub dim: usize,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub bucket_count: u32,
    pub lr: f64,
    pub window: usize,
    pub epochs: usize,
    pub min_count: u64,
    pub negatives: usize,
    pub subsample_threshold: f64,
}

impl Default for EmbeddingTrainConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            ngram_min: 3,
            ngram_max: 6,
            bucket_count: 1 << 21,
            lr: 0.025,
            window: 5,
            epochs: 55,
            min_count: 5,
            negatives: 5,
            subsample_threshold: 1e-4,
        }
    }
}

impl EmbeddingTrainConfig {
    pub const KEYS: [&'static str; 10] = [
        "dim",
        "ngram_min",
        "ngram_max",
        "bucket_count",
        "lr",
        "window",
        "epochs",
        "min_count",
        "negatives",
        "subsample_threshold",
    ];

    pub fn apply(&mut self, kv: &KeyValues) -> Result<(), ConfigError> {
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = kv.parse_opt(stringify!($f))? { self.$f = v; }
            )*};
        }
        set!(dim, ngram_min, ngram_max, bucket_count, lr, window, epochs, min_count, negatives, subsample_threshold);
        Ok(())
    }

    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |m: &str| Err(EmbeddingError::InvalidConfig(m.into()));
        if self.dim == 0 || self.window == 0 || self.epochs == 0 || self.min_count == 0 || self.bucket_count == 0 {
            return bad("dim, window, epochs, min_count and bucket_count must be positive");
        }
        if self.ngram_min == 0 || self.ngram_min > self.ngram_max {
            return bad("need 1 ≤ ngram_min ≤ ngram_max");
        }
        if !(self.lr > 0.0) || !(self.subsample_threshold > 0.0) || self.negatives == 0 {
            return bad("lr, subsample_threshold and negatives must be positive");
        }
        Ok(())
    }
}

/// Character n-grams of `<token>` with lengths in `[min, max]`, in order of
/// start position then length.
pub fn char_ngrams(token: &str, min: usize, max: usize) -> Vec<String> {
    let chars: Vec<char> = format!("<{token}>").chars().collect();
    let mut out = Vec::new();
    for i in 0..chars.len() {
        for n in min..=max {
            if i + n > chars.len() {
                break;
            }
            out.push(chars[i..i + n].iter().collect());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubwordEmbeddingModel<T> {
    pub config: EmbeddingTrainConfig,
    /// Token and corpus frequency, most frequent first.
    pub vocab: Vec<(String, u64)>,
    /// One row per vocabulary entry.
    pub word_vectors: Vec<Vec<T>>,
    /// Buckets touched by some vocabulary word; any other bucket is unknown.
    pub ngram_vectors: BTreeMap<u32, Vec<T>>,
    /// Mean negative-sampling loss per epoch.
    pub loss_history: Vec<f64>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> SubwordEmbeddingModel<T> {
    pub fn from_parts(
        config: EmbeddingTrainConfig,
        vocab: Vec<(String, u64)>,
        word_vectors: Vec<Vec<T>>,
        ngram_vectors: BTreeMap<u32, Vec<T>>,
        loss_history: Vec<f64>,
    ) -> Result<Self, EmbeddingError> {
        if vocab.len() != word_vectors.len() {
            return Err(EmbeddingError::Format(format!("{} tokens but {} word vectors", vocab.len(), word_vectors.len())));
        }
        for (i, v) in word_vectors.iter().chain(ngram_vectors.values()).enumerate() {
            if v.len() != config.dim {
                return Err(EmbeddingError::DimensionMismatch { index: i, expected: config.dim, got: v.len() });
            }
        }
        let index = vocab.iter().enumerate().map(|(i, (w, _))| (w.clone(), i)).collect();
        Ok(Self { config, vocab, word_vectors, ngram_vectors, loss_history, index })
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn frequency(&self, token: &str) -> Option<u64> {
        self.index.get(token).map(|&i| self.vocab[i].1)
    }

    /// Bucket ids of the token's n-grams, with multiplicity.
    pub fn buckets(&self, token: &str) -> Vec<u32> {
        char_ngrams(token, self.config.ngram_min, self.config.ngram_max)
            .iter()
            .map(|g| fnv1a(g) % self.config.bucket_count)
            .collect()
    }

    /// Mean of the word vector (for vocabulary tokens) and the trained n-gram
    /// vectors; zero if nothing is known.
    pub fn embed_token(&self, token: &str) -> Vec<T> {
        let mut rows: Vec<&[T]> =
            self.buckets(token).iter().filter_map(|b| self.ngram_vectors.get(b).map(Vec::as_slice)).collect();
        if let Some(&i) = self.index.get(token) {
            rows.insert(0, &self.word_vectors[i]);
        }
        let mut out = vec![T::zero(); self.dim()];
        if rows.is_empty() {
            return out;
        }
        for r in &rows {
            for (a, &b) in out.iter_mut().zip(r.iter()) {
                *a += b;
            }
        }
        let n = T::of(rows.len() as f64);
        out.iter_mut().for_each(|a| *a /= n);
        out
    }

    /// The `n` vocabulary tokens closest to `token` by cosine similarity.
    pub fn most_similar(&self, token: &str, n: usize) -> Vec<(String, f64)> {
        let q = self.embed_token(token);
        let qn = norm(&q);
        if qn == 0.0 {
            return Vec::new();
        }
        let mut scored: Vec<(String, f64)> = self
            .vocab
            .iter()
            .filter(|(w, _)| w.as_str() != token)
            .filter_map(|(w, _)| {
                let v = self.embed_token(w);
                let vn = norm(&v);
                (vn > 0.0).then(|| (w.clone(), dot(&q, &v) / (qn * vn)))
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(n);
        scored
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x.as_f64() * y.as_f64()).sum()
}

fn norm<T: Scalar>(a: &[T]) -> f64 {
    dot(a, a).sqrt()
}

/// Skip-gram with negative sampling where each centre word is represented by
/// its own vector plus its character n-gram vectors.
pub fn train_subword_embeddings<T: Scalar>(
    corpus: &[Vec<String>],
    cfg: &EmbeddingTrainConfig,
    seed: u64,
) -> Result<SubwordEmbeddingModel<T>, EmbeddingError> {
    cfg.validate()?;
    let vocab = Vocab::build(corpus, cfg.min_count);
    if vocab.len() == 0 {
        return Err(EmbeddingError::EmptyVocabulary { min_count: cfg.min_count });
    }
    let dim = cfg.dim;
    let nv = vocab.len();
    let mut bucket_row: BTreeMap<u32, usize> = BTreeMap::new();
    let word_rows: Vec<Vec<usize>> = vocab
        .words
        .iter()
        .enumerate()
        .map(|(i, (w, _))| {
            let mut rows = vec![i];
            for g in char_ngrams(w, cfg.ngram_min, cfg.ngram_max) {
                let b = fnv1a(&g) % cfg.bucket_count;
                let next = nv + bucket_row.len();
                rows.push(*bucket_row.entry(b).or_insert(next));
            }
            rows
        })
        .collect();
    let n_rows = nv + bucket_row.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 1.0 / dim as f64;
    let mut input: Vec<T> = (0..n_rows * dim).map(|_| T::of(rng.random_range(-bound..bound))).collect();
    let mut output = vec![T::zero(); nv * dim];
    let table = NegativeTable::new(&vocab);
    let keep = vocab.keep_probabilities(cfg.subsample_threshold);
    let docs: Vec<Vec<usize>> = corpus.iter().map(|d| vocab.ids(d)).collect();
    let per_epoch: u64 = docs.iter().map(|d| d.len() as u64).sum();
    let total = per_epoch * cfg.epochs as u64;

    let mut done = 0u64;
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    let mut grad = vec![T::zero(); dim];
    for _ in 0..cfg.epochs {
        let (mut loss, mut pairs) = (0.0, 0u64);
        for doc in &docs {
            let lr = decayed_lr(cfg.lr, done, total);
            done += doc.len() as u64;
            let kept: Vec<usize> = doc.iter().copied().filter(|&w| rng.random::<f64>() < keep[w]).collect();
            for pos in 0..kept.len() {
                let b = rng.random_range(1..=cfg.window);
                let rows = &word_rows[kept[pos]];
                for c in pos.saturating_sub(b)..(pos + b + 1).min(kept.len()) {
                    if c == pos {
                        continue;
                    }
                    let hidden = mean_rows(&input, dim, rows);
                    let negs = draw_negatives(&table, kept[c], cfg.negatives, nv, &mut rng);
                    grad.iter_mut().for_each(|g| *g = T::zero());
                    loss += ns_step(&hidden, &mut output, kept[c], &negs, lr, &mut grad);
                    pairs += 1;
                    for &r in rows {
                        for (a, &g) in input[r * dim..(r + 1) * dim].iter_mut().zip(&grad) {
                            *a += g;
                        }
                    }
                }
            }
        }
        loss_history.push(if pairs == 0 { 0.0 } else { loss / pairs as f64 });
    }

    let row = |r: usize| input[r * dim..(r + 1) * dim].to_vec();
    let word_vectors = (0..nv).map(row).collect();
    let ngram_vectors = bucket_row.iter().map(|(&b, &r)| (b, row(r))).collect();
    SubwordEmbeddingModel::from_parts(cfg.clone(), vocab.words, word_vectors, ngram_vectors, loss_history)
}
