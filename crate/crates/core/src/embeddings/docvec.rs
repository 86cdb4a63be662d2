use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sgns::{decayed_lr, draw_negatives, mean_rows, ns_step, NegativeTable, Vocab};
use super::EmbeddingError;
use crate::config::{ConfigError, KeyValues};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocVecConfig {
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub min_count: u64,
    pub negatives: usize,
    pub subsample_threshold: f64,
    pub lr: f64,
}

impl Default for DocVecConfig {
    fn default() -> Self {
        Self { dim: 300, window: 10, epochs: 55, min_count: 5, negatives: 5, subsample_threshold: 1e-3, lr: 0.025 }
    }
}

impl DocVecConfig {
    pub const KEYS: [&'static str; 7] = ["dim", "window", "epochs", "min_count", "negatives", "subsample_threshold", "lr"];

    pub fn apply(&mut self, kv: &KeyValues) -> Result<(), ConfigError> {
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = kv.parse_opt(stringify!($f))? { self.$f = v; }
            )*};
        }
        set!(dim, window, epochs, min_count, negatives, subsample_threshold, lr);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocVectorModel<T> {
    pub config: DocVecConfig,
    /// One vector per training document, in corpus order.
    pub doc_vectors: Vec<Vec<T>>,
    pub loss_history: Vec<f64>,
}

impl<T> DocVectorModel<T> {
    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn len(&self) -> usize {
        self.doc_vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_vectors.is_empty()
    }
}

/// Paragraph vectors, distributed-memory flavour: the document vector and the
/// surrounding word vectors are averaged to predict each centre word.
/// Documents with no word above `min_count` keep their random initialisation.
pub fn train_doc_vectors<T: Scalar>(
    corpus: &[Vec<String>],
    cfg: &DocVecConfig,
    seed: u64,
) -> Result<DocVectorModel<T>, EmbeddingError> {
    if corpus.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    if cfg.dim == 0 || cfg.window == 0 || cfg.epochs == 0 || cfg.negatives == 0 || !(cfg.lr > 0.0) {
        return Err(EmbeddingError::InvalidConfig("dim, window, epochs, negatives and lr must be positive".into()));
    }
    let vocab = Vocab::build(corpus, cfg.min_count);
    let dim = cfg.dim;
    let nv = vocab.len();
    let nd = corpus.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 0.5 / dim as f64;
    let mut input: Vec<T> = (0..(nv + nd) * dim).map(|_| T::of(rng.random_range(-bound..bound))).collect();
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    if nv == 0 {
        loss_history.resize(cfg.epochs, 0.0);
    } else {
        let mut output = vec![T::zero(); nv * dim];
        let table = NegativeTable::new(&vocab);
        let keep = vocab.keep_probabilities(cfg.subsample_threshold);
        let docs: Vec<Vec<usize>> = corpus.iter().map(|d| vocab.ids(d)).collect();
        let total = docs.iter().map(|d| d.len() as u64).sum::<u64>() * cfg.epochs as u64;
        let mut done = 0u64;
        let mut grad = vec![T::zero(); dim];
        for _ in 0..cfg.epochs {
            let (mut loss, mut steps) = (0.0, 0u64);
            for (d, doc) in docs.iter().enumerate() {
                let lr = decayed_lr(cfg.lr, done, total);
                done += doc.len() as u64;
                let kept: Vec<usize> = doc.iter().copied().filter(|&w| rng.random::<f64>() < keep[w]).collect();
                for pos in 0..kept.len() {
                    let b = rng.random_range(1..=cfg.window);
                    let mut rows = vec![nv + d];
                    rows.extend((pos.saturating_sub(b)..(pos + b + 1).min(kept.len())).filter(|&c| c != pos).map(|c| kept[c]));
                    let hidden = mean_rows(&input, dim, &rows);
                    let negs = draw_negatives(&table, kept[pos], cfg.negatives, nv, &mut rng);
                    grad.iter_mut().for_each(|g| *g = T::zero());
                    loss += ns_step(&hidden, &mut output, kept[pos], &negs, lr, &mut grad);
                    steps += 1;
                    for &r in &rows {
                        for (a, &g) in input[r * dim..(r + 1) * dim].iter_mut().zip(&grad) {
                            *a += g;
                        }
                    }
                }
            }
            loss_history.push(if steps == 0 { 0.0 } else { loss / steps as f64 });
        }
    }
    let doc_vectors = (0..nd).map(|d| input[(nv + d) * dim..(nv + d + 1) * dim].to_vec()).collect();
    Ok(DocVectorModel { config: cfg.clone(), doc_vectors, loss_history })
}
