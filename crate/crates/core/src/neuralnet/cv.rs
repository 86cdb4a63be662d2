use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::model::{ModelConfig, SequenceClassifier};
use super::train::{train, LabeledSet, TrainerConfig};
use super::NnError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    /// Validation MicroF1 per fold and epoch.
    pub fold_curves: Vec<Vec<f64>>,
    /// Per-epoch mean over folds.
    pub mean: Vec<f64>,
    /// Per-epoch population standard deviation over folds.
    pub std: Vec<f64>,
}

/// Seeded `k`-fold split: shuffled indices dealt round-robin into folds.
pub fn fold_indices(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::new(); k];
    for (j, i) in idx.into_iter().enumerate() {
        folds[j % k].push(i);
    }
    folds
}

/// Train one model per fold for exactly `trainer.max_epochs` epochs (no early
/// stopping) and aggregate the validation MicroF1 curves.
pub fn cross_validate<T: Scalar>(
    corpus: &LabeledSet<T>,
    model_cfg: &ModelConfig,
    trainer: &TrainerConfig,
    k: usize,
) -> Result<CvResult, NnError> {
    if k < 2 {
        return Err(NnError::InvalidConfig("k must be at least 2".into()));
    }
    if corpus.len() < k {
        return Err(NnError::TooFewSamples { needed: k, got: corpus.len() });
    }
    let folds = fold_indices(corpus.len(), k, trainer.seed);
    let cfg = TrainerConfig { patience: None, ..trainer.clone() };
    let mut fold_curves = Vec::with_capacity(k);
    for (f, held_out) in folds.iter().enumerate() {
        let rest: Vec<usize> = folds.iter().enumerate().filter(|(g, _)| *g != f).flat_map(|(_, v)| v.iter().copied()).collect();
        let model = SequenceClassifier::build(model_cfg.clone(), corpus.labels.clone(), trainer.seed.wrapping_add(f as u64))?;
        let fold_cfg = TrainerConfig { seed: trainer.seed.wrapping_add(f as u64), ..cfg.clone() };
        let out = train(model, &corpus.subset(&rest), &corpus.subset(held_out), &fold_cfg)?;
        fold_curves.push(out.curves.iter().map(|e| e.val_micro_f1).collect::<Vec<_>>());
    }
    let epochs = cfg.max_epochs;
    let kf = k as f64;
    let mean: Vec<f64> = (0..epochs).map(|e| fold_curves.iter().map(|c| c[e]).sum::<f64>() / kf).collect();
    let std = (0..epochs)
        .map(|e| (fold_curves.iter().map(|c| (c[e] - mean[e]).powi(2)).sum::<f64>() / kf).sqrt())
        .collect();
    Ok(CvResult { fold_curves, mean, std })
}
