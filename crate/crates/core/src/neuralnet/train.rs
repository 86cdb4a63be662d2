use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::Graph;
use super::model::{Dropout, SequenceClassifier, Topology};
use super::optim::{Optimizer, OptimizerKind};
use super::tensor::Tensor;
use super::NnError;
use crate::config::{ConfigError, KeyValues};
use crate::metrics::{evaluate_indexed, MetricsReport};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub l2_penalty: f64,
    pub optimizer: OptimizerKind,
    pub max_epochs: usize,
    /// Epochs without a validation MicroF1 improvement before stopping; `None` disables early stopping.
    pub patience: Option<usize>,
    pub seed: u64,
    pub threshold: f64,
}

impl TrainerConfig {
    /// Defaults per topology family: Adam at 1e-4 for the convolutional models,
    /// RMSprop at 1e-2 for the recurrent ones.
    pub fn for_topology(t: Topology) -> Self {
        let (optimizer, lr) = if t.is_recurrent() { (OptimizerKind::RmsProp, 1e-2) } else { (OptimizerKind::Adam, 1e-4) };
        Self { batch_size: 1024, lr, l2_penalty: 0.0, optimizer, max_epochs: 500, patience: Some(10), seed: 0, threshold: 0.5 }
    }

    pub const KEYS: [&'static str; 8] =
        ["batch_size", "lr", "l2_penalty", "optimizer", "max_epochs", "patience", "seed", "threshold"];

    pub fn apply(&mut self, kv: &KeyValues) -> Result<(), ConfigError> {
        if let Some(v) = kv.parse_opt("batch_size")? {
            self.batch_size = v;
        }
        if let Some(v) = kv.parse_opt("lr")? {
            self.lr = v;
        }
        if let Some(v) = kv.parse_opt("l2_penalty")? {
            self.l2_penalty = v;
        }
        if let Some(o) = kv.get("optimizer") {
            self.optimizer =
                o.parse().map_err(|_| ConfigError::InvalidValue { key: "optimizer".into(), value: o.into() })?;
        }
        if let Some(v) = kv.parse_opt("max_epochs")? {
            self.max_epochs = v;
        }
        if let Some(p) = kv.get("patience") {
            self.patience = match p {
                "none" | "off" => None,
                n => Some(n.parse().map_err(|_| ConfigError::InvalidValue { key: "patience".into(), value: n.into() })?),
            };
        }
        if let Some(v) = kv.parse_opt("seed")? {
            self.seed = v;
        }
        if let Some(v) = kv.parse_opt("threshold")? {
            self.threshold = v;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(NnError::InvalidConfig("batch_size and max_epochs must be at least 1".into()));
        }
        if !(self.lr > 0.0) || self.l2_penalty < 0.0 {
            return Err(NnError::InvalidConfig("lr must be positive and l2_penalty non-negative".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(NnError::InvalidConfig("threshold must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// One embedded sentence with its gold label indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub x: Tensor<T>,
    pub y: BTreeSet<usize>,
}

/// Samples over a named label space.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet<T> {
    pub labels: Vec<String>,
    pub samples: Vec<Sample<T>>,
}

impl<T: Scalar> LabeledSet<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self { labels: self.labels.clone(), samples: idx.iter().map(|&i| self.samples[i].clone()).collect() }
    }

    fn targets(&self, i: usize) -> Vec<T> {
        (0..self.labels.len()).map(|l| if self.samples[i].y.contains(&l) { T::one() } else { T::zero() }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub val_micro_f1: f64,
    pub val_macro_f1: f64,
    pub val_weighted_f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T: Scalar> {
    /// Parameters of the best validation epoch, rounded to single precision.
    pub model: SequenceClassifier<T>,
    pub curves: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_micro_f1: f64,
}

/// Label indices with probability ≥ `threshold`; the argmax label when none qualifies.
pub fn predict_labels<T: Scalar>(model: &SequenceClassifier<T>, x: &Tensor<T>, threshold: f64) -> Result<BTreeSet<usize>, NnError> {
    Ok(decide(&model.forward(x)?, threshold))
}

pub(crate) fn decide<T: Scalar>(probs: &[T], threshold: f64) -> BTreeSet<usize> {
    let t = T::of(threshold);
    let chosen: BTreeSet<usize> = probs.iter().enumerate().filter(|(_, &p)| p >= t).map(|(i, _)| i).collect();
    if !chosen.is_empty() || probs.is_empty() {
        return chosen;
    }
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    [best].into()
}

pub fn predict_all<T: Scalar>(model: &SequenceClassifier<T>, samples: &[Sample<T>], threshold: f64) -> Result<Vec<BTreeSet<usize>>, NnError> {
    samples.iter().map(|s| predict_labels(model, &s.x, threshold)).collect()
}

pub fn evaluate_model<T: Scalar>(model: &SequenceClassifier<T>, set: &LabeledSet<T>, threshold: f64) -> Result<MetricsReport<f64>, NnError> {
    let pred = predict_all(model, &set.samples, threshold)?;
    let truth: Vec<BTreeSet<usize>> = set.samples.iter().map(|s| s.y.clone()).collect();
    Ok(evaluate_indexed(&truth, &pred, model.label_count())?)
}

fn check_labels<T: Scalar>(model: &SequenceClassifier<T>, set: &LabeledSet<T>, name: &'static str) -> Result<(), NnError> {
    if set.labels != model.labels {
        return Err(NnError::LabelSpaceMismatch);
    }
    if set.is_empty() {
        return Err(NnError::EmptySet(name));
    }
    if set.samples.iter().any(|s| s.y.iter().any(|&l| l >= set.labels.len())) {
        return Err(NnError::LabelSpaceMismatch);
    }
    Ok(())
}

/// Mini-batch training with per-epoch validation and best-epoch retention.
pub fn train<T: Scalar>(
    mut model: SequenceClassifier<T>,
    train_set: &LabeledSet<T>,
    val_set: &LabeledSet<T>,
    cfg: &TrainerConfig,
) -> Result<TrainOutcome<T>, NnError> {
    cfg.validate()?;
    check_labels(&model, train_set, "training")?;
    check_labels(&model, val_set, "validation")?;
    let targets: Vec<Vec<T>> = (0..train_set.len()).map(|i| train_set.targets(i)).collect();
    let mut order_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5DEE_CE66_D1CE_F00D);
    let mut opt = Optimizer::new(cfg.optimizer, cfg.lr, &model.params);
    let mut grads = model.params.zero_grads();
    let l2 = T::of(cfg.l2_penalty);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut curves = Vec::new();
    let mut best: Option<(usize, f64, super::params::ParamStore<T>)> = None;
    let mut since_best = 0;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut order_rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads.zero();
            for &i in batch {
                let mut g = Graph::new(&model.params);
                let out = model.forward_graph(&mut g, &train_set.samples[i].x, Some(Dropout { rng: &mut dropout_rng }))?;
                let l = g.sigmoid_bce(out.logits, &targets[i]);
                total += g.value(l).data[0].as_f64();
                g.backward(l, &mut grads);
            }
            grads.scale(T::one() / T::of(batch.len() as f64));
            grads.add_l2(&model.params, l2);
            opt.step(&mut model.params, &grads);
        }
        let train_loss = total / train_set.len() as f64 + cfg.l2_penalty * model.params.l2_norm_sq().as_f64();
        let m = evaluate_model(&model, val_set, cfg.threshold)?;
        log::debug!("epoch {epoch}: loss {train_loss:.6} val MicroF1 {:.4}", m.micro_f1);
        curves.push(EpochRecord {
            epoch,
            train_loss,
            val_accuracy: m.accuracy,
            val_micro_f1: m.micro_f1,
            val_macro_f1: m.macro_f1,
            val_weighted_f1: m.weighted_f1,
        });
        if best.as_ref().is_none_or(|(_, score, _)| m.micro_f1 > *score) {
            let mut snapshot = model.params.clone();
            snapshot.round_to_f32();
            best = Some((epoch, m.micro_f1, snapshot));
            since_best = 0;
        } else {
            since_best += 1;
        }
        if cfg.patience.is_some_and(|p| since_best >= p) {
            break;
        }
    }
    let (best_epoch, best_val_micro_f1, params) = best.expect("max_epochs ≥ 1");
    model.params = params;
    Ok(TrainOutcome { model, curves, best_epoch, best_val_micro_f1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::model::ModelConfig;

    fn tiny_set(n: usize) -> LabeledSet<f64> {
        let samples = (0..n)
            .map(|i| Sample {
                x: Tensor::matrix(3, 4, (0..12).map(|k| ((i * 12 + k) as f64 * 0.37).sin()).collect()),
                y: [i % 3].into(),
            })
            .collect();
        LabeledSet { labels: vec!["a".into(), "b".into(), "c".into()], samples }
    }

    #[test]
    fn decision_rule() {
        assert_eq!(decide(&[0.9, 0.2, 0.8], 0.5), [0, 2].into());
        assert_eq!(decide(&[0.1, 0.3, 0.2], 0.5), [1].into());
        assert_eq!(decide(&[0.5, 0.5], 0.5), [0, 1].into());
    }

    #[test]
    fn memorises_one_sample() {
        let cfg = ModelConfig { embed_dim: 4, lstm_hidden: 6, lstm_layers: 1, dropout_p: 0.0, ..ModelConfig::new(Topology::RnnAtt, 3) };
        let set = tiny_set(1);
        let model = SequenceClassifier::build(cfg, set.labels.clone(), 1).unwrap();
        let tc = TrainerConfig { max_epochs: 300, patience: None, lr: 0.01, l2_penalty: 0.0, optimizer: OptimizerKind::Adam, ..TrainerConfig::for_topology(Topology::RnnAtt) };
        let out = train(model, &set, &set, &tc).unwrap();
        assert!(out.curves.last().unwrap().train_loss < 5e-3);
        assert_eq!(out.curves.len(), 300);
    }

    #[test]
    fn early_stopping_and_errors() {
        let cfg = ModelConfig { embed_dim: 4, max_len: 8, conv1_filters: 3, conv2_filters: 3, ..ModelConfig::new(Topology::Cnn, 3) };
        let set = tiny_set(6);
        let model = SequenceClassifier::build(cfg, set.labels.clone(), 1).unwrap();
        let tc = TrainerConfig { max_epochs: 200, patience: Some(2), ..TrainerConfig::for_topology(Topology::Cnn) };
        let out = train(model.clone(), &set, &set, &tc).unwrap();
        assert!(out.curves.len() < 200);
        assert_eq!(out.curves.len(), out.best_epoch + 2);
        let other = LabeledSet { labels: vec!["x".into(), "b".into(), "c".into()], ..set.clone() };
        assert!(matches!(train(model.clone(), &set, &other, &tc), Err(NnError::LabelSpaceMismatch)));
        let empty = LabeledSet { samples: vec![], ..set.clone() };
        assert!(matches!(train(model, &empty, &set, &tc), Err(NnError::EmptySet(_))));
    }

    #[test]
    fn deterministic_for_seed() {
        let cfg = ModelConfig { embed_dim: 4, lstm_hidden: 3, ..ModelConfig::new(Topology::Rnn, 3) };
        let set = tiny_set(5);
        let tc = TrainerConfig { max_epochs: 4, batch_size: 2, ..TrainerConfig::for_topology(Topology::Rnn) };
        let a = train(SequenceClassifier::build(cfg.clone(), set.labels.clone(), 4).unwrap(), &set, &set, &tc).unwrap();
        let b = train(SequenceClassifier::build(cfg, set.labels.clone(), 4).unwrap(), &set, &set, &tc).unwrap();
        assert_eq!(a.model.params, b.model.params);
        assert_eq!(a.curves, b.curves);
    }
}
