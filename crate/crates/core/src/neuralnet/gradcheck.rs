use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::graph::Graph;
use super::model::{random_tensor, Dropout, ModelConfig, SequenceClassifier, Topology};
use super::train::Sample;
use super::NnError;
use crate::scalar::Scalar;

/// Floor on the denominator of the relative error, so exact zeros compare cleanly.
pub const REL_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// `name[index]` of the parameter with the largest relative error.
    pub worst: String,
    pub checked: usize,
}

/// Toy geometry: 8 labels, 10-dimensional embeddings, 12 hidden units, at most 12 tokens.
pub fn toy_config(topology: Topology) -> ModelConfig {
    ModelConfig {
        embed_dim: 10,
        max_len: 12,
        conv1_filters: 12,
        conv2_filters: 12,
        lstm_hidden: 12,
        lstm_layers: 1,
        ..ModelConfig::new(topology, 8)
    }
}

/// A toy model with small random biases, so no unit sits exactly on a ReLU kink.
pub fn toy_model(topology: Topology, seed: u64) -> Result<SequenceClassifier<f64>, NnError> {
    let cfg = toy_config(topology);
    let labels = (0..cfg.label_count).map(|i| format!("label{i}")).collect();
    let mut model = SequenceClassifier::build(cfg, labels, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    for (t, &decay) in model.params.tensors.iter_mut().zip(&model.params.decay) {
        if !decay {
            for v in &mut t.data {
                *v += rng.random_range(-0.1..0.1);
            }
        }
    }
    Ok(model)
}

/// A random toy sample of `len` tokens.
pub fn toy_sample(cfg: &ModelConfig, len: usize, seed: u64) -> Sample<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_tensor(len, cfg.embed_dim, 1.0, &mut rng);
    let y = (0..cfg.label_count).filter(|_| rng.random_bool(0.3)).collect();
    Sample { x, y }
}

fn sample_loss<T: Scalar>(
    model: &SequenceClassifier<T>,
    sample: &Sample<T>,
    targets: &[T],
    dropout_seed: Option<u64>,
) -> Result<T, NnError> {
    let mut rng = dropout_seed.map(ChaCha8Rng::seed_from_u64);
    let mut g = Graph::new(&model.params);
    let out = model.forward_graph(&mut g, &sample.x, rng.as_mut().map(|rng| Dropout { rng }))?;
    let l = g.sigmoid_bce(out.logits, targets);
    Ok(g.value(l).data[0])
}

/// Compare reverse-mode gradients with central differences for every parameter.
/// With `dropout_seed`, the same dropout masks are used in every evaluation.
pub fn grad_check<T: Scalar>(
    model: &SequenceClassifier<T>,
    sample: &Sample<T>,
    eps: f64,
    dropout_seed: Option<u64>,
) -> Result<GradCheckReport, NnError> {
    if !(eps > 0.0) {
        return Err(NnError::InvalidConfig("eps must be positive".into()));
    }
    let targets: Vec<T> =
        (0..model.label_count()).map(|l| if sample.y.contains(&l) { T::one() } else { T::zero() }).collect();
    let mut grads = model.params.zero_grads();
    {
        let mut rng = dropout_seed.map(ChaCha8Rng::seed_from_u64);
        let mut g = Graph::new(&model.params);
        let out = model.forward_graph(&mut g, &sample.x, rng.as_mut().map(|rng| Dropout { rng }))?;
        let l = g.sigmoid_bce(out.logits, &targets);
        g.backward(l, &mut grads);
    }
    let mut probe = model.clone();
    let mut report = GradCheckReport { max_rel_error: 0.0, max_abs_error: 0.0, worst: String::new(), checked: 0 };
    let h = T::of(eps);
    for t in 0..probe.params.tensors.len() {
        for k in 0..probe.params.tensors[t].len() {
            let orig = probe.params.tensors[t].data[k];
            probe.params.tensors[t].data[k] = orig + h;
            let plus = sample_loss(&probe, sample, &targets, dropout_seed)?;
            probe.params.tensors[t].data[k] = orig - h;
            let minus = sample_loss(&probe, sample, &targets, dropout_seed)?;
            probe.params.tensors[t].data[k] = orig;
            let numeric = ((plus - minus) / (h + h)).as_f64();
            let analytic = grads.tensors[t].data[k].as_f64();
            let abs = (analytic - numeric).abs();
            let rel = abs / analytic.abs().max(numeric.abs()).max(REL_FLOOR);
            report.checked += 1;
            report.max_abs_error = report.max_abs_error.max(abs);
            if rel > report.max_rel_error || report.worst.is_empty() {
                report.max_rel_error = rel.max(report.max_rel_error);
                report.worst = format!("{}[{k}]", probe.params.names[t]);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::params::ParamStore;
    use crate::neuralnet::tensor::Tensor;

    #[test]
    fn toy_models_are_small() {
        for t in Topology::ALL {
            let m = toy_model(t, 1).unwrap();
            assert!(m.params.count() <= 5000, "{t}: {}", m.params.count());
        }
    }

    #[test]
    fn logistic_unit_matches_closed_form() {
        let mut p = ParamStore::<f64>::new();
        p.add("w", Tensor::row(vec![0.4, -0.3, 0.8]), true);
        let x = Tensor::matrix(3, 1, vec![1.5, 2.0, -0.5]);
        let y = 1.0;
        let mut grads = p.zero_grads();
        let mut g = Graph::new(&p);
        let w = g.param(0);
        let xv = g.input(x.clone());
        let z = g.matmul(w, xv);
        let l = g.sigmoid_bce(z, &[y]);
        g.backward(l, &mut grads);
        let zval = g.value(z).data[0];
        let yhat = 1.0 / (1.0 + (-zval).exp());
        for k in 0..3 {
            let expected = (yhat - y) * x.data[k];
            let got = grads.tensors[0].data[k];
            assert!(((got - expected) / expected).abs() < 1e-8);
        }
    }

    #[test]
    fn rnn_att_toy_passes() {
        let m = toy_model(Topology::RnnAtt, 5).unwrap();
        let s = toy_sample(&m.config, 7, 5);
        let r = grad_check(&m, &s, 1e-5, Some(3)).unwrap();
        assert!(r.max_rel_error < 1e-4, "{r:?}");
        assert_eq!(r.checked, m.params.count());
    }

    #[test]
    fn two_layer_bilstm_passes() {
        let cfg = ModelConfig { embed_dim: 4, lstm_hidden: 5, lstm_layers: 2, ..ModelConfig::new(Topology::Rnn, 3) };
        let m = SequenceClassifier::<f64>::build(cfg, vec!["a".into(), "b".into(), "c".into()], 8).unwrap();
        let s = toy_sample(&m.config, 4, 2);
        let r = grad_check(&m, &s, 1e-5, Some(1)).unwrap();
        assert!(r.max_rel_error < 1e-4, "{r:?}");
    }
}
