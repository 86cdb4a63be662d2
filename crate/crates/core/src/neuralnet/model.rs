use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::{sigmoid_scalar, Graph, Var};
use super::params::ParamStore;
use super::tensor::Tensor;
use super::NnError;
use crate::config::{ConfigError, KeyValues};
use crate::scalar::Scalar;

/// Probabilities are kept inside `[PROB_CLAMP, 1 − PROB_CLAMP]`.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Topology {
    #[serde(rename = "cnn")]
    Cnn,
    #[serde(rename = "rnn")]
    Rnn,
    #[serde(rename = "cnn-att")]
    CnnAtt,
    #[serde(rename = "rnn-att")]
    RnnAtt,
}

impl Topology {
    pub const ALL: [Topology; 4] = [Topology::Cnn, Topology::Rnn, Topology::CnnAtt, Topology::RnnAtt];

    pub fn is_recurrent(self) -> bool {
        matches!(self, Topology::Rnn | Topology::RnnAtt)
    }

    pub fn has_attention(self) -> bool {
        matches!(self, Topology::CnnAtt | Topology::RnnAtt)
    }

    pub fn name(self) -> &'static str {
        match self {
            Topology::Cnn => "cnn",
            Topology::Rnn => "rnn",
            Topology::CnnAtt => "cnn-att",
            Topology::RnnAtt => "rnn-att",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topology {
    type Err = NnError;
    fn from_str(s: &str) -> Result<Self, NnError> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "cnn" => Ok(Topology::Cnn),
            "rnn" => Ok(Topology::Rnn),
            "cnn-att" | "cnnatt" => Ok(Topology::CnnAtt),
            "rnn-att" | "rnnatt" => Ok(Topology::RnnAtt),
            other => Err(NnError::InvalidConfig(format!("unknown topology `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub topology: Topology,
    pub embed_dim: usize,
    pub max_len: usize,
    pub conv1_filters: usize,
    pub conv_kernel: usize,
    pub pool_kernel: usize,
    pub pool_stride: usize,
    pub conv2_filters: usize,
    pub lstm_hidden: usize,
    pub lstm_layers: usize,
    pub bidirectional: bool,
    pub dropout_p: f64,
    pub label_count: usize,
}

impl ModelConfig {
    pub fn new(topology: Topology, label_count: usize) -> Self {
        Self {
            topology,
            embed_dim: 100,
            max_len: 56,
            conv1_filters: 64,
            conv_kernel: 3,
            pool_kernel: 2,
            pool_stride: 1,
            conv2_filters: 128,
            lstm_hidden: 128,
            lstm_layers: 2,
            bidirectional: true,
            dropout_p: 0.4,
            label_count,
        }
    }

    /// Rows of the base representation H for the convolutional topologies.
    pub fn cnn_rows(&self) -> Option<usize> {
        let r1 = self.max_len.checked_sub(self.conv_kernel)? + 1;
        let r2 = r1.checked_sub(self.pool_kernel)? / self.pool_stride.max(1) + 1;
        Some(r2.checked_sub(self.conv_kernel)? + 1)
    }

    /// Column width of H.
    pub fn feature_dim(&self) -> usize {
        if self.topology.is_recurrent() {
            self.lstm_hidden * if self.bidirectional { 2 } else { 1 }
        } else {
            self.conv2_filters
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: &str| Err(NnError::InvalidConfig(m.to_string()));
        if self.embed_dim == 0 || self.label_count == 0 {
            return bad("embed_dim and label_count must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad("dropout_p must lie in [0, 1)");
        }
        if self.topology.is_recurrent() {
            if self.lstm_hidden == 0 || self.lstm_layers == 0 {
                return bad("lstm_hidden and lstm_layers must be positive");
            }
        } else {
            if [self.conv1_filters, self.conv2_filters, self.conv_kernel, self.pool_kernel, self.pool_stride]
                .contains(&0)
            {
                return bad("convolution sizes must be positive");
            }
            if self.cnn_rows().is_none() {
                return bad("max_len too short for the convolution stack");
            }
        }
        Ok(())
    }

    pub const KEYS: [&'static str; 13] = [
        "topology",
        "embed_dim",
        "max_len",
        "conv1_filters",
        "conv_kernel",
        "pool_kernel",
        "pool_stride",
        "conv2_filters",
        "lstm_hidden",
        "lstm_layers",
        "bidirectional",
        "dropout_p",
        "label_count",
    ];

    /// Override fields from `key=value` entries; unknown keys are ignored here.
    pub fn apply(&mut self, kv: &KeyValues) -> Result<(), ConfigError> {
        if let Some(t) = kv.get("topology") {
            self.topology = t.parse().map_err(|_| ConfigError::InvalidValue { key: "topology".into(), value: t.into() })?;
        }
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = kv.parse_opt(stringify!($f))? { self.$f = v; }
            )*};
        }
        set!(embed_dim, max_len, conv1_filters, conv_kernel, pool_kernel, pool_stride, conv2_filters, lstm_hidden,
            lstm_layers, bidirectional, dropout_p, label_count);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct LstmIds {
    wx: usize,
    wh: usize,
    b: usize,
}

#[derive(Debug, Clone)]
enum Layout {
    Cnn { w1: usize, b1: usize, w2: usize, b2: usize },
    Rnn { layers: Vec<Vec<LstmIds>> },
}

#[derive(Debug, Clone)]
enum Head {
    Dense { w: usize, b: usize },
    Attention { u: usize, beta: usize, b: usize },
}

/// A sentence classifier: base representation (CNN or BiLSTM) plus a dense or
/// per-label attention output head.
#[derive(Debug, Clone)]
pub struct SequenceClassifier<T: Scalar> {
    pub config: ModelConfig,
    pub labels: Vec<String>,
    pub params: ParamStore<T>,
    layout: Layout,
    head: Head,
}

/// Dropout masks are drawn from this generator when training.
pub struct Dropout<'r> {
    pub rng: &'r mut ChaCha8Rng,
}

/// Result of building the forward graph for one sentence.
pub struct ForwardVars {
    pub logits: Var,
    pub base: Var,
    pub alpha: Option<Var>,
}

impl<T: Scalar> SequenceClassifier<T> {
    /// Build a model with freshly initialised parameters.
    pub fn build(config: ModelConfig, labels: Vec<String>, seed: u64) -> Result<Self, NnError> {
        config.validate()?;
        if labels.len() != config.label_count {
            return Err(NnError::InvalidConfig(format!(
                "label_count {} but {} label names",
                config.label_count,
                labels.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamStore::new();
        let c = &config;
        let layout = if c.topology.is_recurrent() {
            let h = c.lstm_hidden;
            let dirs = if c.bidirectional { 2 } else { 1 };
            let mut layers = Vec::new();
            for l in 0..c.lstm_layers {
                let input = if l == 0 { c.embed_dim } else { h * dirs };
                let mut ids = Vec::new();
                for d in 0..dirs {
                    let name = format!("lstm{l}.{}", if d == 0 { "fwd" } else { "bwd" });
                    let wx = p.add_glorot(&format!("{name}.wx"), input, 4 * h, &mut rng);
                    let wh = p.add_glorot(&format!("{name}.wh"), h, 4 * h, &mut rng);
                    let b = p.add_bias(&format!("{name}.b"), 4 * h);
                    for v in &mut p.tensors[b].data[h..2 * h] {
                        *v = T::one();
                    }
                    ids.push(LstmIds { wx, wh, b });
                }
                layers.push(ids);
            }
            Layout::Rnn { layers }
        } else {
            let k = c.conv_kernel;
            let w1 = p.add_glorot("conv1.w", k * c.embed_dim, c.conv1_filters, &mut rng);
            let b1 = p.add_bias("conv1.b", c.conv1_filters);
            let w2 = p.add_glorot("conv2.w", k * c.conv1_filters, c.conv2_filters, &mut rng);
            let b2 = p.add_bias("conv2.b", c.conv2_filters);
            Layout::Cnn { w1, b1, w2, b2 }
        };
        let f = c.feature_dim();
        let l = c.label_count;
        let head = if c.topology.has_attention() {
            let u = p.add_glorot("att.u", l, f, &mut rng);
            let beta = p.add_glorot("att.beta", l, f, &mut rng);
            let b = p.add_bias("att.b", l);
            Head::Attention { u, beta, b }
        } else {
            let inputs = match c.topology {
                Topology::Cnn => c.cnn_rows().expect("validated") * f,
                _ => f,
            };
            let w = p.add_glorot("out.w", inputs, l, &mut rng);
            let b = p.add_bias("out.b", l);
            Head::Dense { w, b }
        };
        Ok(Self { config, labels, params: p, layout, head })
    }

    /// Rebuild around existing parameters (used when loading checkpoints).
    pub fn with_params(config: ModelConfig, labels: Vec<String>, params: ParamStore<T>) -> Result<Self, NnError> {
        let mut model = Self::build(config, labels, 0)?;
        if model.params.names != params.names
            || model.params.tensors.iter().zip(&params.tensors).any(|(a, b)| a.shape != b.shape)
        {
            return Err(NnError::Config("parameter layout does not match the configuration".into()));
        }
        model.params = params;
        Ok(model)
    }

    pub fn label_count(&self) -> usize {
        self.config.label_count
    }

    /// Pad with zero rows or truncate to `max_len` for the convolutional topologies.
    pub fn prepare_input(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        if x.rows() == 0 {
            return Err(NnError::EmptySequence);
        }
        if x.cols() != self.config.embed_dim {
            return Err(NnError::DimensionMismatch(format!(
                "input width {} but embed_dim {}",
                x.cols(),
                self.config.embed_dim
            )));
        }
        if self.config.topology.is_recurrent() {
            return Ok(x.clone());
        }
        let (n, d) = (self.config.max_len, self.config.embed_dim);
        let mut data = vec![T::zero(); n * d];
        let keep = x.rows().min(n) * d;
        data[..keep].copy_from_slice(&x.data[..keep]);
        Ok(Tensor::matrix(n, d, data))
    }

    fn dropout(&self, g: &mut Graph<T>, v: Var, dropout: &mut Option<Dropout>) -> Var {
        let p = self.config.dropout_p;
        match dropout {
            Some(d) if p > 0.0 => {
                let shape = g.value(v).shape.clone();
                let keep = T::of(1.0 / (1.0 - p));
                let n: usize = shape.iter().product();
                let data = (0..n).map(|_| if d.rng.random_bool(p) { T::zero() } else { keep }).collect();
                g.mask(v, Tensor::from_vec(&shape, data))
            }
            _ => v,
        }
    }

    fn lstm_direction(&self, g: &mut Graph<T>, x: Var, ids: LstmIds, reverse: bool) -> (Var, Vec<Var>) {
        let h = self.config.lstm_hidden;
        let n = g.value(x).rows();
        let wx = g.param(ids.wx);
        let wh = g.param(ids.wh);
        let b = g.param(ids.b);
        let xw = g.matmul(x, wx);
        let xw = g.add_row(xw, b);
        let mut outs: Vec<Option<Var>> = vec![None; n];
        let mut state: Option<(Var, Var)> = None;
        let order: Vec<usize> = if reverse { (0..n).rev().collect() } else { (0..n).collect() };
        for t in order {
            let mut z = g.slice_rows(xw, t, 1);
            if let Some((hp, _)) = state {
                let r = g.matmul(hp, wh);
                z = g.add(z, r);
            }
            let i = g.slice_cols(z, 0, h);
            let i = g.sigmoid(i);
            let f = g.slice_cols(z, h, h);
            let f = g.sigmoid(f);
            let cand = g.slice_cols(z, 2 * h, h);
            let cand = g.tanh(cand);
            let o = g.slice_cols(z, 3 * h, h);
            let o = g.sigmoid(o);
            let ig = g.mul(i, cand);
            let c = match state {
                Some((_, cp)) => {
                    let fc = g.mul(f, cp);
                    g.add(fc, ig)
                }
                None => ig,
            };
            let tc = g.tanh(c);
            let hn = g.mul(o, tc);
            outs[t] = Some(hn);
            state = Some((hn, c));
        }
        let outs: Vec<Var> = outs.into_iter().map(|o| o.expect("every step visited")).collect();
        (g.concat_rows(&outs), outs)
    }

    /// Record the forward pass for one sentence (`N × embed_dim`) on `g`.
    pub fn forward_graph(&self, g: &mut Graph<T>, x: &Tensor<T>, mut dropout: Option<Dropout>) -> Result<ForwardVars, NnError> {
        let x = self.prepare_input(x)?;
        let input = g.input(x);
        let (base, summary) = match &self.layout {
            Layout::Cnn { w1, b1, w2, b2 } => {
                let k = self.config.conv_kernel;
                let u = g.unfold(input, k);
                let w1 = g.param(*w1);
                let b1 = g.param(*b1);
                let z = g.matmul(u, w1);
                let z = g.add_row(z, b1);
                let a = g.relu(z);
                let pooled = g.max_pool_rows(a, self.config.pool_kernel, self.config.pool_stride);
                let u2 = g.unfold(pooled, k);
                let w2 = g.param(*w2);
                let b2 = g.param(*b2);
                let z2 = g.matmul(u2, w2);
                let z2 = g.add_row(z2, b2);
                let h = g.relu(z2);
                let h = self.dropout(g, h, &mut dropout);
                let flat = g.flatten(h);
                (h, flat)
            }
            Layout::Rnn { layers } => {
                let mut cur = input;
                let mut last = None;
                for (li, ids) in layers.iter().enumerate() {
                    if li > 0 {
                        cur = self.dropout(g, cur, &mut dropout);
                    }
                    let (fwd, fsteps) = self.lstm_direction(g, cur, ids[0], false);
                    if let Some(bwd_ids) = ids.get(1) {
                        let (bwd, bsteps) = self.lstm_direction(g, cur, *bwd_ids, true);
                        cur = g.concat_cols(&[fwd, bwd]);
                        let f_last = *fsteps.last().expect("non-empty");
                        last = Some(g.concat_cols(&[f_last, bsteps[0]]));
                    } else {
                        cur = fwd;
                        last = Some(*fsteps.last().expect("non-empty"));
                    }
                }
                (cur, last.expect("at least one layer"))
            }
        };
        let (logits, alpha) = match self.head {
            Head::Dense { w, b } => {
                let w = g.param(w);
                let b = g.param(b);
                let z = g.matmul(summary, w);
                (g.add_row(z, b), None)
            }
            Head::Attention { u, beta, b } => {
                let u = g.param(u);
                let beta = g.param(beta);
                let b = g.param(b);
                let (logits, alpha) = attention_graph(g, base, u, beta, b);
                (logits, Some(alpha))
            }
        };
        Ok(ForwardVars { logits, base, alpha })
    }

    /// Label probabilities for one sentence (inference mode, no dropout).
    pub fn forward(&self, x: &Tensor<T>) -> Result<Vec<T>, NnError> {
        let mut g = Graph::new(&self.params);
        let out = self.forward_graph(&mut g, x, None)?;
        Ok(probabilities(g.value(out.logits)))
    }

    /// Attention weights (`|L| × rows`) for one sentence, if the topology has attention.
    pub fn attention_weights(&self, x: &Tensor<T>) -> Result<Option<Tensor<T>>, NnError> {
        let mut g = Graph::new(&self.params);
        let out = self.forward_graph(&mut g, x, None)?;
        Ok(out.alpha.map(|a| g.value(a).clone()))
    }
}

pub(crate) fn probabilities<T: Scalar>(logits: &Tensor<T>) -> Vec<T> {
    let lo = T::of(PROB_CLAMP);
    let hi = T::one() - lo;
    logits.data.iter().map(|&z| sigmoid_scalar(z).max(lo).min(hi)).collect()
}

/// Per-label attention: `α = softmax_rows(U Hᵀ)`, `V = α H`, `logit_ℓ = β_ℓ · v_ℓ + b_ℓ`.
/// Returns (`1 × |L|` logits, `|L| × rows` attention weights).
fn attention_graph<T: Scalar>(g: &mut Graph<T>, h: Var, u: Var, beta: Var, b: Var) -> (Var, Var) {
    let scores = g.matmul_t(u, h);
    let alpha = g.softmax_rows(scores);
    let v = g.matmul(alpha, h);
    let bv = g.mul(beta, v);
    let s = g.row_sums(bv);
    let s = g.transpose(s);
    (g.add_row(s, b), alpha)
}

/// Parameters of a per-label attention head.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionHeadParams<T> {
    pub u: Tensor<T>,
    pub beta: Tensor<T>,
    pub b: Vec<T>,
}

/// Evaluate an attention head on a base representation `H` (`rows × features`).
/// Returns the `|L| × rows` weights and the `|L|` probabilities.
pub fn attention_head<T: Scalar>(h: &Tensor<T>, params: &AttentionHeadParams<T>) -> Result<(Tensor<T>, Vec<T>), NnError> {
    let f = h.cols();
    let l = params.u.rows();
    if h.rows() == 0 {
        return Err(NnError::EmptySequence);
    }
    if params.u.cols() != f || params.beta.cols() != f || params.beta.rows() != l || params.b.len() != l {
        return Err(NnError::DimensionMismatch(format!(
            "H has {f} features; U is {:?}, B is {:?}, b has {}",
            params.u.shape,
            params.beta.shape,
            params.b.len()
        )));
    }
    let mut store = ParamStore::new();
    store.add("u", params.u.clone(), true);
    store.add("beta", params.beta.clone(), true);
    store.add("b", Tensor::row(params.b.clone()), false);
    let mut g = Graph::new(&store);
    let hv = g.input(h.clone());
    let (u, beta, b) = (g.param(0), g.param(1), g.param(2));
    let (logits, alpha) = attention_graph(&mut g, hv, u, beta, b);
    Ok((g.value(alpha).clone(), probabilities(g.value(logits))))
}

/// Uniform random draw helper shared by tests and the acceptance suite.
pub fn random_tensor<T: Scalar>(rows: usize, cols: usize, scale: f64, rng: &mut impl Rng) -> Tensor<T> {
    Tensor::matrix(rows, cols, (0..rows * cols).map(|_| T::of(rng.random_range(-scale..scale))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("l{i}")).collect()
    }

    #[test]
    fn paper_geometry() {
        let rnn = ModelConfig::new(Topology::Rnn, 193);
        assert_eq!(rnn.feature_dim(), 256);
        let cnn = ModelConfig::new(Topology::Cnn, 193);
        assert_eq!(cnn.feature_dim(), 128);
        assert_eq!(cnn.cnn_rows(), Some(51));
        let strided = ModelConfig { pool_stride: 2, ..cnn.clone() };
        assert_eq!(strided.cnn_rows(), Some(25));
        let m = SequenceClassifier::<f64>::build(cnn, labels(193), 1).unwrap();
        let w2 = m.params.index_of("conv2.w").unwrap();
        assert_eq!(m.params.tensors[w2].cols(), 128);
    }

    #[test]
    fn output_length_and_zero_params() {
        let mut cfg = ModelConfig::new(Topology::RnnAtt, 5);
        cfg.embed_dim = 4;
        cfg.lstm_hidden = 3;
        let mut m = SequenceClassifier::<f64>::build(cfg, labels(5), 3).unwrap();
        let x = Tensor::matrix(2, 4, vec![0.1, 0.2, 0.3, 0.4, -0.1, 0.0, 0.5, 0.2]);
        let p = m.forward(&x).unwrap();
        assert_eq!(p.len(), 5);
        assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
        m.params.fill(0.0);
        assert!(m.forward(&x).unwrap().iter().all(|&v| v == 0.5));
        assert!(matches!(m.forward(&Tensor::zeros(&[0, 4])), Err(NnError::EmptySequence)));
    }

    #[test]
    fn same_seed_same_params() {
        let cfg = ModelConfig { embed_dim: 6, lstm_hidden: 4, ..ModelConfig::new(Topology::Rnn, 3) };
        let a = SequenceClassifier::<f64>::build(cfg.clone(), labels(3), 9).unwrap();
        let b = SequenceClassifier::<f64>::build(cfg, labels(3), 9).unwrap();
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = ModelConfig::new(Topology::Cnn, 3);
        cfg.max_len = 3;
        assert!(matches!(SequenceClassifier::<f64>::build(cfg, labels(3), 0), Err(NnError::InvalidConfig(_))));
        let cfg = ModelConfig { dropout_p: 1.0, ..ModelConfig::new(Topology::Rnn, 3) };
        assert!(cfg.validate().is_err());
        assert!("transformer".parse::<Topology>().is_err());
        assert_eq!("RNN-ATT".parse::<Topology>().unwrap(), Topology::RnnAtt);
    }

    #[test]
    fn attention_examples() {
        let h = Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        let params = AttentionHeadParams {
            u: Tensor::matrix(1, 2, vec![3f64.ln(), 0.0]),
            beta: Tensor::matrix(1, 2, vec![1.0, 1.0]),
            b: vec![0.0],
        };
        let (alpha, _) = attention_head(&h, &params).unwrap();
        assert!((alpha.data[0] - 0.75).abs() < 1e-15 && (alpha.data[1] - 0.25).abs() < 1e-15);
        let zero_u = AttentionHeadParams { u: Tensor::zeros(&[1, 2]), ..params.clone() };
        let h3 = Tensor::matrix(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let (alpha, probs) = attention_head(&h3, &zero_u).unwrap();
        assert!(alpha.data.iter().all(|&a| (a - 1.0 / 3.0).abs() < 1e-15));
        // v = column mean (3, 4); logit = 7
        assert!((probs[0] - sigmoid_scalar(7.0)).abs() < 1e-15);
        let single = Tensor::matrix(1, 2, vec![0.3, -0.2]);
        let (alpha, _) = attention_head(&single, &params).unwrap();
        assert_eq!(alpha.data, vec![1.0]);
        let bad = AttentionHeadParams { u: Tensor::zeros(&[1, 3]), ..params };
        assert!(matches!(attention_head(&h, &bad), Err(NnError::DimensionMismatch(_))));
    }
}
