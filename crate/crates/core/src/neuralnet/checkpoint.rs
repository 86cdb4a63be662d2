//! Checkpoint files: `RTCK`, a little-endian `u32` format version, a `u32`
//! header length, a JSON header (configuration, labels, parameter layout,
//! training metadata), then every parameter as little-endian `f32`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{ModelConfig, SequenceClassifier};
use super::params::ParamStore;
use super::tensor::Tensor;
use super::NnError;
use crate::scalar::Scalar;

const MAGIC: &[u8; 4] = b"RTCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainingMeta {
    pub epoch: usize,
    pub best_val_micro_f1: f64,
    pub seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    shape: Vec<usize>,
    decay: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    labels: Vec<String>,
    params: Vec<ParamEntry>,
    meta: TrainingMeta,
}

#[derive(Debug, Clone)]
pub struct Checkpoint<T: Scalar> {
    pub model: SequenceClassifier<T>,
    pub meta: TrainingMeta,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.model.params;
        let header = Header {
            config: self.model.config.clone(),
            labels: self.model.labels.clone(),
            params: p
                .names
                .iter()
                .zip(&p.tensors)
                .zip(&p.decay)
                .map(|((name, t), &decay)| ParamEntry { name: name.clone(), shape: t.shape.clone(), decay })
                .collect(),
            meta: self.meta.clone(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(12 + json.len() + 4 * p.count());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for t in &p.tensors {
            for v in &t.data {
                out.extend_from_slice(&v.as_f32().to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NnError> {
        let corrupt = |m: &str| NnError::Checkpoint(m.to_string());
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(NnError::Checkpoint(format!("unsupported version {version}")));
        }
        let hlen = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let body = bytes.get(12..12 + hlen).ok_or_else(|| corrupt("truncated header"))?;
        let header: Header = serde_json::from_slice(body).map_err(|e| NnError::Checkpoint(e.to_string()))?;
        let mut payload = &bytes[12 + hlen..];
        let mut params = ParamStore::new();
        for e in header.params {
            let n: usize = e.shape.iter().product();
            if payload.len() < 4 * n {
                return Err(corrupt("truncated payload"));
            }
            let data = payload[..4 * n]
                .chunks_exact(4)
                .map(|c| T::of(f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64))
                .collect();
            payload = &payload[4 * n..];
            params.add(&e.name, Tensor::from_vec(&e.shape, data), e.decay);
        }
        if !payload.is_empty() {
            return Err(corrupt("trailing bytes"));
        }
        let model = SequenceClassifier::with_params(header.config, header.labels, params)?;
        Ok(Self { model, meta: header.meta })
    }
}

pub fn save_checkpoint<T: Scalar>(path: impl AsRef<Path>, model: &SequenceClassifier<T>, meta: &TrainingMeta) -> Result<(), NnError> {
    let bytes = Checkpoint { model: model.clone(), meta: meta.clone() }.to_bytes();
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<Checkpoint<T>, NnError> {
    Checkpoint::from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::model::Topology;

    #[test]
    fn round_trip_is_bit_exact_after_rounding() {
        let cfg = ModelConfig { embed_dim: 5, lstm_hidden: 4, ..ModelConfig::new(Topology::RnnAtt, 3) };
        let mut model = SequenceClassifier::<f64>::build(cfg, vec!["a".into(), "b".into(), "c".into()], 2).unwrap();
        model.params.round_to_f32();
        let meta = TrainingMeta { epoch: 7, best_val_micro_f1: 0.1 + 0.2, seed: 42 };
        let bytes = Checkpoint { model: model.clone(), meta: meta.clone() }.to_bytes();
        let back = Checkpoint::<f64>::from_bytes(&bytes).unwrap();
        assert_eq!(back.model.params, model.params);
        assert_eq!(back.meta, meta);
        let x = Tensor::matrix(2, 5, (0..10).map(|i| i as f64 * 0.1).collect());
        assert_eq!(back.model.forward(&x).unwrap(), model.forward(&x).unwrap());
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Checkpoint::<f64>::from_bytes(b"nope").is_err());
        assert!(Checkpoint::<f64>::from_bytes(b"RTCK\x02\0\0\0\0\0\0\0").is_err());
    }
}
