//! Binary model files: four magic bytes, a little-endian `u32` format
//! version, a `u32` header length, a JSON header, then every vector as
//! little-endian `f32`.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::docvec::{DocVecConfig, DocVectorModel};
use super::subword::{EmbeddingTrainConfig, SubwordEmbeddingModel};
use super::EmbeddingError;
use crate::scalar::Scalar;

pub const SUBWORD_MAGIC: &[u8; 4] = b"RTSW";
pub const DOCVEC_MAGIC: &[u8; 4] = b"RTDV";
pub const EMBEDDING_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SubwordHeader {
    config: EmbeddingTrainConfig,
    vocab: Vec<(String, u64)>,
    buckets: Vec<u32>,
    loss_history: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DocVecHeader {
    config: DocVecConfig,
    documents: usize,
    loss_history: Vec<f64>,
}

fn encode<'a, H: Serialize, T: Scalar>(magic: &[u8; 4], header: &H, rows: impl Iterator<Item = &'a Vec<T>>) -> Vec<u8> {
    let json = serde_json::to_vec(header).expect("header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(magic);
    out.extend_from_slice(&EMBEDDING_FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for r in rows {
        for v in r {
            out.extend_from_slice(&v.as_f32().to_le_bytes());
        }
    }
    out
}

fn decode<H: DeserializeOwned, T: Scalar>(magic: &[u8; 4], bytes: &[u8], dim: impl Fn(&H) -> usize) -> Result<(H, Vec<Vec<T>>), EmbeddingError> {
    let bad = |m: &str| EmbeddingError::Format(m.to_string());
    if bytes.len() < 12 || &bytes[..4] != magic {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != EMBEDDING_FORMAT_VERSION {
        return Err(EmbeddingError::Format(format!("unsupported version {version}")));
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let body = bytes.get(12..12 + hlen).ok_or_else(|| bad("truncated header"))?;
    let header: H = serde_json::from_slice(body).map_err(|e| EmbeddingError::Format(e.to_string()))?;
    let d = dim(&header);
    let payload = &bytes[12 + hlen..];
    if d == 0 || !payload.len().is_multiple_of(4 * d) {
        return Err(bad("payload is not a whole number of vectors"));
    }
    let rows = payload
        .chunks_exact(4 * d)
        .map(|row| row.chunks_exact(4).map(|c| T::of(f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)).collect())
        .collect();
    Ok((header, rows))
}

pub fn save_subword<T: Scalar>(path: impl AsRef<Path>, m: &SubwordEmbeddingModel<T>) -> Result<(), EmbeddingError> {
    let header = SubwordHeader {
        config: m.config.clone(),
        vocab: m.vocab.clone(),
        buckets: m.ngram_vectors.keys().copied().collect(),
        loss_history: m.loss_history.clone(),
    };
    let bytes = encode(SUBWORD_MAGIC, &header, m.word_vectors.iter().chain(m.ngram_vectors.values()));
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn load_subword<T: Scalar>(path: impl AsRef<Path>) -> Result<SubwordEmbeddingModel<T>, EmbeddingError> {
    let bytes = std::fs::read(path)?;
    let (h, mut rows): (SubwordHeader, Vec<Vec<T>>) = decode(SUBWORD_MAGIC, &bytes, |h: &SubwordHeader| h.config.dim)?;
    if rows.len() != h.vocab.len() + h.buckets.len() {
        return Err(EmbeddingError::Format(format!("{} vectors for {} rows", rows.len(), h.vocab.len() + h.buckets.len())));
    }
    let ngrams = rows.split_off(h.vocab.len());
    SubwordEmbeddingModel::from_parts(h.config, h.vocab, rows, h.buckets.into_iter().zip(ngrams).collect(), h.loss_history)
}

pub fn save_doc_vectors<T: Scalar>(path: impl AsRef<Path>, m: &DocVectorModel<T>) -> Result<(), EmbeddingError> {
    let header = DocVecHeader { config: m.config.clone(), documents: m.len(), loss_history: m.loss_history.clone() };
    std::fs::write(path, encode(DOCVEC_MAGIC, &header, m.doc_vectors.iter()))?;
    Ok(())
}

pub fn load_doc_vectors<T: Scalar>(path: impl AsRef<Path>) -> Result<DocVectorModel<T>, EmbeddingError> {
    let bytes = std::fs::read(path)?;
    let (h, rows): (DocVecHeader, Vec<Vec<T>>) = decode(DOCVEC_MAGIC, &bytes, |h: &DocVecHeader| h.config.dim)?;
    if rows.len() != h.documents {
        return Err(EmbeddingError::Format(format!("{} vectors for {} documents", rows.len(), h.documents)));
    }
    Ok(DocVectorModel { config: h.config, doc_vectors: rows, loss_history: h.loss_history })
}

/// Plain-text export: `count dim` header, then `token v1 v2 ...` per vocabulary entry.
pub fn export_vec<T: Scalar>(m: &SubwordEmbeddingModel<T>, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{} {}", m.vocab.len(), m.dim())?;
    for ((w, _), v) in m.vocab.iter().zip(&m.word_vectors) {
        write!(out, "{w}")?;
        for x in v {
            write!(out, " {}", x.as_f32())?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::{train_doc_vectors, train_subword_embeddings};

    fn corpus() -> Vec<Vec<String>> {
        "sin hallazgos|derrame pleural|".repeat(3).split('|').map(|s| s.split_whitespace().map(String::from).collect()).collect()
    }

    #[test]
    fn subword_round_trip() {
        let dir = std::env::temp_dir().join(format!("radtag-sw-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let cfg = EmbeddingTrainConfig { dim: 6, epochs: 2, min_count: 1, bucket_count: 4096, ..Default::default() };
        let m = train_subword_embeddings::<f32>(&corpus(), &cfg, 1).unwrap();
        let p = dir.join("m.rtsw");
        save_subword(&p, &m).unwrap();
        assert_eq!(load_subword::<f32>(&p).unwrap(), m);
        let mut text = Vec::new();
        export_vec(&m, &mut text).unwrap();
        let text = String::from_utf8(text).unwrap();
        assert!(text.starts_with(&format!("{} 6\n", m.vocab.len())));
        assert_eq!(text.lines().nth(1).unwrap().split(' ').count(), 7);

        let d = train_doc_vectors::<f32>(&corpus(), &DocVecConfig { dim: 5, epochs: 2, min_count: 1, ..Default::default() }, 2).unwrap();
        let q = dir.join("d.rtdv");
        save_doc_vectors(&q, &d).unwrap();
        assert_eq!(load_doc_vectors::<f32>(&q).unwrap(), d);
        assert!(load_subword::<f32>(&q).is_err());
        std::fs::remove_dir_all(dir).unwrap();
    }
}
