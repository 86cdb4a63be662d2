use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radtag_core::embeddings::{
    kmeans_cluster, load_subword, save_subword, train_doc_vectors, train_subword_embeddings, DocVecConfig,
    EmbeddingTrainConfig,
};

const TOPICS: [[&str; 6]; 2] = [
    ["cardiomegali", "aort", "elong", "calcific", "cardi", "silu"],
    ["fractur", "costal", "arc", "column", "escoliosis", "dorsal"],
];

fn corpus(seed: u64, docs: usize) -> (Vec<Vec<String>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut topic = Vec::new();
    for i in 0..docs {
        let t = i % 2;
        topic.push(t);
        out.push((0..8).map(|_| TOPICS[t][rng.random_range(0..6)].to_string()).collect());
    }
    (out, topic)
}

fn cos(a: &[f32], b: &[f32]) -> f32 {
    let dot: f32 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (a.iter().map(|x| x * x).sum::<f32>().sqrt() * b.iter().map(|x| x * x).sum::<f32>().sqrt())
}

#[test]
fn loss_decreases_across_seeds() {
    for seed in 0..10 {
        let (docs, _) = corpus(seed, 60);
        let cfg = EmbeddingTrainConfig { dim: 16, epochs: 20, min_count: 1, bucket_count: 1 << 14, subsample_threshold: 1.0, ..Default::default() };
        let m = train_subword_embeddings::<f32>(&docs, &cfg, seed).unwrap();
        let (first, last) = (m.loss_history[0], *m.loss_history.last().unwrap());
        assert!(last < first, "seed {seed}: {first} -> {last}");
    }
}

#[test]
fn words_of_one_topic_end_up_closer() {
    let (docs, _) = corpus(1, 200);
    let cfg = EmbeddingTrainConfig { dim: 16, epochs: 30, min_count: 1, bucket_count: 1 << 14, subsample_threshold: 1.0, ..Default::default() };
    let m = train_subword_embeddings::<f32>(&docs, &cfg, 1).unwrap();
    let v = |w: &str| m.embed_token(w);
    let within = cos(&v("cardiomegali"), &v("aort")) + cos(&v("fractur"), &v("costal"));
    let across = cos(&v("cardiomegali"), &v("costal")) + cos(&v("fractur"), &v("aort"));
    assert!(within > across, "{within} vs {across}");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.rtsw");
    save_subword(&path, &m).unwrap();
    let back = load_subword::<f32>(&path).unwrap();
    assert_eq!(back.embed_token("cardiomegalia"), m.embed_token("cardiomegalia"));
}

#[test]
fn document_topics_are_recovered() {
    let (docs, topic) = corpus(2, 80);
    let cfg = DocVecConfig { dim: 16, window: 2, epochs: 10, min_count: 1, subsample_threshold: 1.0, ..Default::default() };
    let dv = train_doc_vectors::<f32>(&docs, &cfg, 2).unwrap();
    let km = kmeans_cluster(&dv.doc_vectors, 2, 2).unwrap();
    let agree = km.assignment.iter().zip(&topic).filter(|(a, t)| a == t).count();
    let purity = agree.max(docs.len() - agree) as f64 / docs.len() as f64;
    assert!(purity >= 0.9, "purity {purity}");
}
