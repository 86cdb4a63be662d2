use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radtag_core::neuralnet::{attention_head, AttentionHeadParams, SequenceClassifier, Tensor, Topology};
use radtag_core::neuralnet::{toy_config, toy_model};

fn random(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> Tensor<f64> {
    Tensor::matrix(rows, cols, (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect())
}

#[test]
fn attention_rows_are_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let rows = rng.random_range(1..=20);
        let f = rng.random_range(1..=16);
        let l = rng.random_range(1..=12);
        let scale = [0.1, 1.0, 10.0, 50.0][rng.random_range(0..4)];
        let h = random(rows, f, scale, &mut rng);
        let params = AttentionHeadParams { u: random(l, f, scale, &mut rng), beta: random(l, f, 1.0, &mut rng), b: vec![0.0; l] };
        let (alpha, probs) = attention_head(&h, &params).unwrap();
        assert_eq!(alpha.shape, vec![l, rows]);
        assert_eq!(probs.len(), l);
        for r in 0..l {
            let row = alpha.row_slice(r);
            assert!(row.iter().all(|a| (0.0..=1.0).contains(a)));
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-9, "row sum {s}");
        }
    }
}

#[test]
fn model_attention_rows_sum_to_one() {
    for t in [Topology::CnnAtt, Topology::RnnAtt] {
        let m: SequenceClassifier<f64> = toy_model(t, 5).unwrap();
        let cfg = toy_config(t);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for len in [1, 4, cfg.max_len] {
            let x = random(len, cfg.embed_dim, 1.0, &mut rng);
            let alpha = m.attention_weights(&x).unwrap().unwrap();
            for r in 0..alpha.rows() {
                assert!((alpha.row_slice(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
    let plain = toy_model(Topology::Rnn, 5).unwrap();
    assert!(plain.attention_weights(&Tensor::zeros(&[3, 10])).unwrap().is_none());
}
