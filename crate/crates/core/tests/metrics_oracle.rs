//! Metrics against a brute-force rational recomputation from the definitions.

use std::collections::BTreeSet;

use num_rational::Ratio;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radtag_core::metrics::{evaluate, METRIC_NAMES};
use radtag_core::taxonomy::LabelSet;
use radtag_core::ExactMetrics;

type Q = Ratio<i64>;

fn q(n: usize) -> Q {
    Q::from_integer(n as i64)
}

fn div(a: Q, b: Q) -> Q {
    if b == q(0) {
        q(0)
    } else {
        a / b
    }
}

fn f1(p: Q, r: Q) -> Q {
    div(q(2) * p * r, p + r)
}

/// Scores straight from per-sample set operations.
fn brute_force(truth: &[LabelSet], pred: &[LabelSet], labels: &[String]) -> [Q; 8] {
    let space: LabelSet = labels.iter().cloned().collect();
    let clip = |s: &LabelSet| s.intersection(&space).cloned().collect::<LabelSet>();
    let exact = truth.iter().zip(pred).filter(|(t, p)| clip(t) == clip(p)).count();
    let per_label: Vec<(usize, usize, usize)> = labels
        .iter()
        .map(|l| {
            let tp = truth.iter().zip(pred).filter(|(t, p)| t.contains(l) && p.contains(l)).count();
            let pp = pred.iter().filter(|p| p.contains(l)).count();
            let ap = truth.iter().filter(|t| t.contains(l)).count();
            (tp, pp, ap)
        })
        .collect();
    let n = q(labels.len());
    let mp = per_label.iter().map(|&(tp, pp, _)| div(q(tp), q(pp))).sum::<Q>() / n;
    let mr = per_label.iter().map(|&(tp, _, ap)| div(q(tp), q(ap))).sum::<Q>() / n;
    let tp: usize = per_label.iter().map(|x| x.0).sum();
    let pp: usize = per_label.iter().map(|x| x.1).sum();
    let ap: usize = per_label.iter().map(|x| x.2).sum();
    let (up, ur) = (div(q(tp), q(pp)), div(q(tp), q(ap)));
    let weighted = div(
        per_label.iter().map(|&(tp, pp, ap)| q(ap) * f1(div(q(tp), q(pp)), div(q(tp), q(ap)))).sum::<Q>(),
        q(ap),
    );
    [div(q(exact), q(truth.len())), mp, mr, f1(mp, mr), up, ur, f1(up, ur), weighted]
}

fn random_set(rng: &mut ChaCha8Rng, pool: usize) -> LabelSet {
    (0..pool).filter(|_| rng.random_bool(0.4)).map(|i| format!("l{i}")).collect()
}

#[test]
fn thousand_random_instances_match_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1000 {
        let n_labels = rng.random_range(1..=6);
        let n_samples = rng.random_range(0..=8);
        let labels: Vec<String> = (0..n_labels).map(|i| format!("l{i}")).collect();
        // one extra label outside the space exercises filtering
        let truth: Vec<LabelSet> = (0..n_samples).map(|_| random_set(&mut rng, n_labels + 1)).collect();
        let pred: Vec<LabelSet> = (0..n_samples).map(|_| random_set(&mut rng, n_labels + 1)).collect();
        let got: ExactMetrics = evaluate(&truth, &pred, &labels).unwrap();
        let want = brute_force(&truth, &pred, &labels);
        for (k, name) in METRIC_NAMES.iter().enumerate() {
            assert_eq!(got.values()[k], want[k], "case {case}: {name}");
        }
    }
}

#[test]
fn perfect_and_empty_predictions() {
    let labels = vec!["a".to_string(), "b".to_string()];
    let truth: Vec<LabelSet> = vec![["a".to_string()].into(), ["a".to_string(), "b".to_string()].into()];
    let perfect: ExactMetrics = evaluate(&truth, &truth, &labels).unwrap();
    assert!(perfect.values().iter().all(|v| *v == q(1)));
    let empty: ExactMetrics = evaluate(&truth, &vec![BTreeSet::new(); 2], &labels).unwrap();
    assert!(empty.values().iter().all(|v| *v == q(0)));
}
