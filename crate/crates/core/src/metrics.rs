//! Multi-label evaluation: exact-match accuracy and macro / micro / weighted scores.
//!
//! Every ratio with a zero denominator is 0. Macro F1 is the harmonic mean of
//! macro precision and macro recall, not the mean of per-label F1 scores.
//! Labels outside the label space are ignored, including for exact match.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

use crate::scalar::MetricScalar;
use crate::taxonomy::LabelSet;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("truth has {truth} samples but prediction has {pred}")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("label space is empty")]
    EmptyLabelSpace,
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub labels: Vec<String>,
    pub tp: Vec<u64>,
    pub fp: Vec<u64>,
    pub fn_: Vec<u64>,
    pub samples: u64,
    pub exact_matches: u64,
}

impl ConfusionCounts {
    pub fn support(&self, l: usize) -> u64 {
        self.tp[l] + self.fn_[l]
    }

    pub fn label_count(&self) -> usize {
        self.tp.len()
    }
}

/// Confusion counts over label indices `0..n_labels`.
pub fn confusion_counts_indexed(
    truth: &[BTreeSet<usize>],
    pred: &[BTreeSet<usize>],
    n_labels: usize,
) -> Result<ConfusionCounts, MetricsError> {
    if truth.len() != pred.len() {
        return Err(MetricsError::LengthMismatch { truth: truth.len(), pred: pred.len() });
    }
    let mut c = ConfusionCounts {
        labels: (0..n_labels).map(|i| i.to_string()).collect(),
        tp: vec![0; n_labels],
        fp: vec![0; n_labels],
        fn_: vec![0; n_labels],
        samples: truth.len() as u64,
        exact_matches: 0,
    };
    for (t, p) in truth.iter().zip(pred) {
        let mut exact = true;
        for l in 0..n_labels {
            match (t.contains(&l), p.contains(&l)) {
                (true, true) => c.tp[l] += 1,
                (false, true) => {
                    c.fp[l] += 1;
                    exact = false;
                }
                (true, false) => {
                    c.fn_[l] += 1;
                    exact = false;
                }
                (false, false) => {}
            }
        }
        c.exact_matches += exact as u64;
    }
    Ok(c)
}

fn to_indices(sets: &[LabelSet], index: &BTreeMap<&str, usize>) -> Vec<BTreeSet<usize>> {
    sets.iter().map(|s| s.iter().filter_map(|l| index.get(l.as_str()).copied()).collect()).collect()
}

pub fn confusion_counts<S: AsRef<str>>(
    truth: &[LabelSet],
    pred: &[LabelSet],
    labels: &[S],
) -> Result<ConfusionCounts, MetricsError> {
    let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_ref(), i)).collect();
    let mut c = confusion_counts_indexed(&to_indices(truth, &index), &to_indices(pred, &index), labels.len())?;
    c.labels = labels.iter().map(|l| l.as_ref().to_string()).collect();
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport<T> {
    pub accuracy: T,
    pub macro_p: T,
    pub macro_r: T,
    pub macro_f1: T,
    pub micro_p: T,
    pub micro_r: T,
    pub micro_f1: T,
    pub weighted_f1: T,
    pub counts: ConfusionCounts,
}

pub const METRIC_NAMES: [&str; 8] =
    ["accuracy", "macro_p", "macro_r", "macro_f1", "micro_p", "micro_r", "micro_f1", "weighted_f1"];

impl<T: Copy> MetricsReport<T> {
    /// Values in [`METRIC_NAMES`] order.
    pub fn values(&self) -> [T; 8] {
        [
            self.accuracy,
            self.macro_p,
            self.macro_r,
            self.macro_f1,
            self.micro_p,
            self.micro_r,
            self.micro_f1,
            self.weighted_f1,
        ]
    }
}

impl<T: Copy + ToPrimitive> MetricsReport<T> {
    pub fn to_f64(&self) -> MetricsReport<f64> {
        let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
        MetricsReport {
            accuracy: f(self.accuracy),
            macro_p: f(self.macro_p),
            macro_r: f(self.macro_r),
            macro_f1: f(self.macro_f1),
            micro_p: f(self.micro_p),
            micro_r: f(self.micro_r),
            micro_f1: f(self.micro_f1),
            weighted_f1: f(self.weighted_f1),
            counts: self.counts.clone(),
        }
    }
}

fn of<T: MetricScalar>(n: u64) -> T {
    T::from_u64(n).expect("count representable")
}

fn ratio<T: MetricScalar>(num: T, den: T) -> T {
    if den == T::zero() {
        T::zero()
    } else {
        num / den
    }
}

fn harmonic<T: MetricScalar>(p: T, r: T) -> T {
    let two = T::one() + T::one();
    ratio(two * p * r, p + r)
}

/// Scores from confusion counts.
pub fn metrics_from_counts<T: MetricScalar>(c: &ConfusionCounts) -> Result<MetricsReport<T>, MetricsError> {
    let n = c.label_count();
    if n == 0 {
        return Err(MetricsError::EmptyLabelSpace);
    }
    let mut sum_p = T::zero();
    let mut sum_r = T::zero();
    let mut weighted = T::zero();
    for l in 0..n {
        let (tp, fp, fn_) = (c.tp[l], c.fp[l], c.fn_[l]);
        let p = ratio(of::<T>(tp), of(tp + fp));
        let r = ratio(of::<T>(tp), of(tp + fn_));
        sum_p = sum_p + p;
        sum_r = sum_r + r;
        weighted = weighted + of::<T>(c.support(l)) * harmonic(p, r);
    }
    let macro_p = sum_p / of(n as u64);
    let macro_r = sum_r / of(n as u64);
    let tp: u64 = c.tp.iter().sum();
    let fp: u64 = c.fp.iter().sum();
    let fn_: u64 = c.fn_.iter().sum();
    let micro_p = ratio(of::<T>(tp), of(tp + fp));
    let micro_r = ratio(of::<T>(tp), of(tp + fn_));
    Ok(MetricsReport {
        accuracy: ratio(of(c.exact_matches), of(c.samples)),
        macro_p,
        macro_r,
        macro_f1: harmonic(macro_p, macro_r),
        micro_p,
        micro_r,
        micro_f1: harmonic(micro_p, micro_r),
        weighted_f1: ratio(weighted, of(tp + fn_)),
        counts: c.clone(),
    })
}

pub fn evaluate<T: MetricScalar, S: AsRef<str>>(
    truth: &[LabelSet],
    pred: &[LabelSet],
    labels: &[S],
) -> Result<MetricsReport<T>, MetricsError> {
    if labels.is_empty() {
        return Err(MetricsError::EmptyLabelSpace);
    }
    metrics_from_counts(&confusion_counts(truth, pred, labels)?)
}

pub fn evaluate_indexed<T: MetricScalar>(
    truth: &[BTreeSet<usize>],
    pred: &[BTreeSet<usize>],
    n_labels: usize,
) -> Result<MetricsReport<T>, MetricsError> {
    if n_labels == 0 {
        return Err(MetricsError::EmptyLabelSpace);
    }
    metrics_from_counts(&confusion_counts_indexed(truth, pred, n_labels)?)
}

/// Read a `sample id, labels` CSV where labels are `;`-joined.
pub fn read_label_csv(path: impl AsRef<Path>) -> Result<Vec<(String, LabelSet)>, MetricsError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 {
        return Err(MetricsError::Schema(format!("expected 2 columns (id, labels), found {}", headers.len())));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let labels = rec[1].split(';').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect();
        out.push((rec[0].to_string(), labels));
    }
    Ok(out)
}

/// Align truth and prediction files by sample id.
pub fn align_by_id(
    truth: Vec<(String, LabelSet)>,
    pred: Vec<(String, LabelSet)>,
) -> Result<(Vec<LabelSet>, Vec<LabelSet>), MetricsError> {
    let mut by_id: BTreeMap<String, LabelSet> = pred.into_iter().collect();
    let mut t = Vec::with_capacity(truth.len());
    let mut p = Vec::with_capacity(truth.len());
    for (id, labels) in truth {
        let pl = by_id.remove(&id).ok_or_else(|| MetricsError::Schema(format!("sample `{id}` missing from predictions")))?;
        t.push(labels);
        p.push(pl);
    }
    if let Some(extra) = by_id.keys().next() {
        return Err(MetricsError::Schema(format!("sample `{extra}` missing from truth")));
    }
    Ok((t, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use proptest::prelude::*;

    fn sets(v: &[&[&str]]) -> Vec<LabelSet> {
        v.iter().map(|s| s.iter().map(|l| l.to_string()).collect()).collect()
    }

    #[test]
    fn counts_examples() {
        let c = confusion_counts(&sets(&[&["a"]]), &sets(&[&["a", "b"]]), &["a", "b"]).unwrap();
        assert_eq!((c.tp.clone(), c.fp.clone(), c.fn_.clone()), (vec![1, 0], vec![0, 1], vec![0, 0]));
        let c = confusion_counts(&sets(&[&["a"], &["b", "c"]]), &sets(&[&["a", "b"], &["c"]]), &["a", "b", "c"]).unwrap();
        assert_eq!(c.tp, vec![1, 0, 1]);
        assert_eq!(c.fp, vec![0, 1, 0]);
        assert_eq!(c.fn_, vec![0, 1, 0]);
        assert!(matches!(
            confusion_counts(&sets(&[&["a"]]), &[], &["a"]),
            Err(MetricsError::LengthMismatch { truth: 1, pred: 0 })
        ));
    }

    #[test]
    fn worked_example_exact() {
        let truth = sets(&[&["a"], &["b", "c"]]);
        let pred = sets(&[&["a", "b"], &["c"]]);
        let m: MetricsReport<Rational> = evaluate(&truth, &pred, &["a", "b", "c"]).unwrap();
        let two_thirds = Rational::new(2, 3);
        assert_eq!(m.accuracy, Rational::from_integer(0));
        for v in &m.values()[1..] {
            assert_eq!(*v, two_thirds);
        }
    }

    #[test]
    fn macro_f1_is_not_mean_of_label_f1() {
        // a: P=1, R=1/2; b: P=1/3, R=1.
        let truth = sets(&[&["a"], &["a"], &["b"]]);
        let pred = sets(&[&["a", "b"], &["b"], &["b"]]);
        let m: MetricsReport<Rational> = evaluate(&truth, &pred, &["a", "b"]).unwrap();
        assert_eq!(m.macro_p, Rational::new(2, 3));
        assert_eq!(m.macro_r, Rational::new(3, 4));
        assert_eq!(m.macro_f1, Rational::new(12, 17));
        let mean_label_f1 = (Rational::new(2, 3) + Rational::new(1, 2)) / Rational::from_integer(2);
        assert_ne!(m.macro_f1, mean_label_f1);
        // weighted: (2·2/3 + 1·1/2) / 3
        assert_eq!(m.weighted_f1, Rational::new(11, 18));
    }

    #[test]
    fn degenerate_cases() {
        let truth = sets(&[&["a"], &["b"]]);
        let m: MetricsReport<f64> = evaluate(&truth, &truth, &["a", "b", "z"]).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.micro_f1, 1.0);
        let m: MetricsReport<f64> = evaluate(&truth, &sets(&[&[], &[]]), &["a", "b"]).unwrap();
        assert_eq!((m.micro_p, m.micro_f1, m.weighted_f1), (0.0, 0.0, 0.0));
        assert!(matches!(evaluate::<f64, &str>(&truth, &truth, &[]), Err(MetricsError::EmptyLabelSpace)));
    }

    fn dataset() -> impl Strategy<Value = (Vec<BTreeSet<usize>>, Vec<BTreeSet<usize>>, usize)> {
        (1usize..=5).prop_flat_map(|n| {
            let set = proptest::collection::btree_set(0..n, 0..=n);
            proptest::collection::vec((set.clone(), set), 0..8).prop_map(move |pairs| {
                let (t, p) = pairs.into_iter().unzip();
                (t, p, n)
            })
        })
    }

    proptest! {
        #[test]
        fn bounded_and_permutation_invariant((t, p, n) in dataset()) {
            let m: MetricsReport<Rational> = evaluate_indexed(&t, &p, n).unwrap();
            for v in m.values() {
                prop_assert!(v >= Rational::from_integer(0) && v <= Rational::from_integer(1));
            }
            let mut tr = t.clone();
            let mut pr = p.clone();
            tr.reverse();
            pr.reverse();
            prop_assert_eq!(evaluate_indexed::<Rational>(&tr, &pr, n).unwrap().values(), m.values());
            let td: Vec<_> = t.iter().chain(&t).cloned().collect();
            let pd: Vec<_> = p.iter().chain(&p).cloned().collect();
            prop_assert_eq!(evaluate_indexed::<Rational>(&td, &pd, n).unwrap().micro_f1, m.micro_f1);
        }

        #[test]
        fn single_label_accuracy_equals_micro_recall(
            pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..10)
        ) {
            let t: Vec<BTreeSet<usize>> = pairs.iter().map(|(a, _)| [*a].into()).collect();
            let p: Vec<BTreeSet<usize>> = pairs.iter().map(|(_, b)| [*b].into()).collect();
            let m: MetricsReport<Rational> = evaluate_indexed(&t, &p, 4).unwrap();
            prop_assert_eq!(m.accuracy, m.micro_r);
        }
    }
}
