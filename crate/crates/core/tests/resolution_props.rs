use std::collections::BTreeSet;

use chrono::NaiveDate;
use proptest::prelude::*;

use radtag_core::taxonomy::{
    is_non_finding, resolve_report_labels, resolve_unchanged, LabelSet, StudyTimeline, EXCLUDE, NORMAL, UNCHANGED,
};

const POOL: [&str; 8] = ["normal", "exclude", "suboptimal study", "unchanged", "cardiomegaly", "kyphosis", "scoliosis", "pneumonia"];

fn label_set() -> impl Strategy<Value = LabelSet> {
    prop::collection::btree_set(prop::sample::select(POOL.to_vec()), 0..4)
        .prop_map(|s| s.into_iter().map(str::to_string).collect())
}

fn date(i: usize) -> NaiveDate {
    NaiveDate::from_ymd_opt(2010, 1, 1).unwrap() + chrono::Days::new(i as u64 * 30)
}

proptest! {
    #[test]
    fn normal_and_exclude_stand_alone(sentences in prop::collection::vec(label_set(), 0..6)) {
        let out = resolve_report_labels(&sentences);
        if out.contains(EXCLUDE) {
            prop_assert_eq!(out.len(), 1);
        }
        if out.contains(NORMAL) {
            prop_assert!(out.iter().all(|l| is_non_finding(l)));
        }
        let union: BTreeSet<&String> = sentences.iter().flatten().collect();
        prop_assert!(out.iter().all(|l| union.contains(l)));
    }

    #[test]
    fn unchanged_drops_without_prior_and_substitutes_otherwise(studies in prop::collection::vec(label_set(), 1..6)) {
        let timeline = StudyTimeline::new("p", studies.iter().cloned().enumerate().map(|(i, s)| (date(i), s)).collect());
        let out = resolve_unchanged(&timeline);
        prop_assert_eq!(out.studies.len(), studies.len());
        for (i, (before, (_, after))) in studies.iter().zip(&out.studies).enumerate() {
            prop_assert!(!after.contains(UNCHANGED) || !before.contains(UNCHANGED));
            if !before.contains(UNCHANGED) {
                prop_assert_eq!(after, before);
                continue;
            }
            let mut own = before.clone();
            own.remove(UNCHANGED);
            if i == 0 {
                prop_assert_eq!(after, &resolve_report_labels([&own]));
            } else {
                let prior = &out.studies[i - 1].1;
                for l in prior.iter().filter(|l| !is_non_finding(l)) {
                    prop_assert!(after.contains(l), "{} missing", l);
                }
                let mut expected = own.clone();
                expected.extend(prior.iter().filter(|l| !is_non_finding(l)).cloned());
                prop_assert_eq!(after, &resolve_report_labels([&expected]));
            }
        }
    }
}
