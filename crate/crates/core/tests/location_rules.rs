use std::collections::BTreeSet;

use radtag_core::locextract::{bundled_rules, extract_locations, find_matches, LocationRule};
use radtag_core::taxonomy::Taxonomy;

const FIXTURE: &str = include_str!("fixtures/location_sentences.tsv");

fn cases() -> Vec<(usize, &'static str, &'static str)> {
    FIXTURE
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let mut f = l.split('\t');
            (f.next().unwrap().parse().unwrap(), f.next().unwrap(), f.next().unwrap())
        })
        .collect()
}

fn rules() -> Vec<LocationRule> {
    bundled_rules(&Taxonomy::bundled().locations)
}

#[test]
fn every_rule_matches_its_fixture_sentence() {
    let rules = rules();
    let cases = cases();
    assert_eq!(cases.len(), rules.len());
    let covered: BTreeSet<usize> = cases.iter().map(|c| c.0).collect();
    assert_eq!(covered, (0..rules.len()).collect());
    for (rank, sentence, concept) in cases {
        let rule = &rules[rank];
        assert!(rule.pattern.is_match(sentence), "rule {rank} `{}` on `{sentence}`", rule.pattern);
        assert_eq!(rule.concept, concept, "rule {rank}");
        assert!(extract_locations(sentence, &rules).iter().any(|c| c == concept), "rule {rank}: `{sentence}`");
    }
}

#[test]
fn duplicated_first_rule_shadows_its_copy() {
    let rules = rules();
    assert_eq!(rules[0].pattern.as_str(), rules[1].pattern.as_str());
    let m = find_matches("pinzamient sen cost derech", &rules);
    assert!(m.iter().all(|m| m.rule_rank != 1));
}

#[test]
fn contained_spans_are_suppressed() {
    let rules = rules();
    assert_eq!(extract_locations("pinzamient sen cost diafragmat derech", &rules), vec!["right costophrenic angle"]);
    assert!(extract_locations("cardiomegali sin otros hallazg", &rules).len() <= 1);
    assert!(extract_locations("", &rules).is_empty());
}
