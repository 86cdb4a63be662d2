use std::collections::BTreeMap;

use chrono::NaiveDate;

use super::annotate::Annotator;
use super::dataset::DatasetRow;
use super::PipelineError;
use crate::locextract::LOC_PREFIX;
use crate::taxonomy::{resolve_unchanged, StudyTimeline, UNCHANGED};
use crate::taxonomy::LabelSet;

/// Study date from a `StudyID` of the form `YYYYMMDD, <id>`.
pub fn study_date(study_id: &str) -> Option<NaiveDate> {
    let digits = study_id.trim().get(..8)?;
    NaiveDate::parse_from_str(digits, "%Y%m%d").ok()
}

/// Rewrite a row so that its label columns agree with `labels`: `unchanged`
/// entries in sentence groups expand to the labels that replaced them, labels
/// not in the set are dropped, and label-less groups disappear.
fn apply_labels(row: &mut DatasetRow, labels: &LabelSet, substituted: &[String]) {
    let mut groups = Vec::new();
    for g in &row.labels_localizations_by_sentence {
        let mut out: Vec<String> = Vec::new();
        for e in g {
            let expanded: Vec<&String> = if e == UNCHANGED { substituted.iter().collect() } else { vec![e] };
            for x in expanded {
                let keep = x.starts_with(LOC_PREFIX) || labels.contains(x);
                if keep && !out.contains(x) {
                    out.push(x.clone());
                }
            }
        }
        if out.iter().any(|e| !e.starts_with(LOC_PREFIX)) {
            groups.push(out);
        }
    }
    row.labels = Vec::new();
    row.localizations = Vec::new();
    for e in groups.iter().flatten() {
        let target = if e.starts_with(LOC_PREFIX) { &mut row.localizations } else { &mut row.labels };
        if !target.contains(e) {
            target.push(e.clone());
        }
    }
    for l in labels {
        if !row.labels.contains(l) {
            row.labels.push(l.clone());
        }
    }
    row.labels_localizations_by_sentence = groups;
}

/// Resolve `unchanged` per patient against the previous study's labels.
/// Rows of one study share its labels; studies are ordered by date.
pub fn resolve_dataset_timelines(rows: &mut [DatasetRow], annotator: &Annotator) -> Result<usize, PipelineError> {
    let mut by_patient: BTreeMap<&str, Vec<(NaiveDate, String, LabelSet)>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        let date = study_date(&r.study_id).ok_or_else(|| PipelineError::Schema {
            column: "StudyID".into(),
            line: i + 2,
            message: format!("`{}` does not start with a YYYYMMDD date", r.study_id),
        })?;
        let studies = by_patient.entry(&r.patient_id).or_default();
        if !studies.iter().any(|(_, s, _)| *s == r.study_id) {
            studies.push((date, r.study_id.clone(), r.labels.iter().cloned().collect()));
        }
    }
    let mut resolved: BTreeMap<(String, String), (LabelSet, Vec<String>)> = BTreeMap::new();
    for (patient, mut studies) in by_patient {
        studies.sort_by_key(|(d, _, _)| *d);
        let timeline = StudyTimeline::new(patient, studies.iter().map(|(d, _, l)| (*d, l.clone())).collect());
        let out = resolve_unchanged(&timeline);
        for (k, ((_, study, before), (_, after))) in studies.iter().zip(&out.studies).enumerate() {
            if before.contains(UNCHANGED) {
                let prior = if k > 0 { out.studies[k - 1].1.iter().cloned().collect() } else { Vec::new() };
                resolved.insert((patient.to_string(), study.clone()), (after.clone(), prior));
            }
        }
    }
    let mut changed = 0;
    for r in rows.iter_mut() {
        if let Some((labels, prior)) = resolved.get(&(r.patient_id.clone(), r.study_id.clone())) {
            let substituted: Vec<String> = prior.iter().filter(|l| labels.contains(*l)).cloned().collect();
            apply_labels(r, labels, &substituted);
            annotator.fill_cuis(r)?;
            changed += 1;
        }
    }
    Ok(changed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locextract::bundled_rules;
    use crate::preprocess::PreprocessConfig;
    use crate::taxonomy::Taxonomy;

    fn row(patient: &str, study: &str, groups: Vec<Vec<&str>>) -> DatasetRow {
        let groups: Vec<Vec<String>> = groups.into_iter().map(|g| g.into_iter().map(String::from).collect()).collect();
        let labels = groups.iter().flatten().filter(|e| !e.starts_with(LOC_PREFIX)).cloned().collect();
        DatasetRow {
            patient_id: patient.into(),
            study_id: study.into(),
            method_label: "Physician".into(),
            labels,
            labels_localizations_by_sentence: groups,
            ..Default::default()
        }
    }

    #[test]
    fn unchanged_is_substituted_or_dropped() {
        let tax = Taxonomy::bundled();
        let rules = bundled_rules(&tax.locations);
        let pre = PreprocessConfig::default();
        let ann = Annotator { preprocess: &pre, taxonomy: &tax, rules: &rules };
        let mut rows = vec![
            row("p", "20160101, b", vec![vec!["unchanged"], vec!["kyphosis"]]),
            row("p", "20150101, a", vec![vec!["cardiomegaly", "loc cardiac"]]),
            row("q", "20150101, c", vec![vec!["unchanged"], vec!["kyphosis"]]),
        ];
        assert_eq!(resolve_dataset_timelines(&mut rows, &ann).unwrap(), 2);
        assert_eq!(rows[0].labels, vec!["cardiomegaly", "kyphosis"]);
        assert_eq!(rows[0].labels_localizations_by_sentence, vec![vec!["cardiomegaly"], vec!["kyphosis"]]);
        assert_eq!(rows[2].labels, vec!["kyphosis"]);
        assert_eq!(rows[2].labels_localizations_by_sentence, vec![vec!["kyphosis"]]);
        assert_eq!(rows[1].labels, vec!["cardiomegaly"]);
        let mut bad = vec![row("p", "x", vec![])];
        assert!(resolve_dataset_timelines(&mut bad, &ann).unwrap_err().is_schema());
    }
}
