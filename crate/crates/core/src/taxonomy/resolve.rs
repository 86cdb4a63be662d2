use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{LabelSet, Taxonomy, TaxonomyError};

pub const NORMAL: &str = "normal";
pub const EXCLUDE: &str = "exclude";
pub const SUBOPTIMAL: &str = "suboptimal study";
pub const UNCHANGED: &str = "unchanged";

/// Labels that do not describe a finding or diagnosis.
pub fn is_non_finding(label: &str) -> bool {
    matches!(label, NORMAL | EXCLUDE | SUBOPTIMAL)
}

/// Union of sentence labels with the Normal and Exclude exclusivity rules applied.
pub fn resolve_report_labels<'a, I>(per_sentence: I) -> LabelSet
where
    I: IntoIterator<Item = &'a LabelSet>,
{
    let mut labels: LabelSet = per_sentence.into_iter().flatten().cloned().collect();
    if labels.iter().any(|l| !is_non_finding(l)) {
        labels.remove(NORMAL);
    }
    if labels.len() > 1 {
        labels.remove(EXCLUDE);
    }
    labels
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyTimeline {
    pub patient_id: String,
    pub studies: Vec<(NaiveDate, LabelSet)>,
}

impl StudyTimeline {
    pub fn new(patient_id: impl Into<String>, mut studies: Vec<(NaiveDate, LabelSet)>) -> Self {
        studies.sort_by_key(|(d, _)| *d);
        Self { patient_id: patient_id.into(), studies }
    }
}

/// Replace `unchanged` by the finding/diagnosis labels of the most recent prior
/// study; drop it when there is none. Own labels of the study are kept.
pub fn resolve_unchanged(timeline: &StudyTimeline) -> StudyTimeline {
    let mut out: Vec<(NaiveDate, LabelSet)> = Vec::with_capacity(timeline.studies.len());
    for (date, labels) in &timeline.studies {
        let resolved = if labels.contains(UNCHANGED) {
            let mut own = labels.clone();
            own.remove(UNCHANGED);
            if let Some((_, prior)) = out.last() {
                own.extend(prior.iter().filter(|l| !is_non_finding(l)).cloned());
            }
            resolve_report_labels([&own])
        } else {
            labels.clone()
        };
        out.push((*date, resolved));
    }
    StudyTimeline { patient_id: timeline.patient_id.clone(), studies: out }
}

/// CUIs of `labels` in order, skipping labels without one and repeated CUIs.
pub fn map_labels_to_cuis<S: AsRef<str>>(labels: &[S], taxonomy: &Taxonomy) -> Result<Vec<String>, TaxonomyError> {
    let mut out: Vec<String> = Vec::new();
    for label in labels {
        if let Some(cui) = taxonomy.cui_of(label.as_ref())? {
            if !out.iter().any(|c| c == cui) {
                out.push(cui.to_string());
            }
        }
    }
    Ok(out)
}
