//! Worked example from the public dataset: one two-projection study, manually labeled.

use std::collections::BTreeSet;

use radtag_core::locextract::bundled_rules;
use radtag_core::pipeline::{
    read_dataset_from, write_dataset_to, Annotator, DatasetRow, GoldLabeler, ReportInput, METHOD_PHYSICIAN,
};
use radtag_core::preprocess::{normalize_text, preprocess_report, report_string, PreprocessConfig, RawReport};
use radtag_core::taxonomy::Taxonomy;
use rust_stemmers::{Algorithm, Stemmer};

const RAW: &str = "Hallazgos: Cambios pulmonares crónicos severos. Signos de fibrosis bibasal. \
                   Sutil infiltrado pseudonodular milimétrico en vidrio deslustrado localizado en bases. \
                   Cifosis severa.";

const REPORT: &str =
    "cambi pulmonar cronic sever . sign fibrosis bibasal . sutil infiltr pseudonodul milimetr vidri deslustr localiz bas . cifosis sever .";

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn gold() -> GoldLabeler {
    let mut g = GoldLabeler::new();
    g.insert("4991845", 0, strings(&["chronic changes"]));
    g.insert("4991845", 1, strings(&["pulmonary fibrosis"]));
    g.insert("4991845", 2, strings(&["pseudonodule", "ground glass pattern"]));
    g.insert("4991845", 3, strings(&["kyphosis"]));
    g
}

fn input() -> ReportInput {
    ReportInput {
        meta: DatasetRow {
            image_id: "135803415504923515076821959678074435083_fzis7b.png".into(),
            image_dir: "2".into(),
            study_id: "20150914, 135803415504923515076821959678074435083".into(),
            patient_id: "313572750430997347502932654319389875966".into(),
            patient_birth: "1929".into(),
            projection: "PA".into(),
            method_projection: "manual".into(),
            report_id: "4991845".into(),
            ..Default::default()
        },
        text: RAW.into(),
    }
}

#[test]
fn report_string_is_reproduced_and_stems_agree_with_snowball() {
    let cfg = PreprocessConfig::default();
    let raw = RawReport::new("4991845", "p", Default::default(), RAW);
    let sentences = preprocess_report(&raw, &cfg).unwrap();
    assert_eq!(report_string(&sentences), REPORT);

    let oracle = Stemmer::create(Algorithm::Spanish);
    for s in &sentences {
        let words: Vec<String> = normalize_text(&s.raw).split_whitespace().filter(|w| !cfg.is_filtered(w)).map(str::to_string).collect();
        let stems: Vec<String> = words.iter().map(|w| oracle.stem(w).into_owned()).collect();
        assert_eq!(s.tokens, stems, "{}", s.raw);
    }
}

#[test]
fn gold_annotation_reproduces_label_columns() {
    let tax = Taxonomy::bundled();
    let rules = bundled_rules(&tax.locations);
    let pre = PreprocessConfig::default();
    let ann = Annotator { preprocess: &pre, taxonomy: &tax, rules: &rules };
    let rows = ann.annotate_dataset(&[input()], &gold()).unwrap();
    let row = &rows[0];

    assert_eq!(row.report, REPORT);
    assert_eq!(row.method_label, METHOD_PHYSICIAN);
    let published = ["pulmonary fibrosis", "chronic changes", "kyphosis", "pseudonodule", "ground glass pattern"];
    assert_eq!(row.labels.iter().map(String::as_str).collect::<BTreeSet<_>>(), published.into_iter().collect());

    let mut groups = row.labels_localizations_by_sentence.clone();
    let mut expected = vec![
        strings(&["pulmonary fibrosis", "loc basal bilateral"]),
        strings(&["chronic changes"]),
        strings(&["kyphosis"]),
        strings(&["pseudonodule", "ground glass pattern", "loc basal"]),
    ];
    groups.sort();
    expected.sort();
    assert_eq!(groups, expected);

    let cuis: BTreeSet<&str> = row.label_cuis.iter().map(String::as_str).collect();
    assert_eq!(cuis, ["C0034069", "C0742362", "C2115817", "C3544344"].into_iter().collect());
    assert_eq!(row.label_cuis.len(), 4);
    assert_eq!(row.localizations_cuis, vec!["C1282378"]);
    assert_eq!(row.localizations, vec!["loc basal bilateral", "loc basal"]);

    let mut buf = Vec::new();
    write_dataset_to(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.contains("['pseudonodule', 'ground glass pattern', 'loc basal']"), "{text}");
    assert_eq!(read_dataset_from(buf.as_slice()).unwrap(), rows);
}

#[test]
fn label_cuis_follow_label_order() {
    let tax = Taxonomy::bundled();
    let rules = bundled_rules(&tax.locations);
    let pre = PreprocessConfig::default();
    let ann = Annotator { preprocess: &pre, taxonomy: &tax, rules: &rules };
    let row = ann.annotate_report(&input(), &gold()).unwrap();
    let with_cui: Vec<&str> =
        row.labels.iter().filter_map(|l| tax.cui_of(l).unwrap()).collect();
    assert_eq!(row.label_cuis, with_cui);
}
