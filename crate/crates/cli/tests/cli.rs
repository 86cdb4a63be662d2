use std::path::Path;
use std::process::{Command, Output};

fn radtag(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radtag")).current_dir(dir).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn usage_and_config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&radtag(dir.path(), &["no-such-command"])), 3);
    assert_eq!(code(&radtag(dir.path(), &["gradcheck", "--topology", "lstm"])), 3);
    assert_eq!(code(&radtag(dir.path(), &["gradcheck", "--topology", "cnn", "--len", "0"])), 3);
    std::fs::write(dir.path().join("bad.cfg"), "colour=blue\n").unwrap();
    std::fs::write(dir.path().join("c.csv"), "tokens\nopac\n").unwrap();
    let o = radtag(dir.path(), &["embed", "train", "--corpus", "c.csv", "--output", "e.bin", "--config", "bad.cfg"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&radtag(dir.path(), &["--help"])), 0);
}

#[test]
fn schema_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("t.csv"), "id,labels\na,x\n").unwrap();
    std::fs::write(dir.path().join("p.csv"), "id,labels,score\na,x,1\n").unwrap();
    assert_eq!(code(&radtag(dir.path(), &["metrics", "--truth", "t.csv", "--pred", "p.csv"])), 2);
    std::fs::write(dir.path().join("r.csv"), "ReportID,Text\n1,x\n").unwrap();
    assert_eq!(code(&radtag(dir.path(), &["annotate", "--reports", "r.csv", "--gold", "t.csv", "--output", "o.csv"])), 2);
    assert_eq!(code(&radtag(dir.path(), &["taxonomy", "cui", "not a label"])), 2);
}

#[test]
fn missing_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&radtag(dir.path(), &["metrics", "--truth", "nope.csv", "--pred", "nope.csv"])), 1);
}

#[test]
fn metrics_prints_fixed_order() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("t.csv"), "id,labels\na,x;y\nb,y\n").unwrap();
    std::fs::write(dir.path().join("p.csv"), "id,labels\nb,y\na,x\n").unwrap();
    let o = radtag(dir.path(), &["metrics", "--truth", "t.csv", "--pred", "p.csv"]);
    assert_eq!(code(&o), 0);
    let names: Vec<String> = stdout(&o).lines().map(|l| l.split('\t').next().unwrap().to_string()).collect();
    assert_eq!(names, ["accuracy", "macro_p", "macro_r", "macro_f1", "micro_p", "micro_r", "micro_f1", "weighted_f1"]);
    assert!(stdout(&o).contains("accuracy\t0.500000"));
    assert!(stdout(&o).contains("micro_p\t1.000000"));
}

#[test]
fn taxonomy_check_reports_mismatches() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ok.txt"), "root [counts:1, 4]\n\tleaf [counts:3, 3]\n").unwrap();
    std::fs::write(dir.path().join("bad.txt"), "root [counts:1, 5]\n\tleaf [counts:3, 3]\n").unwrap();
    assert_eq!(code(&radtag(dir.path(), &["taxonomy", "check", "ok.txt"])), 0);
    let o = radtag(dir.path(), &["taxonomy", "check", "bad.txt"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("1 count mismatches"));
    let o = radtag(dir.path(), &["taxonomy", "ancestors", "granuloma"]);
    assert_eq!(stdout(&o).trim(), "radiological finding > granuloma");
}

#[test]
fn preprocess_then_locextract() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("r.csv"),
        "report_id,patient_id,study_date,text\n1,p,2015-09-14,\"Hallazgos: Pinzamiento del seno costofrénico derecho. Sin otros hallazgos.\"\n",
    )
    .unwrap();
    let o = radtag(dir.path(), &["preprocess", "--input", "r.csv", "--output", "s.csv", "--stats"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sentences\t2"));
    let o = radtag(dir.path(), &["locextract", "--sentences", "s.csv"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("report_id,index,locations"));
    assert_eq!(lines.next(), Some("1,0,right costophrenic angle"));
}

#[test]
fn annotate_with_gold_labels_and_resolve_timelines() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("r.csv"),
        "ReportID,PatientID,StudyID,Report\n\
         1,p,\"20150101, a\",Cardiomegalia. Cifosis.\n\
         2,p,\"20160101, b\",Sin cambios.\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("g.csv"),
        "ReportID,Sentence,Labels\n1,0,\"['cardiomegaly']\"\n1,1,\"['kyphosis']\"\n2,0,\"['unchanged']\"\n",
    )
    .unwrap();
    let o = radtag(dir.path(), &["annotate", "--reports", "r.csv", "--gold", "g.csv", "--output", "d.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = radtag(dir.path(), &["timeline", "--dataset", "d.csv", "--output", "t.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let second = text.lines().find(|l| l.contains("20160101")).unwrap();
    assert!(second.contains("cardiomegaly") && second.contains("kyphosis"), "{second}");
    assert!(!second.contains("'unchanged'"), "{second}");
}

#[test]
fn synth_differs_across_seeds() {
    let dir = tempfile::tempdir().unwrap();
    for s in ["1", "2"] {
        let o = radtag(dir.path(), &["--seed", s, "synth", "--output", &format!("{s}.csv"), "--sentences", "50", "--labels", "5"]);
        assert_eq!(code(&o), 0);
    }
    assert_ne!(std::fs::read(dir.path().join("1.csv")).unwrap(), std::fs::read(dir.path().join("2.csv")).unwrap());
}

#[test]
fn gradcheck_passes_on_every_topology() {
    let dir = tempfile::tempdir().unwrap();
    for t in ["cnn", "rnn", "cnn-att", "rnn-att"] {
        let o = radtag(dir.path(), &["gradcheck", "--topology", t]);
        assert_eq!(code(&o), 0, "{t}: {}", stdout(&o));
    }
    let o = radtag(dir.path(), &["gradcheck", "--topology", "rnn", "--tolerance", "0"]);
    assert_eq!(code(&o), 1);
}
