use std::io::Write;
use std::path::Path;

use log::{info, warn};

use radtag_core::config::{ConfigError, KeyValues};
use radtag_core::embeddings::{
    export_vec, kmeans_cluster, load_subword, save_doc_vectors, save_subword, topic_summary, train_doc_vectors,
    train_subword_embeddings, DocVecConfig, EmbeddingError, EmbeddingTrainConfig,
};
use radtag_core::locextract::{bundled_rules, extract_locations, load_rules, LocationRule};
use radtag_core::metrics::{align_by_id, evaluate, read_label_csv, METRIC_NAMES};
use radtag_core::neuralnet::{
    cross_validate, evaluate_model, grad_check, load_checkpoint, save_checkpoint, toy_config, toy_model, toy_sample,
    train, LabeledSet, ModelConfig, NnError, SequenceClassifier, Topology, TrainerConfig, TrainingMeta,
};
use radtag_core::pipeline::{
    corpus_label_space, curve_csv, generate_synthetic_corpus, labeled_set, read_corpus, read_dataset, read_reports,
    resolve_dataset_timelines, run_experiment, write_corpus, write_dataset, Annotator, CorpusSource, ExperimentConfig,
    GoldLabeler, NeuralLabeler, SentenceLabeler, SentenceRecord, Split, SyntheticSpec,
};
use radtag_core::preprocess::{corpus_stats, preprocess_report, PreprocessConfig, PreprocessError};
use radtag_core::taxonomy::{LabelSet, Taxonomy, TaxonomyTree, TreeKind};
use radtag_core::{Error, Metrics, Result, SubwordEmbeddings, Topics};

use crate::io::{read_raw_reports, read_sentences, read_token_docs, write_sentences, writer};
use crate::{
    AnnotateArgs, Cli, Command, CvArgs, EmbedCmd, EvalArgs, ExperimentArgs, GradcheckArgs, LocextractArgs, MetricsArgs,
    PreprocessArgs, SynthArgs, TaxonomyCmd, TimelineArgs, TopicsCmd, TrainArgs,
};

/// Run one command; `Ok` carries the exit code (1 for a failed check).
pub fn run(cli: Cli) -> Result<u8> {
    let seed = cli.seed;
    match cli.command {
        Command::Preprocess(a) => preprocess(a),
        Command::Taxonomy(c) => taxonomy(c),
        Command::Locextract(a) => locextract(a),
        Command::Embed(c) => embed(c, seed.unwrap_or(0)),
        Command::Topics(c) => topics(c, seed.unwrap_or(0)),
        Command::Train(a) => train_cmd(a, seed),
        Command::Eval(a) => eval(a),
        Command::Gradcheck(a) => gradcheck(a, seed.unwrap_or(0)),
        Command::Cv(a) => cv(a, seed),
        Command::Metrics(a) => metrics(a),
        Command::Annotate(a) => annotate(a),
        Command::Timeline(a) => timeline(a),
        Command::Experiment(a) => experiment(a, seed),
        Command::Synth(a) => synth(a, seed.unwrap_or(0)),
    }
}

fn preprocess_config(path: Option<&Path>) -> Result<PreprocessConfig> {
    Ok(match path {
        Some(p) => PreprocessConfig::load(p)?,
        None => PreprocessConfig::default(),
    })
}

fn rules(path: Option<&Path>, taxonomy: &Taxonomy) -> Result<Vec<LocationRule>> {
    Ok(match path {
        Some(p) => load_rules(p, &taxonomy.locations)?,
        None => bundled_rules(&taxonomy.locations),
    })
}

fn key_values(path: Option<&Path>) -> Result<KeyValues> {
    Ok(match path {
        Some(p) => KeyValues::load(p)?,
        None => KeyValues::parse("", "<empty>")?,
    })
}

fn preprocess(a: PreprocessArgs) -> Result<u8> {
    let cfg = preprocess_config(a.config.as_deref())?;
    let mut sentences = Vec::new();
    let mut skipped = 0;
    for r in read_raw_reports(&a.input)? {
        match preprocess_report(&r, &cfg) {
            Ok(s) => sentences.extend(s),
            Err(PreprocessError::SectionNotFound(id)) => {
                warn!("report {id}: no radiography section, skipped");
                skipped += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
    write_sentences(&sentences, writer(a.output.as_deref())?)?;
    if a.stats {
        let s = corpus_stats(&sentences)?;
        eprintln!("reports\t{}", s.reports);
        eprintln!("skipped\t{skipped}");
        eprintln!("sentences\t{}", s.sentences);
        eprintln!("unique sentences\t{}", s.unique_sentences());
        eprintln!("words\t{}", s.words);
        eprintln!("vocabulary (raw / stemmed)\t{} / {}", s.vocab_raw, s.vocab_stemmed);
        eprintln!("tokens per sentence (mean / median / min / max)\t{:.2} / {} / {} / {}", s.mean_tokens, s.median_tokens, s.min_tokens, s.max_tokens);
    }
    Ok(0)
}

fn tree_kind(s: &str) -> Result<TreeKind> {
    match s {
        "findings" => Ok(TreeKind::Findings),
        "diagnoses" => Ok(TreeKind::Diagnoses),
        "locations" => Ok(TreeKind::Locations),
        other => Err(ConfigError::InvalidValue { key: "kind".into(), value: other.into() }.into()),
    }
}

fn taxonomy(c: TaxonomyCmd) -> Result<u8> {
    match c {
        TaxonomyCmd::Check { file, kind } => {
            let tree = TaxonomyTree::load(&file, tree_kind(&kind)?)?;
            for m in &tree.count_mismatches {
                println!("line {}: {} states {} but own + children = {}", m.line, m.label, m.stated, m.computed);
            }
            println!("{} nodes, {} count mismatches", tree.nodes.len(), tree.count_mismatches.len());
            Ok(if tree.count_mismatches.is_empty() { 0 } else { 1 })
        }
        TaxonomyCmd::Ancestors { label } => {
            let tax = Taxonomy::bundled();
            let tree = tax.tree_of(&label).ok_or_else(|| radtag_core::taxonomy::TaxonomyError::UnknownLabel(label.clone()))?;
            for path in tree.ancestors_of(&label)? {
                println!("{}", path.join(" > "));
            }
            Ok(0)
        }
        TaxonomyCmd::Cui { labels } => {
            let tax = Taxonomy::bundled();
            for l in &labels {
                println!("{l}\t{}", tax.cui_of(l)?.unwrap_or("-"));
            }
            Ok(0)
        }
    }
}

fn locextract(a: LocextractArgs) -> Result<u8> {
    let tax = Taxonomy::bundled();
    let rules = rules(a.rules.as_deref(), &tax)?;
    let mut w = csv::Writer::from_writer(writer(a.output.as_deref())?);
    let csv_err = |e: csv::Error| Error::from(radtag_core::pipeline::PipelineError::from(e));
    w.write_record(["report_id", "index", "locations"]).map_err(csv_err)?;
    for (id, index, tokens) in read_sentences(&a.sentences)? {
        let locs = extract_locations(&tokens, &rules).join(";");
        w.write_record([id, index.to_string(), locs]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(0)
}

fn embed(c: EmbedCmd, seed: u64) -> Result<u8> {
    match c {
        EmbedCmd::Train { corpus, output, config, vec } => {
            let kv = key_values(config.as_deref())?;
            kv.reject_unknown(&EmbeddingTrainConfig::KEYS)?;
            let mut cfg = EmbeddingTrainConfig::default();
            cfg.apply(&kv)?;
            let docs = read_token_docs(&corpus)?;
            let model: SubwordEmbeddings = train_subword_embeddings(&docs, &cfg, seed)?;
            info!("{} tokens in vocabulary, final loss {:.4}", model.vocab.len(), model.loss_history.last().unwrap_or(&0.0));
            save_subword(&output, &model)?;
            if let Some(p) = vec {
                let mut w = writer(Some(&p))?;
                export_vec(&model, &mut w)?;
                w.flush()?;
            }
            Ok(0)
        }
        EmbedCmd::Query { model, token, n } => {
            let m: SubwordEmbeddings = load_subword(&model)?;
            for (w, s) in m.most_similar(&token, n) {
                println!("{w}\t{s:.4}");
            }
            Ok(0)
        }
    }
}

fn topics(c: TopicsCmd, seed: u64) -> Result<u8> {
    match c {
        TopicsCmd::Fit { corpus, k, output, config, vectors } => {
            let kv = key_values(config.as_deref())?;
            kv.reject_unknown(&DocVecConfig::KEYS)?;
            let mut cfg = DocVecConfig::default();
            cfg.apply(&kv)?;
            let docs = read_token_docs(&corpus)?;
            let dv = train_doc_vectors::<f32>(&docs, &cfg, seed)?;
            let model: Topics = kmeans_cluster(&dv.doc_vectors, k, seed)?;
            if let Some(p) = vectors {
                save_doc_vectors(p, &dv)?;
            }
            let json = serde_json::to_string(&model).map_err(|e| EmbeddingError::Format(e.to_string()))?;
            std::fs::write(&output, json)?;
            println!("{k} topics, sizes {:?}, inertia {:.4}, {} iterations", model.topic_sizes(), model.inertia(), model.iterations);
            Ok(0)
        }
        TopicsCmd::Show { model, corpus, top } => {
            let text = std::fs::read_to_string(&model)?;
            let m: Topics = serde_json::from_str(&text).map_err(|e| EmbeddingError::Format(e.to_string()))?;
            let docs = read_token_docs(&corpus)?;
            let sizes = m.topic_sizes();
            for (t, terms) in topic_summary(&m, &docs, top)?.iter().enumerate() {
                let terms: Vec<String> = terms.iter().map(|(w, s)| format!("{w} ({s:.2})")).collect();
                println!("topic {t} [{} docs]: {}", sizes[t], terms.join(", "));
            }
            Ok(0)
        }
    }
}

/// Model and trainer configuration from one flat key=value file.
fn model_and_trainer(
    topology: Topology,
    config: Option<&Path>,
    labels: usize,
    embed_dim: usize,
    seed: Option<u64>,
) -> Result<(ModelConfig, TrainerConfig)> {
    let kv = key_values(config)?;
    let known: Vec<&str> = ModelConfig::KEYS.iter().chain(&TrainerConfig::KEYS).copied().collect();
    kv.reject_unknown(&known)?;
    let mut m = ModelConfig::new(topology, labels);
    m.apply(&kv)?;
    if m.topology != topology {
        return Err(NnError::InvalidConfig(format!("config says topology {}, command says {topology}", m.topology)).into());
    }
    if kv.get("embed_dim").is_some() && m.embed_dim != embed_dim {
        return Err(NnError::InvalidConfig(format!("embed_dim {} but the embeddings have {embed_dim}", m.embed_dim)).into());
    }
    m.embed_dim = embed_dim;
    m.label_count = labels;
    m.validate()?;
    let mut t = TrainerConfig::for_topology(topology);
    t.apply(&kv)?;
    if let Some(s) = seed {
        t.seed = s;
    }
    t.validate()?;
    Ok((m, t))
}

fn sets(
    records: &[SentenceRecord],
    splits: &[Split],
    labels: &[String],
    emb: &SubwordEmbeddings,
    max_len: usize,
) -> Result<LabeledSet<f64>> {
    let mut out = LabeledSet { labels: labels.to_vec(), samples: Vec::new() };
    for &s in splits {
        out.samples.extend(labeled_set::<f64, f32>(records, s, labels, emb, max_len)?.samples);
    }
    Ok(out)
}

fn train_cmd(a: TrainArgs, seed: Option<u64>) -> Result<u8> {
    let records = read_corpus(&a.data.corpus)?;
    let emb: SubwordEmbeddings = load_subword(&a.data.embeddings)?;
    let labels = corpus_label_space(&records);
    let (mc, tc) = model_and_trainer(a.topology, a.config.as_deref(), labels.len(), emb.dim(), seed)?;
    let train_set = sets(&records, &[Split::Train], &labels, &emb, mc.max_len)?;
    let val_set = sets(&records, &[Split::Validation], &labels, &emb, mc.max_len)?;
    info!("training {} on {} sentences, validating on {}", a.topology, train_set.len(), val_set.len());
    let model = SequenceClassifier::build(mc, labels, tc.seed)?;
    let out = train(model, &train_set, &val_set, &tc)?;
    let meta = TrainingMeta { epoch: out.best_epoch, best_val_micro_f1: out.best_val_micro_f1, seed: tc.seed };
    save_checkpoint(&a.output, &out.model, &meta)?;
    if let Some(p) = a.curve {
        std::fs::write(p, curve_csv(&out.curves))?;
    }
    println!("best epoch {} of {}, validation MicroF1 {:.4}", out.best_epoch, out.curves.len(), out.best_val_micro_f1);
    Ok(0)
}

fn print_metrics(m: &Metrics) {
    for (name, v) in METRIC_NAMES.iter().zip(m.values()) {
        println!("{name}\t{v:.6}");
    }
}

fn eval(a: EvalArgs) -> Result<u8> {
    let ck = load_checkpoint::<f64>(&a.checkpoint)?;
    let emb: SubwordEmbeddings = load_subword(&a.embeddings)?;
    if emb.dim() != ck.model.config.embed_dim {
        return Err(NnError::DimensionMismatch(format!(
            "embeddings have {} dimensions, model expects {}",
            emb.dim(),
            ck.model.config.embed_dim
        ))
        .into());
    }
    let splits = match a.split.as_str() {
        "all" => vec![Split::Train, Split::Validation, Split::Test],
        s => vec![s.parse().map_err(|_| ConfigError::InvalidValue { key: "split".into(), value: s.into() })?],
    };
    let records = read_corpus(&a.data)?;
    let set = sets(&records, &splits, &ck.model.labels, &emb, ck.model.config.max_len)?;
    print_metrics(&evaluate_model(&ck.model, &set, a.threshold)?);
    Ok(0)
}

fn gradcheck(a: GradcheckArgs, seed: u64) -> Result<u8> {
    let cfg = toy_config(a.topology);
    if a.len == 0 || a.len > cfg.max_len {
        return Err(NnError::InvalidConfig(format!("len must lie in 1..={}", cfg.max_len)).into());
    }
    let model = toy_model(a.topology, seed)?;
    let sample = toy_sample(&cfg, a.len, seed.wrapping_add(1));
    let r = grad_check(&model, &sample, a.eps, None)?;
    println!("topology\t{}", a.topology);
    println!("parameters\t{}", r.checked);
    println!("max_rel_error\t{:.3e}", r.max_rel_error);
    println!("max_abs_error\t{:.3e}", r.max_abs_error);
    println!("worst\t{}", r.worst);
    Ok(if r.max_rel_error < a.tolerance { 0 } else { 1 })
}

fn cv(a: CvArgs, seed: Option<u64>) -> Result<u8> {
    let records = read_corpus(&a.data.corpus)?;
    let emb: SubwordEmbeddings = load_subword(&a.data.embeddings)?;
    let labels = corpus_label_space(&records);
    let (mc, tc) = model_and_trainer(a.topology, a.config.as_deref(), labels.len(), emb.dim(), seed)?;
    let set = sets(&records, &[Split::Train, Split::Validation], &labels, &emb, mc.max_len)?;
    let r = cross_validate(&set, &mc, &tc, a.k)?;
    println!("epoch,mean_micro_f1,std_micro_f1");
    for (e, (m, s)) in r.mean.iter().zip(&r.std).enumerate() {
        println!("{},{m:.6},{s:.6}", e + 1);
    }
    Ok(0)
}

fn metrics(a: MetricsArgs) -> Result<u8> {
    let (truth, pred) = align_by_id(read_label_csv(&a.truth)?, read_label_csv(&a.pred)?)?;
    let labels: Vec<String> = match a.labels {
        Some(l) => l.split(';').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect(),
        None => truth.iter().chain(&pred).flatten().cloned().collect::<LabelSet>().into_iter().collect(),
    };
    print_metrics(&evaluate(&truth, &pred, &labels)?);
    Ok(0)
}

fn annotate(a: AnnotateArgs) -> Result<u8> {
    let pre = preprocess_config(a.config.as_deref())?;
    let tax = Taxonomy::bundled();
    let rules = rules(a.rules.as_deref(), &tax)?;
    let ann = Annotator { preprocess: &pre, taxonomy: &tax, rules: &rules };
    let reports = read_reports(&a.reports)?;
    let rows = match (&a.gold, &a.checkpoint, &a.embeddings) {
        (Some(g), _, _) => ann.annotate_dataset(&reports, &GoldLabeler::read(g)?)?,
        (None, Some(c), Some(e)) => {
            let ck = load_checkpoint::<f64>(c)?;
            let emb: SubwordEmbeddings = load_subword(e)?;
            let labeler: Box<dyn SentenceLabeler> = Box::new(NeuralLabeler::new(&ck.model, &emb, a.threshold, &tax)?);
            ann.annotate_dataset(&reports, labeler.as_ref())?
        }
        _ => return Err(ConfigError::InvalidValue { key: "labeler".into(), value: "give --gold or --checkpoint with --embeddings".into() }.into()),
    };
    write_dataset(&rows, &a.output)?;
    info!("{} rows written", rows.len());
    Ok(0)
}

fn timeline(a: TimelineArgs) -> Result<u8> {
    let mut rows = read_dataset(&a.dataset)?;
    let pre = PreprocessConfig::default();
    let tax = Taxonomy::bundled();
    let rules = bundled_rules(&tax.locations);
    let ann = Annotator { preprocess: &pre, taxonomy: &tax, rules: &rules };
    let n = resolve_dataset_timelines(&mut rows, &ann)?;
    write_dataset(&rows, &a.output)?;
    info!("{n} rows had `unchanged` resolved");
    Ok(0)
}

fn experiment(a: ExperimentArgs, seed: Option<u64>) -> Result<u8> {
    let kv = key_values(a.config.as_deref())?;
    let mut cfg = ExperimentConfig::from_kv(&kv)?;
    if let Some(s) = seed {
        cfg.seed = s;
        if let CorpusSource::Synthetic(spec) = &mut cfg.corpus {
            if kv.get("synth.seed").is_none() {
                spec.seed = s;
            }
        }
    }
    if let Some(o) = a.output {
        cfg.output = o;
    }
    let report = run_experiment(&cfg, &Taxonomy::bundled())?;
    print!("{}", report.results_markdown());
    println!("best topology: {}", report.best);
    Ok(0)
}

fn synth(a: SynthArgs, seed: u64) -> Result<u8> {
    let spec = SyntheticSpec { seed, label_count: a.labels, sentence_count: a.sentences, noise_rate: a.noise };
    let corpus = generate_synthetic_corpus(&spec, &Taxonomy::bundled())?;
    write_corpus(&corpus.records, &a.output)?;
    info!("{} sentences over {} labels", corpus.records.len(), corpus.grammar.labels.len());
    Ok(0)
}
