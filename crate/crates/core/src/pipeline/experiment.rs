use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::corpus::{corpus_label_space, labeled_set, read_corpus, write_corpus, SentenceRecord, Split};
use super::synth::{generate_synthetic_corpus, SyntheticSpec};
use super::PipelineError;
use crate::config::{ConfigError, KeyValues};
use crate::embeddings::{save_subword, train_subword_embeddings, EmbeddingTrainConfig, SubwordEmbeddingModel};
use crate::neuralnet::{
    evaluate_model, save_checkpoint, train, EpochRecord, ModelConfig, SequenceClassifier, Topology, TrainerConfig,
    TrainingMeta,
};
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, PartialEq)]
pub enum CorpusSource {
    Synthetic(SyntheticSpec),
    File(PathBuf),
}

/// Experiment description. In a `key=value` file the keys are `seed`,
/// `topologies` (comma separated), `output`, `corpus` (a sentence corpus
/// CSV; omit it for a synthetic corpus), and the prefixed groups `synth.*`,
/// `embed.*`, `model.*` and `trainer.*` overriding the respective defaults.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub corpus: CorpusSource,
    pub topologies: Vec<Topology>,
    pub embedding: EmbeddingTrainConfig,
    /// Applied on top of each topology's default model configuration.
    pub model: KeyValues,
    /// Applied on top of each topology's default trainer configuration.
    pub trainer: KeyValues,
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn from_kv(kv: &KeyValues) -> Result<Self, ConfigError> {
        let groups = ["synth.", "embed.", "model.", "trainer."];
        if let Some(k) = kv.keys().find(|k| {
            !["seed", "topologies", "output", "corpus"].contains(k) && !groups.iter().any(|g| k.starts_with(g))
        }) {
            return Err(ConfigError::UnknownKey(k.to_string()));
        }
        let seed = kv.parse_opt("seed")?.unwrap_or(0);
        let synth_kv = kv.section("synth.");
        synth_kv.reject_unknown(&SyntheticSpec::KEYS)?;
        let corpus = match kv.path("corpus") {
            Some(p) => CorpusSource::File(p),
            None => {
                let mut spec = SyntheticSpec { seed, ..Default::default() };
                spec.apply(&synth_kv)?;
                CorpusSource::Synthetic(spec)
            }
        };
        let topologies = match kv.get("topologies") {
            None => Topology::ALL.to_vec(),
            Some(list) => list
                .split(',')
                .map(|t| {
                    t.trim().parse().map_err(|_| ConfigError::InvalidValue { key: "topologies".into(), value: t.into() })
                })
                .collect::<Result<_, _>>()?,
        };
        let embed_kv = kv.section("embed.");
        embed_kv.reject_unknown(&EmbeddingTrainConfig::KEYS)?;
        let mut embedding = EmbeddingTrainConfig::default();
        embedding.apply(&embed_kv)?;
        let model = kv.section("model.");
        model.reject_unknown(&ModelConfig::KEYS)?;
        let trainer = kv.section("trainer.");
        trainer.reject_unknown(&TrainerConfig::KEYS)?;
        let output = kv.path("output").unwrap_or_else(|| PathBuf::from("experiment"));
        Ok(Self { seed, corpus, topologies, embedding, model, trainer, output })
    }

    pub fn model_config(&self, topology: Topology, label_count: usize) -> Result<ModelConfig, ConfigError> {
        let mut m = ModelConfig::new(topology, label_count);
        m.apply(&self.model)?;
        m.topology = topology;
        m.label_count = label_count;
        m.embed_dim = self.embedding.dim;
        Ok(m)
    }

    pub fn trainer_config(&self, topology: Topology) -> Result<TrainerConfig, ConfigError> {
        let mut t = TrainerConfig::for_topology(topology);
        t.apply(&self.trainer)?;
        if self.trainer.get("seed").is_none() {
            t.seed = self.seed;
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub topology: Topology,
    pub best_epoch: usize,
    pub split: Split,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub weighted_f1: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<ResultRow>,
    pub curves: Vec<(Topology, Vec<EpochRecord>)>,
    /// Topology with the highest validation MicroF1 (first listed on ties).
    pub best: Topology,
    pub labels: Vec<String>,
}

impl ExperimentReport {
    pub fn results_csv(&self) -> String {
        let mut s = String::from("Topology,Epoch,Split,Accuracy,MacroF1,MicroF1,WeightedF1\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.6},{:.6},{:.6},{:.6}",
                r.topology, r.best_epoch, r.split, r.accuracy, r.macro_f1, r.micro_f1, r.weighted_f1
            );
        }
        s
    }

    pub fn results_markdown(&self) -> String {
        let mut s = String::from("| Topology | Epoch | Split | Accuracy | MacroF1 | MicroF1 | WeightedF1 |\n");
        s.push_str("|---|---:|---|---:|---:|---:|---:|\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {:.3} | {:.3} | {:.3} | {:.3} |",
                r.topology, r.best_epoch, r.split, r.accuracy, r.macro_f1, r.micro_f1, r.weighted_f1
            );
        }
        s
    }
}

pub fn curve_csv(curve: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,val_accuracy,val_micro_f1,val_macro_f1,val_weighted_f1\n");
    for e in curve {
        let _ = writeln!(
            s,
            "{},{:.8},{:.6},{:.6},{:.6},{:.6}",
            e.epoch, e.train_loss, e.val_accuracy, e.val_micro_f1, e.val_macro_f1, e.val_weighted_f1
        );
    }
    s
}

fn load_records(cfg: &ExperimentConfig, taxonomy: &Taxonomy) -> Result<Vec<SentenceRecord>, PipelineError> {
    let records = match &cfg.corpus {
        CorpusSource::Synthetic(spec) => generate_synthetic_corpus(spec, taxonomy)?.records,
        CorpusSource::File(p) => read_corpus(p)?,
    };
    if let Some(l) = corpus_label_space(&records).into_iter().find(|l| taxonomy.tree_of(l).is_none()) {
        return Err(PipelineError::UnknownLabel(l));
    }
    Ok(records)
}

fn write(path: &Path, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text)?;
    Ok(())
}

/// Train every requested topology on one seeded split and write
/// `results.csv`, `results.md`, `curves/<topology>.csv`,
/// `checkpoints/<topology>.rtck`, `best.rtck`, `embeddings.rtsw` and
/// `corpus.csv` under the output directory.
pub fn run_experiment(cfg: &ExperimentConfig, taxonomy: &Taxonomy) -> Result<ExperimentReport, PipelineError> {
    if cfg.topologies.is_empty() {
        return Err(PipelineError::InvalidSpec("no topologies requested".into()));
    }
    let records = load_records(cfg, taxonomy)?;
    let labels = corpus_label_space(&records);
    let out = &cfg.output;
    std::fs::create_dir_all(out.join("curves"))?;
    std::fs::create_dir_all(out.join("checkpoints"))?;
    write_corpus(&records, out.join("corpus.csv"))?;

    let docs: Vec<Vec<String>> = records.iter().map(|r| r.tokens.clone()).collect();
    log::info!("training subword embeddings on {} sentences", docs.len());
    let emb: SubwordEmbeddingModel<f32> = train_subword_embeddings(&docs, &cfg.embedding, cfg.seed)?;
    save_subword(out.join("embeddings.rtsw"), &emb)?;

    let mut rows = Vec::new();
    let mut curves = Vec::new();
    let mut best: Option<(Topology, f64, SequenceClassifier<f64>, TrainingMeta)> = None;
    for &t in &cfg.topologies {
        let mc = cfg.model_config(t, labels.len())?;
        let tc = cfg.trainer_config(t)?;
        let sets = |s| labeled_set::<f64, f32>(&records, s, &labels, &emb, mc.max_len);
        let (train_set, val_set, test_set) = (sets(Split::Train)?, sets(Split::Validation)?, sets(Split::Test)?);
        log::info!("training {t}: {} train / {} validation sentences", train_set.len(), val_set.len());
        let model = SequenceClassifier::build(mc, labels.clone(), tc.seed)?;
        let outcome = train(model, &train_set, &val_set, &tc)?;
        let meta = TrainingMeta { epoch: outcome.best_epoch, best_val_micro_f1: outcome.best_val_micro_f1, seed: tc.seed };
        save_checkpoint(out.join("checkpoints").join(format!("{t}.rtck")), &outcome.model, &meta)?;
        write(&out.join("curves").join(format!("{t}.csv")), &curve_csv(&outcome.curves))?;
        for (split, set) in [(Split::Validation, &val_set), (Split::Test, &test_set)] {
            if set.is_empty() {
                continue;
            }
            let m = evaluate_model(&outcome.model, set, tc.threshold)?;
            rows.push(ResultRow {
                topology: t,
                best_epoch: outcome.best_epoch,
                split,
                accuracy: m.accuracy,
                macro_f1: m.macro_f1,
                micro_f1: m.micro_f1,
                weighted_f1: m.weighted_f1,
            });
        }
        if best.as_ref().is_none_or(|(_, score, _, _)| outcome.best_val_micro_f1 > *score) {
            best = Some((t, outcome.best_val_micro_f1, outcome.model.clone(), meta));
        }
        curves.push((t, outcome.curves));
    }
    let (best_t, _, best_model, best_meta) = best.expect("at least one topology");
    save_checkpoint(out.join("best.rtck"), &best_model, &best_meta)?;
    let report = ExperimentReport { rows, curves, best: best_t, labels };
    write(&out.join("results.csv"), &report.results_csv())?;
    write(&out.join("results.md"), &report.results_markdown())?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_keys() {
        let kv = KeyValues::parse(
            "seed=3\ntopologies=rnn-att, cnn\nsynth.sentence_count=400\nembed.dim=16\nmodel.lstm_hidden=8\ntrainer.max_epochs=2\n",
            "t",
        )
        .unwrap();
        let c = ExperimentConfig::from_kv(&kv).unwrap();
        assert_eq!(c.topologies, vec![Topology::RnnAtt, Topology::Cnn]);
        assert_eq!(c.corpus, CorpusSource::Synthetic(SyntheticSpec { seed: 3, sentence_count: 400, ..Default::default() }));
        let m = c.model_config(Topology::RnnAtt, 5).unwrap();
        assert_eq!((m.embed_dim, m.lstm_hidden, m.label_count), (16, 8, 5));
        let t = c.trainer_config(Topology::Cnn).unwrap();
        assert_eq!((t.max_epochs, t.seed), (2, 3));
        for bad in ["bogus=1", "model.nope=1", "synth.x=2", "topologies=mlp"] {
            assert!(ExperimentConfig::from_kv(&KeyValues::parse(bad, "t").unwrap()).is_err(), "{bad}");
        }
    }
}
