//! Small synthetic setups shared by the training, CLI and acceptance tests.

use std::collections::BTreeSet;

use lmtc::config::Config;
use lmtc::corpus::{Corpus, LanguageCode};
use lmtc::eurovoc::LabelIndex;
use lmtc::model::{EncoderModel, ModelConfig};
use lmtc::pipeline::Resources;
use lmtc::synth::{generate_parallel, SynthConfig, SynthCorpus};
use lmtc::tokenizer::{train_vocab, Vocab};
use lmtc::training::{OptimizerSettings, TrainPlan, UnfreezeMode, UnfreezeSchedule};

pub struct Desk {
    pub synth: SynthCorpus,
    pub vocab: Vocab,
    pub labels: LabelIndex,
}

impl Desk {
    pub fn new(cfg: &SynthConfig, vocab_size: usize) -> Desk {
        let synth = generate_parallel(cfg).unwrap();
        let langs: BTreeSet<LanguageCode> = cfg.languages.iter().copied().collect();
        let texts: Vec<String> = cfg
            .languages
            .iter()
            .flat_map(|&l| synth.general_text(l, 100, cfg.seed))
            .collect();
        let vocab = train_vocab(&texts, vocab_size, &langs).unwrap();
        let labels = LabelIndex::from_ids(synth.label_ids.clone());
        Desk { synth, vocab, labels }
    }

    /// 120 parallel documents in en/fr/de, 8 labels.
    pub fn small() -> Desk {
        Desk::new(
            &SynthConfig {
                labeled_docs: 120,
                unlabeled_docs: 20,
                labels: 8,
                ..SynthConfig::default()
            },
            400,
        )
    }

    pub fn corpora(&self) -> &[Corpus] {
        &self.synth.corpora
    }

    pub fn res(&self) -> Resources<'_> {
        Resources {
            corpora: &self.synth.corpora,
            vocab: &self.vocab,
            labels: &self.labels,
        }
    }

    pub fn model_config(&self, layers: usize) -> ModelConfig {
        ModelConfig {
            layers,
            hidden: 16,
            heads: 2,
            ff_dim: 32,
            vocab_size: self.vocab.len(),
            max_seq_len: 32,
            label_count: self.labels.len(),
        }
    }

    pub fn base(&self, layers: usize, seed: u64) -> EncoderModel<f32> {
        EncoderModel::init(&self.model_config(layers), seed).unwrap()
    }
}

/// A 3-epoch ZSL plan (en → fr,de) over a 3-layer model with gradual unfreezing.
pub fn small_plan(seed: u64) -> TrainPlan {
    let mut plan = Config::default().train_plan().unwrap();
    plan.unfreeze = UnfreezeSchedule::top_layers(3, 2, false, UnfreezeMode::Gradual);
    plan.optimizer = OptimizerSettings {
        learning_rate: 2e-3,
        epochs: 3,
        ..OptimizerSettings::default()
    };
    plan.lmft_cycles = 0;
    plan.seed = seed;
    plan
}
