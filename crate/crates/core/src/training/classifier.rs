//! Classifier training with per-epoch checkpoints and scheme-specific selection.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Corpus, LanguageCode, ReadPurpose, Split};
use crate::eurovoc::LabelIndex;
use crate::metrics::EvalReport;
use crate::model::{EncoderModel, Tape, TrainableSet};
use crate::tokenizer::Vocab;

use super::data::batch_of;
use super::evaluate::{gather, predict_rows};
use super::optim::{clip_grad_norm, AdamW, TriangularSchedule};
use super::{seeded_rng, Result, Scheme, TrainPlan, TrainingError};

const SHUFFLE_STREAM: u64 = 0x4000;

/// What an observer sees around each optimisation step.
pub struct StepContext<'a> {
    pub epoch: usize,
    /// 0-based, counted over the whole run.
    pub step: usize,
    pub trainable: &'a TrainableSet,
}

pub trait TrainingObserver {
    fn before_step(&mut self, _ctx: &StepContext<'_>, _model: &EncoderModel<f32>) {}
    fn after_step(&mut self, _ctx: &StepContext<'_>, _model: &EncoderModel<f32>) {}
}

pub struct NoopObserver;

impl TrainingObserver for NoopObserver {}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointRef {
    pub epoch: usize,
    pub name: String,
    pub sha256: String,
}

/// Where per-epoch checkpoints go: kept in memory, or written as files.
#[derive(Debug)]
pub enum CheckpointStore {
    Memory(BTreeMap<String, Vec<u8>>),
    Directory(PathBuf),
}

impl CheckpointStore {
    pub fn memory() -> Self {
        CheckpointStore::Memory(BTreeMap::new())
    }

    pub fn directory(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        fs::create_dir_all(&path).map_err(|e| TrainingError::Io(format!("{}: {e}", path.display())))?;
        Ok(CheckpointStore::Directory(path))
    }

    pub fn save(&mut self, epoch: usize, model: &EncoderModel<f32>) -> Result<CheckpointRef> {
        let bytes = model.to_checkpoint_bytes();
        let name = format!("epoch_{epoch:03}.ckpt");
        let sha256 = hex::encode(Sha256::digest(&bytes));
        match self {
            CheckpointStore::Memory(map) => {
                map.insert(name.clone(), bytes);
            }
            CheckpointStore::Directory(dir) => {
                crate::model::save_checkpoint(model, &dir.join(&name))?;
            }
        }
        Ok(CheckpointRef { epoch, name, sha256 })
    }

    pub fn bytes(&self, r: &CheckpointRef) -> Result<Vec<u8>> {
        let bytes = match self {
            CheckpointStore::Memory(map) => map
                .get(&r.name)
                .cloned()
                .ok_or_else(|| TrainingError::Io(format!("no checkpoint {}", r.name)))?,
            CheckpointStore::Directory(dir) => {
                let p = dir.join(&r.name);
                fs::read(&p).map_err(|e| TrainingError::Io(format!("{}: {e}", p.display())))?
            }
        };
        if hex::encode(Sha256::digest(&bytes)) != r.sha256 {
            return Err(TrainingError::Io(format!("checkpoint {} does not match its hash", r.name)));
        }
        Ok(bytes)
    }

    pub fn load(&self, r: &CheckpointRef) -> Result<EncoderModel<f32>> {
        Ok(EncoderModel::from_checkpoint_bytes(&self.bytes(r)?, None)?)
    }

    pub fn path_of(&self, r: &CheckpointRef) -> Option<PathBuf> {
        match self {
            CheckpointStore::Memory(_) => None,
            CheckpointStore::Directory(dir) => Some(dir.join(&r.name)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub trainable: Vec<String>,
    pub dev: BTreeMap<LanguageCode, EvalReport>,
    pub checkpoint: CheckpointRef,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectionLog {
    pub records: Vec<EpochRecord>,
}

impl SelectionLog {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("log serialises")
    }
}

/// Trains the classification head (and whatever the unfreeze schedule opens up) on the
/// union of the source-language train splits, evaluating on the scheme's dev languages and
/// checkpointing after every epoch.
pub fn run_classifier_training(
    mut model: EncoderModel<f32>,
    plan: &TrainPlan,
    corpora: &[Corpus],
    vocab: &Vocab,
    labels: &LabelIndex,
    store: &mut CheckpointStore,
    observer: &mut dyn TrainingObserver,
) -> Result<SelectionLog> {
    plan.validate()?;
    plan.unfreeze.validate(model.config.layers)?;
    if model.config.label_count != labels.len() {
        return Err(TrainingError::InvalidPlan(format!(
            "classifier has {} outputs but the label index has {} labels",
            model.config.label_count,
            labels.len()
        )));
    }
    let max_len = model.config.max_seq_len;
    let mut dev = BTreeMap::new();
    for &language in plan.selection_languages() {
        let docs = gather(corpora, language, Split::Dev, ReadPurpose::Supervised, vocab, max_len, labels)?;
        if docs.is_empty() {
            return Err(TrainingError::MissingSplit { language, split: "dev" });
        }
        dev.insert(language, docs);
    }
    let mut train = Vec::new();
    for &language in &plan.source_languages {
        let docs = gather(corpora, language, Split::Train, ReadPurpose::Supervised, vocab, max_len, labels)?;
        if docs.is_empty() {
            return Err(TrainingError::MissingSplit { language, split: "train" });
        }
        train.extend(docs);
    }

    let opt_cfg = &plan.optimizer;
    let steps_per_epoch = train.len().div_ceil(opt_cfg.batch_size);
    let schedule = TriangularSchedule::new(
        opt_cfg.learning_rate,
        steps_per_epoch * opt_cfg.epochs,
        opt_cfg.warmup_fraction,
    );
    let mut opt = AdamW::new(opt_cfg.weight_decay);
    let mut tape = Tape::new();
    let mut log = SelectionLog::default();
    let mut step = 0usize;
    for epoch in 1..=opt_cfg.epochs {
        let trainable = plan.unfreeze.trainable_at(epoch);
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut seeded_rng(plan.seed, SHUFFLE_STREAM + epoch as u64));
        let mut loss_sum = 0.0f64;
        for picks in order.chunks(opt_cfg.batch_size) {
            let ctx = StepContext {
                epoch,
                step,
                trainable: &trainable,
            };
            observer.before_step(&ctx, &model);
            let (batch, gold) = batch_of(&train, picks);
            let out = model.forward_classify(&batch, &gold, Some(&mut tape))?;
            if !out.loss.is_finite() {
                return Err(TrainingError::Diverged { epoch, step });
            }
            loss_sum += f64::from(out.loss) * picks.len() as f64;
            let mut grads = model.backward(&mut tape, &trainable)?;
            clip_grad_norm(&mut grads, opt_cfg.clip_norm);
            opt.step(&mut model, &grads, schedule.lr(step));
            observer.after_step(&ctx, &model);
            step += 1;
        }
        let mut reports = BTreeMap::new();
        for (&language, docs) in &dev {
            let rows = predict_rows(&model, docs)?;
            reports.insert(
                language,
                EvalReport::compute(language.as_str(), &rows, &plan.ks, plan.threshold)?,
            );
        }
        let checkpoint = store.save(epoch, &model)?;
        let train_loss = loss_sum / train.len() as f64;
        log::info!(
            "epoch {epoch}: train loss {train_loss:.4}, dev F1 {}",
            reports
                .iter()
                .map(|(l, r)| format!("{l}={:.4}", r.micro_f1))
                .collect::<Vec<_>>()
                .join(" ")
        );
        log.records.push(EpochRecord {
            epoch,
            train_loss,
            trainable: trainable.iter().map(ToString::to_string).collect(),
            dev: reports,
            checkpoint,
        });
    }
    Ok(log)
}

/// The record with the highest mean dev micro-F1 over the scheme's selection languages;
/// the earlier epoch wins ties.
pub fn select_checkpoint<'a>(log: &'a SelectionLog, plan: &TrainPlan) -> Result<&'a EpochRecord> {
    let languages = match plan.scheme {
        Scheme::Zsl | Scheme::Jt => &plan.source_languages,
        Scheme::Tl => &plan.target_languages,
    };
    let mut best: Option<(&EpochRecord, f64)> = None;
    for rec in &log.records {
        let mut sum = 0.0;
        for &language in languages {
            let r = rec.dev.get(&language).ok_or(TrainingError::MissingMetric {
                epoch: rec.epoch,
                language,
            })?;
            sum += r.micro_f1;
        }
        let mean = sum / languages.len() as f64;
        if best.is_none_or(|(_, b)| mean > b) {
            best = Some((rec, mean));
        }
    }
    best.map(|(r, _)| r).ok_or(TrainingError::EmptyLog)
}
