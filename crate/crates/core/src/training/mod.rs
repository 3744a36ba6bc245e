//! LM finetuning, classifier training with gradual unfreezing, checkpoint selection under
//! the three transfer schemes, and per-language evaluation.
//!
//! - ZSL: train on source languages, select on source dev sets, test on target languages.
//! - TL: train on source languages, select on target dev sets.
//! - JT: train and select on the pooled languages.

mod classifier;
mod data;
mod evaluate;
mod lmft;
mod optim;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::LanguageCode;
use crate::model::{GroupId, ModelError, TrainableSet};

pub use classifier::{
    run_classifier_training, select_checkpoint, CheckpointRef, CheckpointStore, EpochRecord,
    NoopObserver, SelectionLog, StepContext, TrainingObserver,
};
pub use data::{encode_documents, EncodedDoc};
pub use evaluate::{evaluate_transfer, predict_rows};
pub use lmft::{mlm_loss, run_lmft, run_mlm};
pub use optim::{clip_grad_norm, AdamW, TriangularSchedule};

#[derive(Debug, Error)]
pub enum TrainingError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("no {split} documents for language {language}")]
    MissingSplit { language: LanguageCode, split: &'static str },
    #[error("LM finetuning pool is empty")]
    EmptyPool,
    #[error("selection log is empty")]
    EmptyLog,
    #[error("epoch {epoch} has no dev metric for {language}")]
    MissingMetric { epoch: usize, language: LanguageCode },
    #[error("unknown language {0}")]
    UnknownLanguage(LanguageCode),
    #[error("non-finite loss at epoch {epoch}, step {step}")]
    Diverged { epoch: usize, step: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tokenizer(#[from] crate::tokenizer::TokenizerError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, TrainingError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Zsl,
    Tl,
    Jt,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Zsl => "zsl",
            Scheme::Tl => "tl",
            Scheme::Jt => "jt",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "zsl" => Ok(Scheme::Zsl),
            "tl" => Ok(Scheme::Tl),
            "jt" | "jl" => Ok(Scheme::Jt),
            _ => Err(format!("unknown scheme `{s}` (expected zsl, tl or jt)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnfreezeMode {
    /// Every listed group is trainable from the first epoch.
    None,
    /// One more listed group per stage.
    Gradual,
}

/// Which parameter groups the classifier trains at each epoch. `CLS_HEAD` is always
/// trainable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnfreezeSchedule {
    pub mode: UnfreezeMode,
    /// Top-down order: the first entry is unfrozen first.
    pub target_groups: Vec<GroupId>,
    pub epochs_per_stage: usize,
}

impl UnfreezeSchedule {
    /// The top `n` encoder layers of a `layers`-deep model, optionally followed by `EMB`.
    pub fn top_layers(layers: usize, n: usize, with_emb: bool, mode: UnfreezeMode) -> Self {
        let mut target_groups: Vec<GroupId> = (layers.saturating_sub(n) + 1..=layers)
            .rev()
            .map(GroupId::Layer)
            .collect();
        if with_emb {
            target_groups.push(GroupId::Emb);
        }
        UnfreezeSchedule {
            mode,
            target_groups,
            epochs_per_stage: 1,
        }
    }

    /// 1-based stage of `epoch` (also 1-based).
    pub fn stage(&self, epoch: usize) -> usize {
        (epoch.max(1) - 1) / self.epochs_per_stage.max(1) + 1
    }

    pub fn trainable_at(&self, epoch: usize) -> TrainableSet {
        let n = match self.mode {
            UnfreezeMode::None => self.target_groups.len(),
            UnfreezeMode::Gradual => self.stage(epoch).min(self.target_groups.len()),
        };
        let mut set: TrainableSet = self.target_groups[..n].iter().copied().collect();
        set.insert(GroupId::ClsHead);
        set
    }

    pub fn validate(&self, model_layers: usize) -> Result<()> {
        if self.epochs_per_stage == 0 {
            return Err(TrainingError::InvalidPlan("epochs_per_stage must be at least 1".into()));
        }
        let mut seen = BTreeSet::new();
        for &g in &self.target_groups {
            let ok = match g {
                GroupId::Layer(i) => (1..=model_layers).contains(&i),
                GroupId::Emb => true,
                GroupId::MlmHead | GroupId::ClsHead => false,
            };
            if !ok {
                return Err(TrainingError::InvalidPlan(format!(
                    "unfreeze target {g} is not an encoder group of a {model_layers}-layer model"
                )));
            }
            if !seen.insert(g) {
                return Err(TrainingError::InvalidPlan(format!("unfreeze target {g} listed twice")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerSettings {
    pub learning_rate: f64,
    pub warmup_fraction: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub weight_decay: f64,
    pub clip_norm: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            learning_rate: 5e-4,
            warmup_fraction: 0.1,
            batch_size: 16,
            epochs: 10,
            weight_decay: 0.01,
            clip_norm: 1.0,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self, what: &str) -> Result<()> {
        let bad = |m: &str| Err(TrainingError::InvalidPlan(format!("{what}: {m}")));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return bad("warmup_fraction must lie in [0, 1)");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.weight_decay < 0.0 || self.clip_norm <= 0.0 {
            return bad("weight_decay must be non-negative and clip_norm positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainPlan {
    pub scheme: Scheme,
    pub source_languages: BTreeSet<LanguageCode>,
    pub target_languages: BTreeSet<LanguageCode>,
    pub lmft_cycles: usize,
    /// Languages whose train and unsplit text feeds LM finetuning.
    pub lmft_languages: BTreeSet<LanguageCode>,
    pub lmft_optimizer: OptimizerSettings,
    pub unfreeze: UnfreezeSchedule,
    pub optimizer: OptimizerSettings,
    pub ks: Vec<usize>,
    pub threshold: f64,
    pub seed: u64,
}

impl TrainPlan {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(TrainingError::InvalidPlan(m));
        if self.source_languages.is_empty() || self.target_languages.is_empty() {
            return bad("source and target languages must be nonempty".into());
        }
        match self.scheme {
            Scheme::Zsl | Scheme::Tl => {
                let both: Vec<String> = self
                    .source_languages
                    .intersection(&self.target_languages)
                    .map(ToString::to_string)
                    .collect();
                if !both.is_empty() {
                    return bad(format!(
                        "{} requires disjoint source and target languages; both contain {}",
                        self.scheme,
                        both.join(",")
                    ));
                }
            }
            Scheme::Jt => {
                if self.source_languages != self.target_languages {
                    return bad("jt requires identical source and target languages".into());
                }
            }
        }
        self.optimizer.validate("optimizer")?;
        if self.optimizer.epochs == 0 {
            return bad("optimizer: epochs must be at least 1".into());
        }
        if self.lmft_cycles > 0 {
            self.lmft_optimizer.validate("lmft optimizer")?;
        }
        if self.ks.contains(&0) {
            return bad("K values must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad(format!("threshold {} outside [0, 1]", self.threshold));
        }
        Ok(())
    }

    /// Languages whose dev sets drive checkpoint selection.
    pub fn selection_languages(&self) -> &BTreeSet<LanguageCode> {
        match self.scheme {
            Scheme::Zsl | Scheme::Jt => &self.source_languages,
            Scheme::Tl => &self.target_languages,
        }
    }
}

/// A generator for one purpose (`stream`) of a seeded run, independent of the others.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(scheme: Scheme, src: &[LanguageCode], tgt: &[LanguageCode]) -> TrainPlan {
        TrainPlan {
            scheme,
            source_languages: src.iter().copied().collect(),
            target_languages: tgt.iter().copied().collect(),
            lmft_cycles: 0,
            lmft_languages: BTreeSet::new(),
            lmft_optimizer: OptimizerSettings::default(),
            unfreeze: UnfreezeSchedule::top_layers(6, 2, false, UnfreezeMode::Gradual),
            optimizer: OptimizerSettings::default(),
            ks: vec![3, 5],
            threshold: 0.5,
            seed: 0,
        }
    }

    #[test]
    fn scheme_language_rules() {
        use LanguageCode as L;
        plan(Scheme::Zsl, &[L::EN], &[L::FR, L::DE]).validate().unwrap();
        assert!(plan(Scheme::Zsl, &[L::EN, L::FR], &[L::FR]).validate().is_err());
        assert!(plan(Scheme::Tl, &[L::EN], &[L::EN]).validate().is_err());
        plan(Scheme::Jt, &[L::EN, L::FR], &[L::EN, L::FR]).validate().unwrap();
        assert!(plan(Scheme::Jt, &[L::EN], &[L::FR]).validate().is_err());
        let p = plan(Scheme::Tl, &[L::EN], &[L::FR]);
        assert_eq!(p.selection_languages(), &p.target_languages);
    }

    #[test]
    fn gradual_schedule_trace() {
        let s = UnfreezeSchedule::top_layers(6, 5, false, UnfreezeMode::Gradual);
        assert_eq!(
            s.target_groups,
            (2..=6).rev().map(GroupId::Layer).collect::<Vec<_>>()
        );
        let at3: TrainableSet = [GroupId::ClsHead, GroupId::Layer(6), GroupId::Layer(5), GroupId::Layer(4)].into();
        assert_eq!(s.trainable_at(3), at3);
        assert_eq!(s.trainable_at(1), [GroupId::ClsHead, GroupId::Layer(6)].into());
        assert_eq!(s.trainable_at(40).len(), 6);
        for e in 1..5 {
            let a = s.trainable_at(e);
            let b = s.trainable_at(e + 1);
            assert!(a.is_subset(&b) && a.len() < b.len());
        }
    }

    #[test]
    fn stages_span_several_epochs() {
        let mut s = UnfreezeSchedule::top_layers(6, 6, true, UnfreezeMode::Gradual);
        s.epochs_per_stage = 2;
        assert_eq!(s.stage(1), 1);
        assert_eq!(s.stage(2), 1);
        assert_eq!(s.stage(3), 2);
        assert_eq!(s.trainable_at(14).len(), 8);
        assert!(s.trainable_at(14).contains(&GroupId::Emb));
    }

    #[test]
    fn mode_none_unfreezes_everything_listed() {
        let s = UnfreezeSchedule::top_layers(6, 3, false, UnfreezeMode::None);
        assert_eq!(s.trainable_at(1), s.trainable_at(9));
        assert_eq!(s.trainable_at(1).len(), 4);
    }

    #[test]
    fn schedule_validation() {
        let mut s = UnfreezeSchedule::top_layers(6, 2, false, UnfreezeMode::Gradual);
        s.validate(6).unwrap();
        assert!(s.validate(4).is_err());
        s.target_groups.push(GroupId::MlmHead);
        assert!(s.validate(6).is_err());
        s.target_groups.pop();
        s.epochs_per_stage = 0;
        assert!(s.validate(6).is_err());
    }
}
