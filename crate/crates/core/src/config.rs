//! Flat `key = value` experiment configuration.
//!
//! Every key has a default, so a config file only lists what it changes. Unknown keys are
//! rejected. [`Config::canonical_text`] lists every key in sorted order and is what run
//! manifests hash.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{parse_language_list, LanguageCode};
use crate::model::ModelConfig;
use crate::synth::SynthConfig;
use crate::training::{OptimizerSettings, Scheme, TrainPlan, UnfreezeMode, UnfreezeSchedule};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: {message}")]
    BadValue { key: String, message: String },
}

pub type Result<T> = std::result::Result<T, ConfigError>;

const DEFAULTS: &[(&str, &str)] = &[
    ("eval.k", "3,5"),
    ("eval.threshold", "0.5"),
    ("lmft.batch_size", "16"),
    ("lmft.clip_norm", "1.0"),
    ("lmft.cycles", "0"),
    ("lmft.languages", "en,fr,de"),
    ("lmft.learning_rate", "5e-4"),
    ("lmft.warmup_fraction", "0.1"),
    ("lmft.weight_decay", "0.01"),
    ("model.ff_dim", "64"),
    ("model.heads", "2"),
    ("model.hidden", "32"),
    ("model.layers", "6"),
    ("model.max_seq_len", "48"),
    ("pretrain.batch_size", "16"),
    ("pretrain.clip_norm", "1.0"),
    ("pretrain.epochs", "10"),
    ("pretrain.learning_rate", "1e-3"),
    ("pretrain.warmup_fraction", "0.1"),
    ("pretrain.weight_decay", "0.01"),
    ("seed", "1"),
    ("synth.background_concepts", "60"),
    ("synth.cognate_share", "0.3"),
    ("synth.concepts_per_label", "4"),
    ("synth.content_rate", "0.55"),
    ("synth.general_docs", "600"),
    ("synth.identical_share", "0.3"),
    ("synth.labeled_docs", "500"),
    ("synth.labels", "20"),
    ("synth.languages", "en,fr,de"),
    ("synth.max_labels_per_doc", "3"),
    ("synth.seed", "0"),
    ("synth.topic_rate", "0.8"),
    ("synth.unlabeled_docs", "100"),
    ("synth.words_per_doc", "24"),
    ("train.batch_size", "16"),
    ("train.clip_norm", "1.0"),
    ("train.epochs", "20"),
    ("train.learning_rate", "5e-3"),
    ("train.scheme", "zsl"),
    ("train.source", "en"),
    ("train.target", "fr,de"),
    ("train.warmup_fraction", "0.1"),
    ("train.weight_decay", "0.01"),
    ("unfreeze.epochs_per_stage", "1"),
    ("unfreeze.layers", "6"),
    ("unfreeze.mode", "gradual"),
    ("vocab.size", "800"),
];

/// Which encoder groups the classifier may unfreeze: the top `layers` layers, and the
/// embeddings when `with_emb`. Written `4` or `6+emb`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnfrozenSpec {
    pub layers: usize,
    pub with_emb: bool,
}

impl FromStr for UnfrozenSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let lower = s.trim().to_ascii_lowercase();
        let (n, with_emb) = match lower.strip_suffix("+emb") {
            Some(n) => (n, true),
            None => (lower.as_str(), false),
        };
        let layers = n
            .parse()
            .map_err(|_| format!("`{s}` is not a layer count such as 4 or 6+emb"))?;
        Ok(UnfrozenSpec { layers, with_emb })
    }
}

impl std::fmt::Display for UnfrozenSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", self.layers, if self.with_emb { "+emb" } else { "" })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            values: DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Config::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.to_string();
                Ok(())
            }
            None => Err(ConfigError::UnknownKey(key.to_string())),
        }
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).expect("known key")
    }

    fn typed<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key).parse().map_err(|e: T::Err| ConfigError::BadValue {
            key: key.to_string(),
            message: e.to_string(),
        })
    }

    fn languages(&self, key: &str) -> Result<BTreeSet<LanguageCode>> {
        parse_language_list(self.get(key)).map_err(|e| ConfigError::BadValue {
            key: key.to_string(),
            message: e.to_string(),
        })
    }

    /// Every key, sorted, one `key = value` per line.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    pub fn seed(&self) -> Result<u64> {
        self.typed("seed")
    }

    pub fn vocab_size(&self) -> Result<usize> {
        self.typed("vocab.size")
    }

    pub fn general_docs(&self) -> Result<usize> {
        self.typed("synth.general_docs")
    }

    pub fn ks(&self) -> Result<Vec<usize>> {
        self.get("eval.k")
            .split(',')
            .map(|k| {
                k.trim().parse().map_err(|_| ConfigError::BadValue {
                    key: "eval.k".into(),
                    message: format!("`{k}` is not an integer"),
                })
            })
            .collect()
    }

    pub fn model_config(&self, vocab_size: usize, label_count: usize) -> Result<ModelConfig> {
        let cfg = ModelConfig {
            layers: self.typed("model.layers")?,
            hidden: self.typed("model.hidden")?,
            heads: self.typed("model.heads")?,
            ff_dim: self.typed("model.ff_dim")?,
            vocab_size,
            max_seq_len: self.typed("model.max_seq_len")?,
            label_count,
        };
        cfg.validate().map_err(|e| ConfigError::BadValue {
            key: "model".into(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn optimizer(&self, prefix: &str) -> Result<OptimizerSettings> {
        let epochs = match prefix {
            "train" => self.typed("train.epochs")?,
            "pretrain" => self.typed("pretrain.epochs")?,
            _ => self.typed("lmft.cycles")?,
        };
        Ok(OptimizerSettings {
            learning_rate: self.typed(&format!("{prefix}.learning_rate"))?,
            warmup_fraction: self.typed(&format!("{prefix}.warmup_fraction"))?,
            batch_size: self.typed(&format!("{prefix}.batch_size"))?,
            epochs,
            weight_decay: self.typed(&format!("{prefix}.weight_decay"))?,
            clip_norm: self.typed(&format!("{prefix}.clip_norm"))?,
        })
    }

    pub fn unfrozen(&self) -> Result<UnfrozenSpec> {
        self.typed("unfreeze.layers")
    }

    pub fn train_plan(&self) -> Result<TrainPlan> {
        let layers: usize = self.typed("model.layers")?;
        let spec = self.unfrozen()?;
        let mode = match self.get("unfreeze.mode") {
            "gradual" | "on" => UnfreezeMode::Gradual,
            "none" | "off" => UnfreezeMode::None,
            other => {
                return Err(ConfigError::BadValue {
                    key: "unfreeze.mode".into(),
                    message: format!("`{other}` is neither gradual nor none"),
                })
            }
        };
        if spec.layers == 0 || spec.layers > layers {
            return Err(ConfigError::BadValue {
                key: "unfreeze.layers".into(),
                message: format!("must lie in 1..={layers}"),
            });
        }
        let mut unfreeze = UnfreezeSchedule::top_layers(layers, spec.layers, spec.with_emb, mode);
        unfreeze.epochs_per_stage = self.typed("unfreeze.epochs_per_stage")?;
        let plan = TrainPlan {
            scheme: self.typed::<Scheme>("train.scheme")?,
            source_languages: self.languages("train.source")?,
            target_languages: self.languages("train.target")?,
            lmft_cycles: self.typed("lmft.cycles")?,
            lmft_languages: self.languages("lmft.languages")?,
            lmft_optimizer: self.optimizer("lmft")?,
            unfreeze,
            optimizer: self.optimizer("train")?,
            ks: self.ks()?,
            threshold: self.typed("eval.threshold")?,
            seed: self.seed()?,
        };
        plan.validate().map_err(|e| ConfigError::BadValue {
            key: "train".into(),
            message: e.to_string(),
        })?;
        Ok(plan)
    }

    pub fn synth_config(&self) -> Result<SynthConfig> {
        Ok(SynthConfig {
            languages: self.languages("synth.languages")?.into_iter().collect(),
            labeled_docs: self.typed("synth.labeled_docs")?,
            unlabeled_docs: self.typed("synth.unlabeled_docs")?,
            labels: self.typed("synth.labels")?,
            concepts_per_label: self.typed("synth.concepts_per_label")?,
            background_concepts: self.typed("synth.background_concepts")?,
            words_per_doc: self.typed("synth.words_per_doc")?,
            max_labels_per_doc: self.typed("synth.max_labels_per_doc")?,
            identical_share: self.typed("synth.identical_share")?,
            cognate_share: self.typed("synth.cognate_share")?,
            content_rate: self.typed("synth.content_rate")?,
            topic_rate: self.typed("synth.topic_rate")?,
            seed: self.typed("synth.seed")?,
            ..SynthConfig::default()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_build_a_valid_plan() {
        let c = Config::default();
        let p = c.train_plan().unwrap();
        assert_eq!(p.scheme, Scheme::Zsl);
        assert_eq!(p.unfreeze.target_groups.len(), 6);
        assert_eq!(p.ks, vec![3, 5]);
        c.model_config(800, 20).unwrap();
        c.synth_config().unwrap();
    }

    #[test]
    fn parse_overrides_and_rejects_unknown_keys() {
        let c = Config::parse("# comment\nmodel.layers = 12  # deeper\nunfreeze.layers=6+emb\n").unwrap();
        assert_eq!(c.get("model.layers"), "12");
        let p = c.train_plan().unwrap();
        assert_eq!(p.unfreeze.target_groups.len(), 7);
        assert!(matches!(Config::parse("model.depth = 3"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(Config::parse("model.layers"), Err(ConfigError::Syntax { line: 1, .. })));
    }

    #[test]
    fn invalid_scheme_languages_are_reported() {
        let c = Config::parse("train.source = en,fr\ntrain.target = fr").unwrap();
        assert!(matches!(c.train_plan(), Err(ConfigError::BadValue { .. })));
    }

    #[test]
    fn hash_tracks_content() {
        let a = Config::default();
        let mut b = Config::default();
        assert_eq!(a.hash(), b.hash());
        b.set("seed", "2").unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(Config::parse(&b.canonical_text()).unwrap(), b);
    }

    #[test]
    fn unfrozen_spec_syntax() {
        assert_eq!("6+EMB".parse::<UnfrozenSpec>().unwrap(), UnfrozenSpec { layers: 6, with_emb: true });
        assert_eq!("3".parse::<UnfrozenSpec>().unwrap().to_string(), "3");
        assert!("x".parse::<UnfrozenSpec>().is_err());
    }
}
