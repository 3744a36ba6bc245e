//! Cross-lingual large-scale multi-label text classification for legal documents.
//!
//! The crate covers the whole desk-scale pipeline:
//!
//! - [`corpus`]: multilingual document ingestion, parallel split assignment keyed by
//!   CELEX ID, label statistics and the language-model finetuning pool.
//! - [`eurovoc`]: the EuroVoc descriptor graph parsed from tab-separated triples and the
//!   contiguous label index used by the classifier head.
//! - [`tokenizer`]: a shared byte-level pair-merge vocabulary, sequence encoding and MLM
//!   corruption.
//! - [`model`]: a small post-LN transformer encoder with exact reverse-mode gradients,
//!   an MLM head and a `[CLS]`-pooled multi-label head.
//! - [`training`]: LM finetuning cycles, gradual unfreezing, the ZSL / TL / JT model
//!   selection protocols and per-language evaluation.
//! - [`metrics`]: micro-F1, RP@K, nDCG@K and relative improvement.
//!
//! [`pipeline`] wires these together the way the `lmtc` binary runs them, and [`synth`]
//! generates parallel corpora and thesaurus fixtures for experiments without the real data.

pub mod config;
pub mod corpus;
pub mod eurovoc;
pub mod manifest;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod synth;
pub mod tokenizer;
pub mod training;

pub use corpus::{Corpus, Document, LanguageCode, Split};
pub use eurovoc::{DescriptorGraph, LabelIndex};
pub use metrics::{EvalReport, PredictionRow};
pub use model::{EncoderModel, GroupId, ModelConfig};
pub use tokenizer::{TokenSequence, Vocab};

pub use training::{Scheme, TrainPlan, UnfreezeSchedule};
