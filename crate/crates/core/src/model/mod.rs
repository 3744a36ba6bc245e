//! A small post-LN transformer encoder with hand-written reverse-mode gradients.
//!
//! Parameters are partitioned into freeze-groups: `EMB` (token and position embeddings
//! plus the embedding layer norm), `LAYER_1..LAYER_n`, `MLM_HEAD` and `CLS_HEAD`. The
//! training scheduler addresses them through [`GroupId`].
//!
//! Everything is generic over [`Scalar`]; training uses `f32`, and the gradient check runs
//! the same code in `f64`.

mod checkpoint;
mod forward;
pub mod kernels;

use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::tokenizer::{TokenSequence, PAD};

pub use checkpoint::{load_checkpoint, load_checkpoint_expecting, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use forward::{ClassifyOutput, MlmOutput, Tape};

pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Default
    + Send
    + Sync
    + fmt::Debug
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid batch: {0}")]
    BadBatch(String),
    #[error("backward called without a cached forward pass")]
    NoCachedForward,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint shape mismatch in group {group}: {message}")]
    ShapeMismatch { group: String, message: String },
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub ff_dim: usize,
    pub vocab_size: usize,
    pub max_seq_len: usize,
    pub label_count: usize,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ModelError::InvalidConfig(m));
        for (name, v) in [
            ("layers", self.layers),
            ("hidden", self.hidden),
            ("heads", self.heads),
            ("ff_dim", self.ff_dim),
            ("vocab_size", self.vocab_size),
            ("max_seq_len", self.max_seq_len),
            ("label_count", self.label_count),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if !self.hidden.is_multiple_of(self.heads) {
            return bad(format!(
                "hidden={} is not divisible by heads={}",
                self.hidden, self.heads
            ));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden / self.heads
    }

    /// Canonical `key=value` lines, as stored in checkpoints.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.fields() {
            writeln!(s, "{k}={v}").unwrap();
        }
        s
    }

    fn fields(&self) -> [(&'static str, usize); 7] {
        [
            ("layers", self.layers),
            ("hidden", self.hidden),
            ("heads", self.heads),
            ("ff_dim", self.ff_dim),
            ("vocab_size", self.vocab_size),
            ("max_seq_len", self.max_seq_len),
            ("label_count", self.label_count),
        ]
    }

    pub fn from_text(text: &str) -> Result<ModelConfig> {
        let mut cfg = ModelConfig {
            layers: 0,
            hidden: 0,
            heads: 0,
            ff_dim: 0,
            vocab_size: 0,
            max_seq_len: 0,
            label_count: 0,
        };
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ModelError::InvalidConfig(format!("bad line `{line}`")))?;
            let v: usize = v
                .trim()
                .parse()
                .map_err(|e| ModelError::InvalidConfig(format!("{k}: {e}")))?;
            let slot = match k.trim() {
                "layers" => &mut cfg.layers,
                "hidden" => &mut cfg.hidden,
                "heads" => &mut cfg.heads,
                "ff_dim" => &mut cfg.ff_dim,
                "vocab_size" => &mut cfg.vocab_size,
                "max_seq_len" => &mut cfg.max_seq_len,
                "label_count" => &mut cfg.label_count,
                other => return Err(ModelError::InvalidConfig(format!("unknown key `{other}`"))),
            };
            *slot = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A freeze-group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupId {
    Emb,
    /// 1-based, bottom to top.
    Layer(usize),
    MlmHead,
    ClsHead,
}

impl GroupId {
    /// Position in the encoder stack; `None` for the heads.
    fn depth(self) -> Option<usize> {
        match self {
            GroupId::Emb => Some(0),
            GroupId::Layer(i) => Some(i),
            _ => None,
        }
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupId::Emb => f.write_str("EMB"),
            GroupId::Layer(i) => write!(f, "LAYER_{i}"),
            GroupId::MlmHead => f.write_str("MLM_HEAD"),
            GroupId::ClsHead => f.write_str("CLS_HEAD"),
        }
    }
}

impl FromStr for GroupId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "EMB" => Ok(GroupId::Emb),
            "MLM_HEAD" => Ok(GroupId::MlmHead),
            "CLS_HEAD" => Ok(GroupId::ClsHead),
            _ => s
                .strip_prefix("LAYER_")
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n >= 1)
                .map(GroupId::Layer)
                .ok_or_else(|| format!("unknown parameter group `{s}`")),
        }
    }
}

pub type TrainableSet = BTreeSet<GroupId>;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<F> {
    pub shape: Vec<usize>,
    pub data: Vec<F>,
}

impl<F: Scalar> Tensor<F> {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![F::zero(); shape.iter().product()],
        }
    }

    pub fn filled(shape: &[usize], v: F) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![v; shape.iter().product()],
        }
    }

    fn uniform<R: Rng>(shape: &[usize], bound: f64, rng: &mut R) -> Self {
        let n = shape.iter().product();
        let data = (0..n)
            .map(|_| F::from_f64(rng.random_range(-bound..bound)).unwrap())
            .collect();
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Tensor::zeros(&self.shape)
    }

    pub fn cast<G: Scalar>(&self) -> Tensor<G> {
        Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .map(|v| G::from_f64(v.to_f64().unwrap()).unwrap())
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

macro_rules! param_group {
    ($(#[$meta:meta])* $name:ident { $($field:ident),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name<F> {
            $(pub $field: Tensor<F>,)*
        }

        impl<F: Scalar> $name<F> {
            pub fn tensors(&self) -> Vec<(&'static str, &Tensor<F>)> {
                vec![$((stringify!($field), &self.$field)),*]
            }

            pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor<F>)> {
                vec![$((stringify!($field), &mut self.$field)),*]
            }

            pub fn zeros_like(&self) -> Self {
                $name { $($field: self.$field.zeros_like()),* }
            }

            pub fn cast<G: Scalar>(&self) -> $name<G> {
                $name { $($field: self.$field.cast()),* }
            }
        }
    };
}

param_group!(
    /// Token and learned position embeddings followed by a layer norm.
    Embeddings { token, position, ln_gain, ln_shift }
);

param_group!(
    /// Self-attention and GELU feed-forward, each followed by residual + layer norm.
    EncoderLayer {
        query_w, query_b, key_w, key_b, value_w, value_b,
        attn_out_w, attn_out_b, attn_ln_gain, attn_ln_shift,
        ff_in_w, ff_in_b, ff_out_w, ff_out_b, ff_ln_gain, ff_ln_shift,
    }
);

param_group!(
    /// Dense + GELU + layer norm transform, then an untied vocabulary projection.
    MlmHead { transform_w, transform_b, ln_gain, ln_shift, decoder_w, decoder_b }
);

param_group!(
    /// `tanh` pooler over the `[CLS]` vector, then a projection to the label count.
    ClsHead { pooler_w, pooler_b, out_w, out_b }
);

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderModel<F> {
    pub config: ModelConfig,
    pub emb: Embeddings<F>,
    pub layers: Vec<EncoderLayer<F>>,
    pub mlm: MlmHead<F>,
    pub cls: ClsHead<F>,
}

fn linear_w<F: Scalar, R: Rng>(inp: usize, out: usize, rng: &mut R) -> Tensor<F> {
    Tensor::uniform(&[inp, out], 1.0 / (inp as f64).sqrt(), rng)
}

fn cls_head<F: Scalar, R: Rng>(hidden: usize, labels: usize, rng: &mut R) -> ClsHead<F> {
    ClsHead {
        pooler_w: linear_w(hidden, hidden, rng),
        pooler_b: Tensor::zeros(&[hidden]),
        out_w: linear_w(hidden, labels, rng),
        out_b: Tensor::zeros(&[labels]),
    }
}

impl<F: Scalar> EncoderModel<F> {
    /// Weights uniform in `±1/sqrt(fan_in)` (embedding tables use the hidden size),
    /// biases and layer-norm shifts zero, layer-norm gains one.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = config.hidden;
        let emb_bound = 1.0 / (h as f64).sqrt();
        let emb = Embeddings {
            token: Tensor::uniform(&[config.vocab_size, h], emb_bound, &mut rng),
            position: Tensor::uniform(&[config.max_seq_len, h], emb_bound, &mut rng),
            ln_gain: Tensor::filled(&[h], F::one()),
            ln_shift: Tensor::zeros(&[h]),
        };
        let layers = (0..config.layers)
            .map(|_| EncoderLayer {
                query_w: linear_w(h, h, &mut rng),
                query_b: Tensor::zeros(&[h]),
                key_w: linear_w(h, h, &mut rng),
                key_b: Tensor::zeros(&[h]),
                value_w: linear_w(h, h, &mut rng),
                value_b: Tensor::zeros(&[h]),
                attn_out_w: linear_w(h, h, &mut rng),
                attn_out_b: Tensor::zeros(&[h]),
                attn_ln_gain: Tensor::filled(&[h], F::one()),
                attn_ln_shift: Tensor::zeros(&[h]),
                ff_in_w: linear_w(h, config.ff_dim, &mut rng),
                ff_in_b: Tensor::zeros(&[config.ff_dim]),
                ff_out_w: linear_w(config.ff_dim, h, &mut rng),
                ff_out_b: Tensor::zeros(&[h]),
                ff_ln_gain: Tensor::filled(&[h], F::one()),
                ff_ln_shift: Tensor::zeros(&[h]),
            })
            .collect();
        let mlm = MlmHead {
            transform_w: linear_w(h, h, &mut rng),
            transform_b: Tensor::zeros(&[h]),
            ln_gain: Tensor::filled(&[h], F::one()),
            ln_shift: Tensor::zeros(&[h]),
            decoder_w: linear_w(h, config.vocab_size, &mut rng),
            decoder_b: Tensor::zeros(&[config.vocab_size]),
        };
        let cls = cls_head(h, config.label_count, &mut rng);
        Ok(EncoderModel {
            config: config.clone(),
            emb,
            layers,
            mlm,
            cls,
        })
    }

    /// Replaces the classification head with a freshly initialised one of `label_count`
    /// outputs. The encoder and MLM head are untouched.
    pub fn with_new_classifier(mut self, label_count: usize, seed: u64) -> Result<Self> {
        let mut config = self.config.clone();
        config.label_count = label_count;
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x636c_735f_6865_6164);
        self.cls = cls_head(config.hidden, label_count, &mut rng);
        self.config = config;
        Ok(self)
    }

    /// Every group, bottom to top.
    pub fn group_ids(&self) -> Vec<GroupId> {
        let mut ids = vec![GroupId::Emb];
        ids.extend((1..=self.config.layers).map(GroupId::Layer));
        ids.push(GroupId::MlmHead);
        ids.push(GroupId::ClsHead);
        ids
    }

    pub fn has_group(&self, g: GroupId) -> bool {
        match g {
            GroupId::Layer(i) => i >= 1 && i <= self.config.layers,
            _ => true,
        }
    }

    pub fn group_tensors(&self, g: GroupId) -> Vec<(&'static str, &Tensor<F>)> {
        match g {
            GroupId::Emb => self.emb.tensors(),
            GroupId::Layer(i) => self.layers[i - 1].tensors(),
            GroupId::MlmHead => self.mlm.tensors(),
            GroupId::ClsHead => self.cls.tensors(),
        }
    }

    pub fn group_tensors_mut(&mut self, g: GroupId) -> Vec<(&'static str, &mut Tensor<F>)> {
        match g {
            GroupId::Emb => self.emb.tensors_mut(),
            GroupId::Layer(i) => self.layers[i - 1].tensors_mut(),
            GroupId::MlmHead => self.mlm.tensors_mut(),
            GroupId::ClsHead => self.cls.tensors_mut(),
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.group_ids()
            .into_iter()
            .flat_map(|g| self.group_tensors(g).into_iter().map(|(_, t)| t.data.len()))
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.group_ids()
            .into_iter()
            .all(|g| self.group_tensors(g).iter().all(|(_, t)| t.is_finite()))
    }

    pub fn cast<G: Scalar>(&self) -> EncoderModel<G> {
        EncoderModel {
            config: self.config.clone(),
            emb: self.emb.cast(),
            layers: self.layers.iter().map(EncoderLayer::cast).collect(),
            mlm: self.mlm.cast(),
            cls: self.cls.cast(),
        }
    }
}

/// Gradients for the groups that were trainable during `backward`. Frozen groups have no
/// entry at all.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet<F> {
    pub emb: Option<Embeddings<F>>,
    pub layers: Vec<Option<EncoderLayer<F>>>,
    pub mlm: Option<MlmHead<F>>,
    pub cls: Option<ClsHead<F>>,
}

impl<F: Scalar> GradientSet<F> {
    pub(crate) fn zeros_for(model: &EncoderModel<F>, trainable: &TrainableSet) -> Self {
        GradientSet {
            emb: trainable.contains(&GroupId::Emb).then(|| model.emb.zeros_like()),
            layers: model
                .layers
                .iter()
                .enumerate()
                .map(|(i, l)| trainable.contains(&GroupId::Layer(i + 1)).then(|| l.zeros_like()))
                .collect(),
            mlm: trainable.contains(&GroupId::MlmHead).then(|| model.mlm.zeros_like()),
            cls: trainable.contains(&GroupId::ClsHead).then(|| model.cls.zeros_like()),
        }
    }

    /// Groups that have gradient entries, bottom to top.
    pub fn groups(&self) -> Vec<GroupId> {
        let mut out = Vec::new();
        if self.emb.is_some() {
            out.push(GroupId::Emb);
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.is_some() {
                out.push(GroupId::Layer(i + 1));
            }
        }
        if self.mlm.is_some() {
            out.push(GroupId::MlmHead);
        }
        if self.cls.is_some() {
            out.push(GroupId::ClsHead);
        }
        out
    }

    pub fn contains(&self, g: GroupId) -> bool {
        self.group_tensors(g).is_some()
    }

    pub fn group_tensors(&self, g: GroupId) -> Option<Vec<(&'static str, &Tensor<F>)>> {
        match g {
            GroupId::Emb => self.emb.as_ref().map(Embeddings::tensors),
            GroupId::Layer(i) => self
                .layers
                .get(i.checked_sub(1)?)
                .and_then(|l| l.as_ref().map(EncoderLayer::tensors)),
            GroupId::MlmHead => self.mlm.as_ref().map(MlmHead::tensors),
            GroupId::ClsHead => self.cls.as_ref().map(ClsHead::tensors),
        }
    }

    pub fn group_tensors_mut(&mut self, g: GroupId) -> Option<Vec<(&'static str, &mut Tensor<F>)>> {
        match g {
            GroupId::Emb => self.emb.as_mut().map(Embeddings::tensors_mut),
            GroupId::Layer(i) => self
                .layers
                .get_mut(i.checked_sub(1)?)
                .and_then(|l| l.as_mut().map(EncoderLayer::tensors_mut)),
            GroupId::MlmHead => self.mlm.as_mut().map(MlmHead::tensors_mut),
            GroupId::ClsHead => self.cls.as_mut().map(ClsHead::tensors_mut),
        }
    }

    /// L2 norm over every entry, summed group by group in a fixed order.
    pub fn global_norm(&self) -> F {
        let mut s = F::zero();
        for g in self.groups() {
            for (_, t) in self.group_tensors(g).unwrap() {
                for &v in &t.data {
                    s = s + v * v;
                }
            }
        }
        s.sqrt()
    }

    pub fn scale(&mut self, factor: F) {
        for g in self.groups() {
            for (_, t) in self.group_tensors_mut(g).unwrap() {
                for v in &mut t.data {
                    *v = *v * factor;
                }
            }
        }
    }
}

/// Sequences right-padded with `[PAD]` to a common length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    pub ids: Vec<Vec<u32>>,
    pub lengths: Vec<usize>,
}

impl Batch {
    pub fn pad(seqs: &[TokenSequence]) -> Batch {
        let width = seqs.iter().map(TokenSequence::len).max().unwrap_or(0);
        let ids = seqs
            .iter()
            .map(|s| {
                let mut row = s.ids.clone();
                row.resize(width, PAD);
                row
            })
            .collect();
        Batch {
            ids,
            lengths: seqs.iter().map(TokenSequence::len).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn width(&self) -> usize {
        self.ids.first().map_or(0, Vec::len)
    }

    pub(crate) fn check(&self, config: &ModelConfig) -> Result<()> {
        if self.ids.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let width = self.width();
        if width > config.max_seq_len {
            return Err(ModelError::BadBatch(format!(
                "width {width} exceeds max_seq_len {}",
                config.max_seq_len
            )));
        }
        if self.lengths.len() != self.ids.len() {
            return Err(ModelError::BadBatch("lengths do not match rows".into()));
        }
        for (row, &len) in self.ids.iter().zip(&self.lengths) {
            if row.len() != width || len == 0 || len > width {
                return Err(ModelError::BadBatch(format!(
                    "row of width {} with length {len}",
                    row.len()
                )));
            }
            if let Some(&bad) = row.iter().find(|&&id| id as usize >= config.vocab_size) {
                return Err(ModelError::BadBatch(format!(
                    "token id {bad} outside vocabulary of {}",
                    config.vocab_size
                )));
            }
        }
        Ok(())
    }
}
