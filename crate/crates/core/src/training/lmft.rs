//! Masked-LM finetuning cycles.

use rand::seq::SliceRandom;

use crate::corpus::Document;
use crate::model::{Batch, EncoderModel, GroupId, Tape, TrainableSet};
use crate::tokenizer::{mask_for_mlm, MaskConfig, MaskTargets, TokenSequence, Vocab};

use super::data::encode_documents;
use super::optim::{clip_grad_norm, AdamW, TriangularSchedule};
use super::{seeded_rng, OptimizerSettings, Result, TrainingError};

const SHUFFLE_STREAM: u64 = 0x1000;
const MASK_STREAM: u64 = 0x2000;
const HELD_OUT_STREAM: u64 = 0x3000;

/// Runs `cycles` full passes over `pool` with the MLM objective. Each cycle has its own
/// triangular learning-rate profile and fresh masks. Every group except `CLS_HEAD` is
/// trained. With `cycles == 0` the model is returned as is.
pub fn run_lmft(
    model: EncoderModel<f32>,
    pool: &[Document],
    cycles: usize,
    vocab: &Vocab,
    settings: &OptimizerSettings,
    seed: u64,
) -> Result<EncoderModel<f32>> {
    if cycles == 0 {
        return Ok(model);
    }
    if pool.is_empty() {
        return Err(TrainingError::EmptyPool);
    }
    let seqs: Vec<TokenSequence> = encode_documents(pool, vocab, model.config.max_seq_len, None)?
        .into_iter()
        .map(|d| d.seq)
        .collect();
    run_mlm(model, &seqs, cycles, vocab.len(), settings, seed)
}

/// MLM passes over pre-encoded sequences; shared by pretraining and LM finetuning.
pub fn run_mlm(
    mut model: EncoderModel<f32>,
    seqs: &[TokenSequence],
    passes: usize,
    vocab_len: usize,
    settings: &OptimizerSettings,
    seed: u64,
) -> Result<EncoderModel<f32>> {
    if passes == 0 {
        return Ok(model);
    }
    if seqs.is_empty() {
        return Err(TrainingError::EmptyPool);
    }
    settings.validate("mlm optimizer")?;
    let trainable: TrainableSet = model
        .group_ids()
        .into_iter()
        .filter(|&g| g != GroupId::ClsHead)
        .collect();
    let mask_cfg = MaskConfig::default();
    let mut opt = AdamW::new(settings.weight_decay);
    let mut tape = Tape::new();
    let steps = seqs.len().div_ceil(settings.batch_size);
    for pass in 0..passes {
        let mut order: Vec<usize> = (0..seqs.len()).collect();
        order.shuffle(&mut seeded_rng(seed, SHUFFLE_STREAM + pass as u64));
        let mut mask_rng = seeded_rng(seed, MASK_STREAM + pass as u64);
        let schedule = TriangularSchedule::new(settings.learning_rate, steps, settings.warmup_fraction);
        let (mut loss_sum, mut masked_sum) = (0.0f64, 0usize);
        for (step, picks) in order.chunks(settings.batch_size).enumerate() {
            let mut corrupted = Vec::with_capacity(picks.len());
            let mut targets = Vec::with_capacity(picks.len());
            for &i in picks {
                let (s, t) = mask_for_mlm(&seqs[i], &mut mask_rng, &mask_cfg, vocab_len);
                corrupted.push(s);
                targets.push(t);
            }
            let out = model.forward_mlm(&Batch::pad(&corrupted), &targets, Some(&mut tape))?;
            if !out.loss.is_finite() {
                return Err(TrainingError::Diverged {
                    epoch: pass + 1,
                    step,
                });
            }
            if out.masked == 0 {
                tape.clear();
                continue;
            }
            loss_sum += f64::from(out.loss) * out.masked as f64;
            masked_sum += out.masked;
            let mut grads = model.backward(&mut tape, &trainable)?;
            clip_grad_norm(&mut grads, settings.clip_norm);
            opt.step(&mut model, &grads, schedule.lr(step));
        }
        log::info!(
            "mlm pass {}/{passes}: mean masked-token loss {:.4}",
            pass + 1,
            loss_sum / masked_sum.max(1) as f64
        );
    }
    Ok(model)
}

/// Mean MLM loss per masked token over `docs`, with masks drawn from `seed` so different
/// models can be compared on identical corruption.
pub fn mlm_loss(model: &EncoderModel<f32>, docs: &[Document], vocab: &Vocab, seed: u64) -> Result<f64> {
    let encoded = encode_documents(docs, vocab, model.config.max_seq_len, None)?;
    let mut rng = seeded_rng(seed, HELD_OUT_STREAM);
    let cfg = MaskConfig::default();
    let (mut total, mut count) = (0.0f64, 0usize);
    for chunk in encoded.chunks(32) {
        let (seqs, targets): (Vec<TokenSequence>, Vec<MaskTargets>) = chunk
            .iter()
            .map(|d| mask_for_mlm(&d.seq, &mut rng, &cfg, vocab.len()))
            .unzip();
        let out = model.forward_mlm(&Batch::pad(&seqs), &targets, None)?;
        total += f64::from(out.loss) * out.masked as f64;
        count += out.masked;
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}
