//! Central finite-difference oracle for the encoder gradients.

use std::collections::BTreeMap;

use lmtc::model::{Batch, EncoderModel, GroupId, ModelConfig, Tape, TrainableSet};
use lmtc::tokenizer::{MaskTargets, TokenSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-3;

pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        layers: 2,
        hidden: 16,
        heads: 2,
        ff_dim: 24,
        vocab_size: 40,
        max_seq_len: 10,
        label_count: 6,
    }
}

pub struct Problem {
    pub batch: Batch,
    pub targets: Vec<MaskTargets>,
    pub gold: Vec<Vec<usize>>,
}

pub fn problem(config: &ModelConfig, seed: u64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lens = [config.max_seq_len, config.max_seq_len - 3, 4];
    let seqs: Vec<TokenSequence> = lens
        .iter()
        .map(|&n| {
            let mut ids = vec![2u32];
            ids.extend((1..n - 1).map(|_| rng.random_range(5..config.vocab_size as u32)));
            ids.push(3);
            TokenSequence { ids }
        })
        .collect();
    let targets = lens
        .iter()
        .map(|&n| {
            let mut t = MaskTargets::new();
            t.insert(1, rng.random_range(5..config.vocab_size as u32));
            t.insert(n - 2, rng.random_range(5..config.vocab_size as u32));
            t
        })
        .collect();
    let gold = vec![vec![0, 3], vec![], vec![1, 2, 5]];
    Problem {
        batch: Batch::pad(&seqs),
        targets,
        gold,
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Loss {
    Mlm,
    Classify,
}

fn loss(model: &EncoderModel<f64>, p: &Problem, kind: Loss, tape: Option<&mut Tape<f64>>) -> f64 {
    match kind {
        Loss::Mlm => model.forward_mlm(&p.batch, &p.targets, tape).unwrap().loss,
        Loss::Classify => model.forward_classify(&p.batch, &p.gold, tape).unwrap().loss,
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct GroupError {
    /// `‖analytic − numeric‖ / max(‖analytic‖, ‖numeric‖)`, zero when both vanish.
    pub relative: f64,
    /// Largest `|analytic − numeric| / max(|analytic|, |numeric|, 1e-6)` over entries.
    pub worst_entry: f64,
    pub entries: usize,
}

/// Relative error of every group's analytic gradient against central differences.
pub fn check(model: &EncoderModel<f64>, p: &Problem, kind: Loss) -> BTreeMap<GroupId, GroupError> {
    let trainable: TrainableSet = model.group_ids().into_iter().collect();
    let mut tape = Tape::new();
    loss(model, p, kind, Some(&mut tape));
    let grads = model.backward(&mut tape, &trainable).unwrap();
    let mut worst = BTreeMap::new();
    let mut probe = model.clone();
    for g in model.group_ids() {
        let analytic: Vec<Vec<f64>> = grads
            .group_tensors(g)
            .unwrap()
            .into_iter()
            .map(|(_, t)| t.data.clone())
            .collect();
        let mut e = GroupError::default();
        let (mut diff2, mut a2, mut n2) = (0.0f64, 0.0f64, 0.0f64);
        for (ti, tensor) in analytic.iter().enumerate() {
            for (k, &a) in tensor.iter().enumerate() {
                let orig = probe.group_tensors(g)[ti].1.data[k];
                probe.group_tensors_mut(g)[ti].1.data[k] = orig + STEP;
                let up = loss(&probe, p, kind, None);
                probe.group_tensors_mut(g)[ti].1.data[k] = orig - STEP;
                let down = loss(&probe, p, kind, None);
                probe.group_tensors_mut(g)[ti].1.data[k] = orig;
                let numeric = (up - down) / (2.0 * STEP);
                let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                e.worst_entry = e.worst_entry.max(err);
                e.entries += 1;
                diff2 += (a - numeric).powi(2);
                a2 += a * a;
                n2 += numeric * numeric;
            }
        }
        let denom = a2.sqrt().max(n2.sqrt());
        e.relative = if denom == 0.0 { diff2.sqrt() } else { diff2.sqrt() / denom };
        worst.insert(g, e);
    }
    worst
}
