mod common;

use common::gradcheck::{check, problem, tiny_config, Loss};
use lmtc::model::{Batch, EncoderModel, GroupId, ModelConfig, Tape, TrainableSet};
use lmtc::tokenizer::{MaskTargets, TokenSequence};

#[test]
fn gradients_match_finite_differences_on_config_matrix() {
    let base = tiny_config();
    let configs = [
        base.clone(),
        ModelConfig {
            layers: 1,
            hidden: 8,
            heads: 1,
            ff_dim: 16,
            ..base.clone()
        },
        ModelConfig {
            layers: 3,
            hidden: 12,
            heads: 3,
            ff_dim: 20,
            ..base
        },
    ];
    for (i, cfg) in configs.iter().enumerate() {
        let m = EncoderModel::<f64>::init(cfg, 100 + i as u64).unwrap();
        let p = problem(cfg, 200 + i as u64);
        for kind in [Loss::Mlm, Loss::Classify] {
            for (g, e) in check(&m, &p, kind) {
                assert!(e.relative < 1e-3, "config {i} {kind:?} {g}: {e:?}");
            }
        }
    }
}

#[test]
fn no_masked_positions_means_zero_gradients() {
    let cfg = tiny_config();
    let m = EncoderModel::<f64>::init(&cfg, 1).unwrap();
    let p = problem(&cfg, 2);
    let empty = vec![MaskTargets::new(); p.batch.len()];
    let mut tape = Tape::new();
    let out = m.forward_mlm(&p.batch, &empty, Some(&mut tape)).unwrap();
    assert_eq!(out.loss, 0.0);
    let all: TrainableSet = m.group_ids().into_iter().collect();
    let g = m.backward(&mut tape, &all).unwrap();
    assert_eq!(g.global_norm(), 0.0);
}

#[test]
fn frozen_embeddings_are_absent_from_gradients() {
    let cfg = tiny_config();
    let m = EncoderModel::<f32>::init(&cfg, 1).unwrap().cast::<f64>();
    let p = problem(&cfg, 2);
    let mut tape = Tape::new();
    m.forward_mlm(&p.batch, &p.targets, Some(&mut tape)).unwrap();
    let trainable: TrainableSet = [GroupId::Layer(1), GroupId::Layer(2), GroupId::MlmHead].into();
    let g = m.backward(&mut tape, &trainable).unwrap();
    assert!(!g.contains(GroupId::Emb));
    assert_eq!(g.groups(), trainable.into_iter().collect::<Vec<_>>());
}

#[test]
fn outputs_are_equivariant_under_batch_order() {
    let cfg = tiny_config();
    let m = EncoderModel::<f32>::init(&cfg, 4).unwrap();
    let p = problem(&cfg, 5);
    let forward = m.predict_proba(&p.batch).unwrap();
    let mut rows: Vec<TokenSequence> = p
        .batch
        .ids
        .iter()
        .zip(&p.batch.lengths)
        .map(|(ids, &n)| TokenSequence { ids: ids[..n].to_vec() })
        .collect();
    rows.reverse();
    let reversed = m.predict_proba(&Batch::pad(&rows)).unwrap();
    for (a, b) in forward.iter().zip(reversed.iter().rev()) {
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
    assert!(forward.iter().all(|r| r.len() == cfg.label_count));
}

#[test]
fn attention_rows_sum_to_one_and_ignore_padding() {
    let cfg = tiny_config();
    let m = EncoderModel::<f32>::init(&cfg, 4).unwrap();
    let p = problem(&cfg, 5);
    let t = p.batch.width();
    for layer in 1..=cfg.layers {
        let w = m.attention_weights(&p.batch, layer).unwrap();
        for (doc, &len) in w.iter().zip(&p.batch.lengths) {
            for head in doc {
                for i in 0..t {
                    let row = &head[i * t..(i + 1) * t];
                    let s: f32 = row[..len].iter().sum();
                    assert!((s - 1.0).abs() < 1e-6);
                    assert!(row[len..].iter().all(|&v| v == 0.0));
                }
            }
        }
    }
}
