mod common;

use std::collections::BTreeSet;

use common::oracle;
use lmtc::metrics::{micro_f1, ndcg_at_k, rp_at_k, PredictionRow};
use proptest::prelude::*;

#[test]
fn rank_metrics_match_brute_force_oracle() {
    let mut rng = oracle::rng(2024);
    for _ in 0..1000 {
        let rows = oracle::random_instance(&mut rng);
        for k in [1, 3, 5] {
            match oracle::rp_at_k(&rows, k) {
                Some(v) => {
                    assert!((rp_at_k(&rows, k).unwrap() - v).abs() < 1e-9);
                    assert!((ndcg_at_k(&rows, k).unwrap() - oracle::ndcg_at_k(&rows, k).unwrap()).abs() < 1e-9);
                }
                None => {
                    assert!(rp_at_k(&rows, k).is_err());
                    assert!(ndcg_at_k(&rows, k).is_err());
                }
            }
        }
    }
}

fn rows_strategy() -> impl Strategy<Value = Vec<PredictionRow>> {
    (1usize..12).prop_flat_map(|labels| {
        prop::collection::vec(
            (
                prop::collection::vec(0u8..=20, labels),
                prop::collection::btree_set(0..labels, 1..=labels),
            ),
            1..8,
        )
        .prop_map(|docs| {
            docs.into_iter()
                .enumerate()
                .map(|(i, (s, gold))| PredictionRow {
                    celex_id: format!("d{i}"),
                    scores: s.into_iter().map(|v| f64::from(v) / 20.0).collect(),
                    gold,
                })
                .collect()
        })
    })
}

proptest! {
    #[test]
    fn metrics_ignore_document_order(rows in rows_strategy(), k in 1usize..6) {
        let mut rev = rows.clone();
        rev.reverse();
        prop_assert_eq!(micro_f1(&rows, 0.5).unwrap(), micro_f1(&rev, 0.5).unwrap());
        prop_assert!((rp_at_k(&rows, k).unwrap() - rp_at_k(&rev, k).unwrap()).abs() < 1e-12);
        prop_assert!((ndcg_at_k(&rows, k).unwrap() - ndcg_at_k(&rev, k).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn rank_metrics_ignore_monotone_rescoring(rows in rows_strategy(), k in 1usize..6) {
        // x -> (x^2 + x) / 2 is strictly increasing on [0, 1] and keeps scores in range.
        let squashed: Vec<PredictionRow> = rows
            .iter()
            .map(|r| PredictionRow {
                scores: r.scores.iter().map(|x| (x * x + x) / 2.0).collect(),
                ..r.clone()
            })
            .collect();
        prop_assert_eq!(rp_at_k(&rows, k).unwrap(), rp_at_k(&squashed, k).unwrap());
        prop_assert_eq!(ndcg_at_k(&rows, k).unwrap(), ndcg_at_k(&squashed, k).unwrap());
    }

    #[test]
    fn relevant_first_scores_one(labels in 1usize..15, gold_n in 1usize..6, k in 1usize..8) {
        let gold_n = gold_n.min(labels);
        let gold: BTreeSet<usize> = (labels - gold_n..labels).collect();
        let scores = (0..labels).map(|j| if gold.contains(&j) { 0.9 } else { 0.1 }).collect();
        let rows = vec![PredictionRow { celex_id: "d".into(), scores, gold }];
        prop_assume!(k >= gold_n);
        prop_assert_eq!(rp_at_k(&rows, k).unwrap(), 1.0);
        prop_assert!((ndcg_at_k(&rows, k).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn values_stay_in_unit_interval(rows in rows_strategy(), k in 1usize..6) {
        let f = micro_f1(&rows, 0.5).unwrap();
        for v in [f.precision, f.recall, f.f1, rp_at_k(&rows, k).unwrap(), ndcg_at_k(&rows, k).unwrap()] {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
    }
}
