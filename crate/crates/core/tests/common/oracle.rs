//! Brute-force metric oracles: build the ranked list explicitly, then evaluate the
//! textbook formulas term by term.

use std::collections::BTreeSet;

use lmtc::metrics::PredictionRow;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Repeated selection of the best remaining label, the lowest index winning ties.
fn ranked(scores: &[f64]) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..scores.len()).collect();
    let mut out = Vec::new();
    while !remaining.is_empty() {
        let mut best = 0;
        for (pos, &j) in remaining.iter().enumerate() {
            let b = remaining[best];
            if scores[j] > scores[b] || (scores[j] == scores[b] && j < b) {
                best = pos;
            }
        }
        out.push(remaining.remove(best));
    }
    out
}

pub fn rp_at_k(rows: &[PredictionRow], k: usize) -> Option<f64> {
    let mut vals = Vec::new();
    for r in rows {
        if r.gold.is_empty() {
            continue;
        }
        let list = ranked(&r.scores);
        let denom = if k < r.gold.len() { k } else { r.gold.len() };
        let mut hits = 0.0;
        for j in list.iter().take(denom) {
            if r.gold.contains(j) {
                hits += 1.0;
            }
        }
        vals.push(hits / denom as f64);
    }
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

pub fn ndcg_at_k(rows: &[PredictionRow], k: usize) -> Option<f64> {
    let mut vals = Vec::new();
    for r in rows {
        if r.gold.is_empty() {
            continue;
        }
        let list = ranked(&r.scores);
        let mut dcg = 0.0;
        for i in 1..=k.min(list.len()) {
            let rel = if r.gold.contains(&list[i - 1]) { 1.0 } else { 0.0 };
            dcg += rel / (i as f64 + 1.0).log2();
        }
        let mut ideal = vec![1.0; r.gold.len()];
        ideal.resize(list.len(), 0.0);
        let mut idcg = 0.0;
        for i in 1..=k.min(ideal.len()) {
            idcg += ideal[i - 1] / (i as f64 + 1.0).log2();
        }
        vals.push(dcg / idcg);
    }
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

/// A random instance: 1–8 documents over at most 20 labels; scores are drawn from a
/// coarse grid so ties occur often.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Vec<PredictionRow> {
    let labels = rng.random_range(1..=20);
    let docs = rng.random_range(1..=8);
    (0..docs)
        .map(|d| {
            let scores = (0..labels)
                .map(|_| f64::from(rng.random_range(0..=10u8)) / 10.0)
                .collect();
            let gold: BTreeSet<usize> = (0..labels).filter(|_| rng.random_bool(0.25)).collect();
            PredictionRow {
                celex_id: format!("doc{d}"),
                scores,
                gold,
            }
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
