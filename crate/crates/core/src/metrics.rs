//! Multi-label evaluation: thresholded micro-F1 and the rank metrics RP@K and nDCG@K.
//!
//! Rankings sort labels by descending score with ties broken by ascending label index.
//! Documents without gold labels are excluded from the rank metrics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no prediction rows")]
    NoRows,
    #[error("threshold {0} is outside [0, 1]")]
    BadThreshold(f64),
    #[error("K must be at least 1")]
    BadK,
    #[error("every document has an empty gold set")]
    AllGoldEmpty,
    #[error("baseline must be positive, got {0}")]
    BadBaseline(f64),
    #[error("invalid prediction row {celex_id}: {message}")]
    BadRow { celex_id: String, message: String },
    #[error("predictions line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub celex_id: String,
    pub scores: Vec<f64>,
    pub gold: BTreeSet<usize>,
}

impl PredictionRow {
    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| {
            Err(MetricsError::BadRow {
                celex_id: self.celex_id.clone(),
                message,
            })
        };
        if let Some(s) = self.scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return bad(format!("score {s} outside [0, 1]"));
        }
        if let Some(&g) = self.gold.iter().find(|&&g| g >= self.scores.len()) {
            return bad(format!("gold index {g} outside {} labels", self.scores.len()));
        }
        Ok(())
    }

    /// Label indices by descending score, ties by ascending index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        idx
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct F1Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Micro-averaged over all (document, label) pairs; a label is selected when its score is
/// at least `threshold`. Precision is 0 when nothing is selected.
pub fn micro_f1(rows: &[PredictionRow], threshold: f64) -> Result<F1Scores> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(MetricsError::BadThreshold(threshold));
    }
    if rows.is_empty() {
        return Err(MetricsError::NoRows);
    }
    let (mut tp, mut selected, mut relevant) = (0usize, 0usize, 0usize);
    for r in rows {
        relevant += r.gold.len();
        for (j, &s) in r.scores.iter().enumerate() {
            if s >= threshold {
                selected += 1;
                if r.gold.contains(&j) {
                    tp += 1;
                }
            }
        }
    }
    let precision = if selected == 0 { 0.0 } else { tp as f64 / selected as f64 };
    let recall = if relevant == 0 { 0.0 } else { tp as f64 / relevant as f64 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(F1Scores {
        precision,
        recall,
        f1,
    })
}

fn rank_metric(rows: &[PredictionRow], k: usize, per_doc: impl Fn(&[usize], &BTreeSet<usize>) -> f64) -> Result<f64> {
    if k == 0 {
        return Err(MetricsError::BadK);
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for r in rows.iter().filter(|r| !r.gold.is_empty()) {
        let ranking = r.ranking();
        sum += per_doc(&ranking[..k.min(ranking.len())], &r.gold);
        n += 1;
    }
    if n == 0 {
        return Err(MetricsError::AllGoldEmpty);
    }
    Ok(sum / n as f64)
}

/// Fraction of gold labels among the top `min(K, |gold|)` labels, averaged over documents.
pub fn rp_at_k(rows: &[PredictionRow], k: usize) -> Result<f64> {
    rank_metric(rows, k, |top, gold| {
        let cut = k.min(gold.len());
        let hits = top.iter().take(cut).filter(|j| gold.contains(j)).count();
        hits as f64 / cut as f64
    })
}

/// Binary-gain nDCG over the top `K` labels, averaged over documents.
pub fn ndcg_at_k(rows: &[PredictionRow], k: usize) -> Result<f64> {
    rank_metric(rows, k, |top, gold| {
        let discount = |i: usize| 1.0 / ((i + 2) as f64).log2();
        let dcg: f64 = top
            .iter()
            .enumerate()
            .filter(|(_, j)| gold.contains(j))
            .map(|(i, _)| discount(i))
            .sum();
        let idcg: f64 = (0..k.min(gold.len())).map(discount).sum();
        dcg / idcg
    })
}

/// `100 · (treatment − baseline) / baseline`.
pub fn relative_improvement(baseline: f64, treatment: f64) -> Result<f64> {
    if baseline <= 0.0 || baseline.is_nan() {
        return Err(MetricsError::BadBaseline(baseline));
    }
    Ok(100.0 * (treatment - baseline) / baseline)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub language: String,
    pub n_docs: usize,
    pub micro_f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub rp_at: BTreeMap<usize, f64>,
    pub ndcg_at: BTreeMap<usize, f64>,
    pub threshold: f64,
}

impl EvalReport {
    pub fn compute(language: &str, rows: &[PredictionRow], ks: &[usize], threshold: f64) -> Result<Self> {
        for r in rows {
            r.validate()?;
        }
        let f = micro_f1(rows, threshold)?;
        let mut rp_at = BTreeMap::new();
        let mut ndcg_at = BTreeMap::new();
        for &k in ks {
            rp_at.insert(k, rp_at_k(rows, k)?);
            ndcg_at.insert(k, ndcg_at_k(rows, k)?);
        }
        Ok(EvalReport {
            language: language.to_string(),
            n_docs: rows.len(),
            micro_f1: f.f1,
            precision: f.precision,
            recall: f.recall,
            rp_at,
            ndcg_at,
            threshold,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} docs={:<6} F1={:.4} P={:.4} R={:.4}",
            self.language.to_uppercase(),
            self.n_docs,
            self.micro_f1,
            self.precision,
            self.recall
        )?;
        for (k, v) in &self.rp_at {
            write!(f, " RP@{k}={v:.4}")?;
        }
        for (k, v) in &self.ndcg_at {
            write!(f, " nDCG@{k}={v:.4}")?;
        }
        Ok(())
    }
}

/// One line of a predictions file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub celex_id: String,
    pub scores: Vec<f64>,
}

pub fn write_predictions<W: Write>(mut out: W, records: &[ScoreRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_predictions<R: BufRead>(input: R) -> Result<Vec<ScoreRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| MetricsError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
