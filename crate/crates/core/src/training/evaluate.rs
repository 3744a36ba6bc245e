//! Inference and per-language reports.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{Corpus, LanguageCode, ReadPurpose, Split};
use crate::eurovoc::LabelIndex;
use crate::metrics::{EvalReport, PredictionRow};
use crate::model::{Batch, EncoderModel};
use crate::tokenizer::{TokenSequence, Vocab};

use super::data::{encode_documents, EncodedDoc};
use super::{Result, TrainingError};

const INFERENCE_BATCH: usize = 32;

/// Sigmoid scores for every document, in input order.
pub fn predict_rows(model: &EncoderModel<f32>, docs: &[EncodedDoc]) -> Result<Vec<PredictionRow>> {
    let mut rows = Vec::with_capacity(docs.len());
    for chunk in docs.chunks(INFERENCE_BATCH) {
        let seqs: Vec<TokenSequence> = chunk.iter().map(|d| d.seq.clone()).collect();
        let probs = model.predict_proba(&Batch::pad(&seqs))?;
        for (d, p) in chunk.iter().zip(probs) {
            rows.push(PredictionRow {
                celex_id: d.celex_id.clone(),
                scores: p.into_iter().map(f64::from).collect(),
                gold: d.gold.iter().copied().collect(),
            });
        }
    }
    Ok(rows)
}

/// Encoded documents of one language and split, gathered from every corpus.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gather(
    corpora: &[Corpus],
    language: LanguageCode,
    split: Split,
    purpose: ReadPurpose,
    vocab: &Vocab,
    max_seq_len: usize,
    labels: &LabelIndex,
) -> Result<Vec<EncodedDoc>> {
    let mut out = Vec::new();
    for c in corpora.iter().filter(|c| c.languages().contains(&language)) {
        out.extend(encode_documents(
            c.read(language, split, purpose),
            vocab,
            max_seq_len,
            Some(labels),
        )?);
    }
    Ok(out)
}

/// Test-split report for each requested language, each computed independently.
pub fn evaluate_transfer(
    model: &EncoderModel<f32>,
    corpora: &[Corpus],
    languages: &BTreeSet<LanguageCode>,
    labels: &LabelIndex,
    vocab: &Vocab,
    ks: &[usize],
    threshold: f64,
) -> Result<BTreeMap<LanguageCode, EvalReport>> {
    let known: BTreeSet<LanguageCode> = corpora.iter().flat_map(|c| c.languages().iter().copied()).collect();
    if let Some(&l) = languages.iter().find(|l| !known.contains(l)) {
        return Err(TrainingError::UnknownLanguage(l));
    }
    let mut out = BTreeMap::new();
    for &language in languages {
        let docs = gather(
            corpora,
            language,
            Split::Test,
            ReadPurpose::Evaluation,
            vocab,
            model.config.max_seq_len,
            labels,
        )?;
        if docs.is_empty() {
            return Err(TrainingError::MissingSplit {
                language,
                split: "test",
            });
        }
        let rows = predict_rows(model, &docs)?;
        out.insert(
            language,
            EvalReport::compute(language.as_str(), &rows, ks, threshold)?,
        );
    }
    Ok(out)
}
