//! Documents encoded once for repeated passes.

use crate::corpus::{Document, LanguageCode};
use crate::eurovoc::LabelIndex;
use crate::model::Batch;
use crate::tokenizer::{TokenSequence, Vocab};

use super::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct EncodedDoc {
    pub celex_id: String,
    pub language: LanguageCode,
    pub seq: TokenSequence,
    /// Label indices; descriptors missing from the index are dropped.
    pub gold: Vec<usize>,
}

pub fn encode_documents<'a, I>(
    docs: I,
    vocab: &Vocab,
    max_seq_len: usize,
    labels: Option<&LabelIndex>,
) -> Result<Vec<EncodedDoc>>
where
    I: IntoIterator<Item = &'a Document>,
{
    docs.into_iter()
        .map(|d| {
            let gold = labels.map_or_else(Vec::new, |idx| {
                d.labels.iter().filter_map(|l| idx.index_of(l)).collect()
            });
            Ok(EncodedDoc {
                celex_id: d.celex_id.clone(),
                language: d.language,
                seq: vocab.encode(&d.text(), max_seq_len)?,
                gold,
            })
        })
        .collect()
}

pub(crate) fn batch_of(docs: &[EncodedDoc], picks: &[usize]) -> (Batch, Vec<Vec<usize>>) {
    let seqs: Vec<TokenSequence> = picks.iter().map(|&i| docs[i].seq.clone()).collect();
    let gold = picks.iter().map(|&i| docs[i].gold.clone()).collect();
    (Batch::pad(&seqs), gold)
}
