//! Line-delimited JSON corpus files.
//!
//! Exported records use the canonical key order `celex_id, language, title, body, labels,
//! split` with labels sorted ascending, so export -> ingest -> export is byte-identical.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use super::{Corpus, CorpusError, LanguageCode, RawRecord, Result, Split};

#[derive(Deserialize)]
struct InputRecord {
    celex_id: String,
    #[serde(default)]
    language: Option<LanguageCode>,
    #[serde(default)]
    title: String,
    #[serde(default)]
    body: String,
    #[serde(default)]
    labels: Vec<String>,
    #[serde(default)]
    split: Option<Split>,
}

pub(super) fn read_records(path: &Path, language: LanguageCode) -> Result<Vec<RawRecord>> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| CorpusError::MalformedLine {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let rec: InputRecord = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        if rec.celex_id.is_empty() {
            return Err(malformed("empty celex_id".into()));
        }
        if let Some(lang) = rec.language {
            if lang != language {
                return Err(malformed(format!(
                    "record language {lang} does not match requested {language}"
                )));
            }
        }
        out.push(RawRecord {
            celex_id: rec.celex_id,
            title: rec.title,
            body: rec.body,
            labels: rec.labels.into_iter().collect::<BTreeSet<_>>(),
            split: rec.split,
        });
    }
    Ok(out)
}

/// Canonical JSONL text for a corpus, one record per line.
pub fn to_jsonl_string(corpus: &Corpus) -> String {
    let mut out = String::new();
    for doc in corpus.documents() {
        out.push_str(&serde_json::to_string(doc).expect("documents serialize"));
        out.push('\n');
    }
    out
}

pub fn export_jsonl(corpus: &Corpus, path: &Path) -> Result<()> {
    let io = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = fs::File::create(path).map_err(io)?;
    file.write_all(to_jsonl_string(corpus).as_bytes()).map_err(io)?;
    Ok(())
}
