//! Multilingual legal-document corpora.
//!
//! A [`Corpus`] is immutable once built. Reads of a split go through [`Corpus::read`],
//! which records them in a shared [`AccessAudit`] so that transfer-scheme isolation can be
//! checked after a run.

mod jrc;
mod jsonl;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use jsonl::{export_jsonl, to_jsonl_string};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: element <{element}>: {message}")]
    MalformedElement {
        path: PathBuf,
        element: String,
        message: String,
    },
    #[error("duplicate document {celex_id} ({language})")]
    Duplicate {
        celex_id: String,
        language: LanguageCode,
    },
    #[error("document {celex_id}: {message}")]
    Validation { celex_id: String, message: String },
    #[error("invalid language code `{0}`")]
    InvalidLanguage(String),
    #[error("language {0} is not in the configured registry")]
    UnregisteredLanguage(LanguageCode),
    #[error("anchor language {0} is not present in the input corpora")]
    MissingAnchor(LanguageCode),
    #[error("anchor language {language} appears in {count} input corpora")]
    AmbiguousAnchor { language: LanguageCode, count: usize },
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// Two-letter lowercase language tag.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LanguageCode([u8; 2]);

impl LanguageCode {
    pub const EN: LanguageCode = LanguageCode(*b"en");
    pub const FR: LanguageCode = LanguageCode(*b"fr");
    pub const DE: LanguageCode = LanguageCode(*b"de");

    pub fn as_str(&self) -> &str {
        // Constructed only from validated ASCII.
        std::str::from_utf8(&self.0).expect("ascii language code")
    }
}

impl FromStr for LanguageCode {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self> {
        let bytes = s.as_bytes();
        if bytes.len() == 2 && bytes.iter().all(u8::is_ascii_lowercase) {
            Ok(LanguageCode([bytes[0], bytes[1]]))
        } else {
            Err(CorpusError::InvalidLanguage(s.to_string()))
        }
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

impl Serialize for LanguageCode {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for LanguageCode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a comma-separated language list such as `en,fr,de`.
pub fn parse_language_list(s: &str) -> Result<BTreeSet<LanguageCode>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(LanguageCode::from_str)
        .collect()
}

/// The set of languages a deployment accepts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LanguageRegistry {
    languages: BTreeSet<LanguageCode>,
}

impl LanguageRegistry {
    pub fn new(languages: impl IntoIterator<Item = LanguageCode>) -> Self {
        LanguageRegistry {
            languages: languages.into_iter().collect(),
        }
    }

    pub fn contains(&self, language: LanguageCode) -> bool {
        self.languages.contains(&language)
    }

    pub fn check(&self, language: LanguageCode) -> Result<()> {
        if self.contains(language) {
            Ok(())
        } else {
            Err(CorpusError::UnregisteredLanguage(language))
        }
    }

    pub fn languages(&self) -> &BTreeSet<LanguageCode> {
        &self.languages
    }
}

impl Default for LanguageRegistry {
    fn default() -> Self {
        LanguageRegistry::new([LanguageCode::EN, LanguageCode::FR, LanguageCode::DE])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
    /// Not part of any classification split; usable for LM finetuning only.
    #[serde(rename = "none")]
    NoSplit,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Dev, Split::Test, Split::NoSplit];

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::NoSplit => "none",
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "dev" | "development" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            "none" => Ok(Split::NoSplit),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One legal text in one language.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub celex_id: String,
    pub language: LanguageCode,
    pub title: String,
    pub body: String,
    pub labels: BTreeSet<String>,
    pub split: Split,
}

impl Document {
    /// Title and body as the single flat text the tokenizer sees.
    pub fn text(&self) -> String {
        if self.title.is_empty() {
            self.body.clone()
        } else if self.body.is_empty() {
            self.title.clone()
        } else {
            format!("{}\n{}", self.title, self.body)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.celex_id.is_empty() {
            return Err(CorpusError::Validation {
                celex_id: String::new(),
                message: "empty celex_id".into(),
            });
        }
        if self.labels.is_empty() && self.split != Split::NoSplit {
            return Err(CorpusError::Validation {
                celex_id: self.celex_id.clone(),
                message: format!("split={} but the document has no labels", self.split),
            });
        }
        Ok(())
    }
}

/// Per-language document counts for each split.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    pub none: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.dev + self.test + self.none
    }

    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Dev => self.dev,
            Split::Test => self.test,
            Split::NoSplit => self.none,
        }
    }

    fn bump(&mut self, split: Split) {
        match split {
            Split::Train => self.train += 1,
            Split::Dev => self.dev += 1,
            Split::Test => self.test += 1,
            Split::NoSplit => self.none += 1,
        }
    }

    /// One row of the split-count table: `EN 16454 1960 1968 3163 23545`.
    pub fn table_row(&self, language: LanguageCode) -> String {
        format!(
            "{} {} {} {} {} {}",
            language.as_str().to_uppercase(),
            self.train,
            self.dev,
            self.test,
            self.none,
            self.total()
        )
    }
}

/// Why a split was read; lets the audit separate supervised use from LM finetuning.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReadPurpose {
    /// Labels are consumed: classifier training or model selection.
    Supervised,
    /// Text only: LM finetuning.
    LanguageModel,
    /// Final test-set evaluation.
    Evaluation,
    Analysis,
}

/// Counts documents handed out by [`Corpus::read`], keyed by language, split and purpose.
#[derive(Debug, Default)]
pub struct AccessAudit {
    reads: Mutex<BTreeMap<(LanguageCode, Split, ReadPurpose), u64>>,
}

impl AccessAudit {
    fn record(&self, language: LanguageCode, split: Split, purpose: ReadPurpose, n: u64) {
        let mut reads = self.reads.lock().expect("audit lock");
        *reads.entry((language, split, purpose)).or_default() += n;
    }

    pub fn reads(&self, language: LanguageCode, split: Split, purpose: ReadPurpose) -> u64 {
        let reads = self.reads.lock().expect("audit lock");
        reads.get(&(language, split, purpose)).copied().unwrap_or(0)
    }

    /// Reads of `(language, split)` summed over every purpose.
    pub fn total_reads(&self, language: LanguageCode, split: Split) -> u64 {
        let reads = self.reads.lock().expect("audit lock");
        reads
            .iter()
            .filter(|((l, s, _), _)| *l == language && *s == split)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn snapshot(&self) -> BTreeMap<(LanguageCode, Split, ReadPurpose), u64> {
        self.reads.lock().expect("audit lock").clone()
    }

    pub fn reset(&self) {
        self.reads.lock().expect("audit lock").clear();
    }
}

/// An immutable collection of documents, possibly spanning several languages.
#[derive(Clone, Debug)]
pub struct Corpus {
    documents: Vec<Document>,
    languages: BTreeSet<LanguageCode>,
    split_counts: BTreeMap<LanguageCode, SplitCounts>,
    audit: Arc<AccessAudit>,
}

impl Corpus {
    /// Validates every document and rejects duplicate `(celex_id, language)` pairs.
    pub fn new(documents: Vec<Document>) -> Result<Corpus> {
        let mut seen = BTreeSet::new();
        let mut languages = BTreeSet::new();
        let mut split_counts: BTreeMap<LanguageCode, SplitCounts> = BTreeMap::new();
        for doc in &documents {
            doc.validate()?;
            if !seen.insert((doc.celex_id.as_str(), doc.language)) {
                return Err(CorpusError::Duplicate {
                    celex_id: doc.celex_id.clone(),
                    language: doc.language,
                });
            }
            languages.insert(doc.language);
            split_counts.entry(doc.language).or_default().bump(doc.split);
        }
        Ok(Corpus {
            documents,
            languages,
            split_counts,
            audit: Arc::new(AccessAudit::default()),
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn languages(&self) -> &BTreeSet<LanguageCode> {
        &self.languages
    }

    pub fn split_counts(&self) -> &BTreeMap<LanguageCode, SplitCounts> {
        &self.split_counts
    }

    pub fn counts_for(&self, language: LanguageCode) -> SplitCounts {
        self.split_counts.get(&language).copied().unwrap_or_default()
    }

    pub fn audit(&self) -> &Arc<AccessAudit> {
        &self.audit
    }

    /// Documents of `language` in `split`, recorded in the access audit.
    pub fn read(&self, language: LanguageCode, split: Split, purpose: ReadPurpose) -> Vec<&Document> {
        let docs: Vec<&Document> = self
            .documents
            .iter()
            .filter(|d| d.language == language && d.split == split)
            .collect();
        self.audit.record(language, split, purpose, docs.len() as u64);
        docs
    }
}

/// How ingest treats labeled records that carry no split.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SplitPolicy {
    /// Labeled records must state their split.
    #[default]
    Require,
    /// Splits will be copied from an anchor language by [`assign_parallel_splits`];
    /// labeled records without one are held as `none` until then.
    FromAnchor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    JrcXml,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "jrc_xml" | "jrc-xml" | "xml" => Ok(Format::JrcXml),
            other => Err(format!("unknown corpus format `{other}`")),
        }
    }
}

/// A record as read from source data, before split policy is applied.
#[derive(Debug)]
struct RawRecord {
    celex_id: String,
    title: String,
    body: String,
    labels: BTreeSet<String>,
    split: Option<Split>,
}

/// Reads one corpus file (JSONL) or one file / directory of files (JRC-Acquis XML).
pub fn ingest(
    path: &Path,
    language: LanguageCode,
    format: Format,
    registry: &LanguageRegistry,
    policy: SplitPolicy,
) -> Result<Corpus> {
    registry.check(language)?;
    let records = match format {
        Format::Jsonl => jsonl::read_records(path, language)?,
        Format::JrcXml => jrc::read_records(path)?,
    };
    let mut documents = Vec::with_capacity(records.len());
    for rec in records {
        let split = match (rec.split, rec.labels.is_empty()) {
            (Some(split), _) => split,
            (None, true) => Split::NoSplit,
            (None, false) => match policy {
                SplitPolicy::FromAnchor => Split::NoSplit,
                SplitPolicy::Require => {
                    return Err(CorpusError::Validation {
                        celex_id: rec.celex_id,
                        message: "labeled document has no split".into(),
                    })
                }
            },
        };
        documents.push(Document {
            celex_id: rec.celex_id,
            language,
            title: rec.title,
            body: rec.body,
            labels: rec.labels,
            split,
        });
    }
    Corpus::new(documents)
}

/// Copies the anchor language's split onto every parallel document sharing its CELEX ID.
///
/// Documents whose CELEX ID is absent from the anchor, or present there without a
/// classification split, end up with `none`. The anchor corpus itself is returned as-is.
pub fn assign_parallel_splits(corpora: &[Corpus], anchor: LanguageCode) -> Result<Vec<Corpus>> {
    let anchors: Vec<&Corpus> = corpora
        .iter()
        .filter(|c| c.languages().contains(&anchor))
        .collect();
    let anchor_corpus = match anchors.as_slice() {
        [] => return Err(CorpusError::MissingAnchor(anchor)),
        [one] => *one,
        many => {
            return Err(CorpusError::AmbiguousAnchor {
                language: anchor,
                count: many.len(),
            })
        }
    };
    let anchor_splits: HashMap<&str, Split> = anchor_corpus
        .documents()
        .iter()
        .filter(|d| d.language == anchor)
        .map(|d| (d.celex_id.as_str(), d.split))
        .collect();

    corpora
        .iter()
        .map(|corpus| {
            let docs = corpus
                .documents()
                .iter()
                .map(|d| {
                    let mut d = d.clone();
                    if d.language != anchor {
                        let split = anchor_splits
                            .get(d.celex_id.as_str())
                            .copied()
                            .unwrap_or(Split::NoSplit);
                        // An unlabeled translation of a labeled anchor document stays
                        // LM-only.
                        d.split = if d.labels.is_empty() { Split::NoSplit } else { split };
                    }
                    d
                })
                .collect();
            Corpus::new(docs)
        })
        .collect()
}

/// Label frequencies over one split.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LabelStats {
    pub frequency: BTreeMap<String, u64>,
    /// Counts sorted in non-increasing order.
    pub rank_frequency: Vec<u64>,
}

impl LabelStats {
    /// Labels ordered by descending count, ties by ascending ID.
    pub fn ranked(&self) -> Vec<(&str, u64)> {
        let mut v: Vec<(&str, u64)> = self.frequency.iter().map(|(k, &n)| (k.as_str(), n)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }
}

pub fn label_stats(corpus: &Corpus, split: Split) -> LabelStats {
    let mut frequency: BTreeMap<String, u64> = BTreeMap::new();
    for &language in corpus.languages() {
        for doc in corpus.read(language, split, ReadPurpose::Analysis) {
            for label in &doc.labels {
                *frequency.entry(label.clone()).or_default() += 1;
            }
        }
    }
    let mut rank_frequency: Vec<u64> = frequency.values().copied().collect();
    rank_frequency.sort_unstable_by(|a, b| b.cmp(a));
    LabelStats {
        frequency,
        rank_frequency,
    }
}

/// Train and unsplit documents of the requested languages, for LM finetuning.
pub fn lmft_pool(corpora: &[Corpus], languages: &BTreeSet<LanguageCode>) -> Vec<Document> {
    let mut pool = Vec::new();
    for corpus in corpora {
        for &language in languages.intersection(corpus.languages()) {
            for split in [Split::Train, Split::NoSplit] {
                pool.extend(
                    corpus
                        .read(language, split, ReadPurpose::LanguageModel)
                        .into_iter()
                        .cloned(),
                );
            }
        }
    }
    if pool.is_empty() && !languages.is_empty() {
        log::warn!("LM finetuning pool is empty for languages {languages:?}");
    }
    pool
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, lang: LanguageCode, labels: &[&str], split: Split) -> Document {
        Document {
            celex_id: id.into(),
            language: lang,
            title: format!("title {id}"),
            body: format!("body {id}"),
            labels: labels.iter().map(|s| s.to_string()).collect(),
            split,
        }
    }

    #[test]
    fn language_code_parsing() {
        assert_eq!("en".parse::<LanguageCode>().unwrap(), LanguageCode::EN);
        assert!("EN".parse::<LanguageCode>().is_err());
        assert!("eng".parse::<LanguageCode>().is_err());
        assert!(LanguageRegistry::default().check("it".parse().unwrap()).is_err());
    }

    #[test]
    fn split_counts_match_histogram() {
        let corpus = Corpus::new(vec![
            doc("a", LanguageCode::EN, &["1"], Split::Train),
            doc("b", LanguageCode::EN, &["1"], Split::Train),
            doc("c", LanguageCode::EN, &["2"], Split::Test),
            doc("d", LanguageCode::EN, &[], Split::NoSplit),
        ])
        .unwrap();
        let counts = corpus.counts_for(LanguageCode::EN);
        assert_eq!((counts.train, counts.dev, counts.test, counts.none), (2, 0, 1, 1));
        assert_eq!(counts.table_row(LanguageCode::EN), "EN 2 0 1 1 4");
    }

    #[test]
    fn duplicate_key_rejected() {
        let err = Corpus::new(vec![
            doc("x", LanguageCode::EN, &["1"], Split::Train),
            doc("x", LanguageCode::EN, &["2"], Split::Dev),
        ])
        .unwrap_err();
        assert!(err.to_string().contains('x'), "{err}");
        // Same id in another language is fine.
        Corpus::new(vec![
            doc("x", LanguageCode::EN, &["1"], Split::Train),
            doc("x", LanguageCode::FR, &["1"], Split::Train),
        ])
        .unwrap();
    }

    #[test]
    fn labeled_train_without_labels_rejected() {
        let err = Corpus::new(vec![doc("e", LanguageCode::EN, &[], Split::Train)]).unwrap_err();
        assert!(matches!(err, CorpusError::Validation { .. }));
    }

    #[test]
    fn parallel_splits_follow_anchor() {
        let en = Corpus::new(vec![
            doc("X", LanguageCode::EN, &["1"], Split::Test),
            doc("Y", LanguageCode::EN, &["1"], Split::Train),
        ])
        .unwrap();
        let fr = Corpus::new(vec![
            doc("X", LanguageCode::FR, &["1"], Split::NoSplit),
            doc("Z", LanguageCode::FR, &["1"], Split::NoSplit),
        ])
        .unwrap();
        let out = assign_parallel_splits(&[en, fr], LanguageCode::EN).unwrap();
        let fr = &out[1];
        let split_of = |id: &str| fr.documents().iter().find(|d| d.celex_id == id).unwrap().split;
        assert_eq!(split_of("X"), Split::Test);
        assert_eq!(split_of("Z"), Split::NoSplit);
    }

    #[test]
    fn parallel_splits_fixture_of_ten() {
        // Anchor covers celex 0..6; fr has 0..10, so 6..10 must fall to none.
        let splits = [Split::Train, Split::Dev, Split::Test];
        let en = Corpus::new(
            (0..6)
                .map(|i| doc(&format!("c{i}"), LanguageCode::EN, &["1"], splits[i % 3]))
                .collect(),
        )
        .unwrap();
        let fr = Corpus::new(
            (0..10)
                .map(|i| doc(&format!("c{i}"), LanguageCode::FR, &["1"], Split::NoSplit))
                .collect(),
        )
        .unwrap();
        let out = assign_parallel_splits(&[en, fr], LanguageCode::EN).unwrap();
        let counts = out[1].counts_for(LanguageCode::FR);
        assert_eq!((counts.train, counts.dev, counts.test, counts.none), (2, 2, 2, 4));
    }

    #[test]
    fn anchor_errors() {
        let en1 = Corpus::new(vec![doc("a", LanguageCode::EN, &["1"], Split::Train)]).unwrap();
        let en2 = Corpus::new(vec![doc("b", LanguageCode::EN, &["1"], Split::Train)]).unwrap();
        let fr = Corpus::new(vec![doc("a", LanguageCode::FR, &["1"], Split::NoSplit)]).unwrap();
        assert!(matches!(
            assign_parallel_splits(&[en1.clone(), en2, fr.clone()], LanguageCode::EN),
            Err(CorpusError::AmbiguousAnchor { count: 2, .. })
        ));
        assert!(matches!(
            assign_parallel_splits(&[fr], LanguageCode::EN),
            Err(CorpusError::MissingAnchor(_))
        ));
    }

    #[test]
    fn label_stats_counts_and_ranks() {
        let corpus = Corpus::new(vec![
            doc("a", LanguageCode::EN, &["A"], Split::Train),
            doc("b", LanguageCode::EN, &["A", "B"], Split::Train),
            doc("c", LanguageCode::EN, &["C"], Split::Dev),
        ])
        .unwrap();
        let stats = label_stats(&corpus, Split::Train);
        assert_eq!(stats.frequency.get("A"), Some(&2));
        assert_eq!(stats.frequency.get("B"), Some(&1));
        assert_eq!(stats.frequency.len(), 2);
        assert_eq!(stats.rank_frequency, vec![2, 1]);
        assert!(label_stats(&corpus, Split::Test).frequency.is_empty());
    }

    #[test]
    fn lmft_pool_excludes_dev_and_test() {
        let mut docs = Vec::new();
        for i in 0..5 {
            docs.push(doc(&format!("t{i}"), LanguageCode::FR, &["1"], Split::Train));
        }
        for i in 0..2 {
            docs.push(doc(&format!("n{i}"), LanguageCode::FR, &[], Split::NoSplit));
        }
        docs.push(doc("x", LanguageCode::FR, &["1"], Split::Test));
        let fr = Corpus::new(docs).unwrap();
        let pool = lmft_pool(std::slice::from_ref(&fr), &[LanguageCode::FR].into());
        assert_eq!(pool.len(), 7);
        assert!(pool.iter().all(|d| matches!(d.split, Split::Train | Split::NoSplit)));
        assert!(lmft_pool(&[fr], &BTreeSet::new()).is_empty());
    }

    #[test]
    fn audit_records_reads() {
        let corpus = Corpus::new(vec![
            doc("a", LanguageCode::EN, &["A"], Split::Train),
            doc("b", LanguageCode::EN, &["A"], Split::Train),
        ])
        .unwrap();
        corpus.read(LanguageCode::EN, Split::Train, ReadPurpose::Supervised);
        assert_eq!(
            corpus.audit().reads(LanguageCode::EN, Split::Train, ReadPurpose::Supervised),
            2
        );
        assert_eq!(corpus.audit().total_reads(LanguageCode::EN, Split::Dev), 0);
    }
}
