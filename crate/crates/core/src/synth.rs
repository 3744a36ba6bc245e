//! Synthetic stand-ins for the corpora and the thesaurus.
//!
//! [`generate_parallel`] writes the same abstract documents in several languages. Each
//! concept has a surface form per language: identical across languages, a shared stem with
//! a language-specific suffix, or unrelated words. Labels own clusters of concepts and
//! documents draw most of their content words from their labels' clusters, so the label
//! signal is the same in every language while the surface vocabulary only partly overlaps.
//!
//! [`eurovoc_fixture`] and [`split_table_fixture`] produce files with prescribed sizes for
//! parser and ingestion tests.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::corpus::{Corpus, CorpusError, Document, LanguageCode, Split, SplitCounts};
use crate::training::seeded_rng;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub languages: Vec<LanguageCode>,
    /// Labeled documents per language (every language gets the same CELEX IDs).
    pub labeled_docs: usize,
    /// Unlabeled documents per language, split `none`.
    pub unlabeled_docs: usize,
    pub labels: usize,
    pub concepts_per_label: usize,
    pub background_concepts: usize,
    pub filler_words: usize,
    pub words_per_doc: usize,
    pub max_labels_per_doc: usize,
    /// Exponent of the Zipf law over label popularity.
    pub zipf_exponent: f64,
    /// Share of concepts written identically in every language.
    pub identical_share: f64,
    /// Share of concepts written as a shared stem plus a language-specific suffix.
    pub cognate_share: f64,
    /// Probability that a word is a content word rather than filler.
    pub content_rate: f64,
    /// Probability that a content word comes from the document's labels.
    pub topic_rate: f64,
    pub train_fraction: f64,
    pub dev_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            languages: vec![LanguageCode::EN, LanguageCode::FR, LanguageCode::DE],
            labeled_docs: 500,
            unlabeled_docs: 100,
            labels: 20,
            concepts_per_label: 4,
            background_concepts: 60,
            filler_words: 40,
            words_per_doc: 24,
            max_labels_per_doc: 3,
            zipf_exponent: 1.0,
            identical_share: 0.3,
            cognate_share: 0.3,
            content_rate: 0.55,
            topic_rate: 0.8,
            train_fraction: 0.7,
            dev_fraction: 0.15,
            seed: 0,
        }
    }
}

const STREAM_LEXICON: u64 = 1;
const STREAM_DOCS: u64 = 2;
const STREAM_SPLITS: u64 = 3;
const STREAM_GENERAL: u64 = 0x100;

struct Phonology {
    onsets: &'static [&'static str],
    vowels: &'static [&'static str],
    codas: &'static [&'static str],
    suffixes: &'static [&'static str],
}

const NEUTRAL: Phonology = Phonology {
    onsets: &["b", "d", "k", "l", "m", "n", "p", "r", "s", "t", "v"],
    vowels: &["a", "e", "i", "o", "u"],
    codas: &["", "", "n", "r", "s"],
    suffixes: &[""],
};

fn phonology(language: LanguageCode) -> Phonology {
    match language.as_str() {
        "en" => Phonology {
            onsets: &["b", "c", "d", "f", "g", "h", "l", "m", "n", "p", "r", "s", "t", "w", "st", "tr", "pl", "gr"],
            vowels: &["a", "e", "i", "o", "u", "ea", "oo", "y"],
            codas: &["", "n", "r", "t", "s", "ck", "ng"],
            suffixes: &["ion", "al", "ity", "ment", "ive"],
        },
        "fr" => Phonology {
            onsets: &["b", "c", "d", "f", "g", "j", "l", "m", "n", "p", "r", "s", "t", "v", "ch", "gr", "pr"],
            vowels: &["a", "e", "i", "o", "u", "é", "è", "ou", "ai", "eau"],
            codas: &["", "n", "r", "s", "x", "t"],
            suffixes: &["ion", "el", "ité", "ement", "if"],
        },
        "de" => Phonology {
            onsets: &["b", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "w", "z", "sch", "kr", "st"],
            vowels: &["a", "e", "i", "o", "u", "ä", "ö", "ü", "ei", "au"],
            codas: &["", "n", "r", "t", "ch", "ng", "tz"],
            suffixes: &["ion", "ell", "ität", "ung", "iv"],
        },
        _ => Phonology {
            onsets: &["b", "d", "g", "k", "l", "m", "n", "r", "s", "t", "z"],
            vowels: &["a", "e", "i", "o", "u", "y"],
            codas: &["", "n", "l", "k"],
            suffixes: &["an", "or", "ik", "es", "um"],
        },
    }
}

fn pseudo_word(ph: &Phonology, rng: &mut ChaCha8Rng, syllables: usize) -> String {
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ph.onsets.choose(rng).unwrap());
        w.push_str(ph.vowels.choose(rng).unwrap());
    }
    w.push_str(ph.codas.choose(rng).unwrap());
    w
}

fn fresh_word(ph: &Phonology, rng: &mut ChaCha8Rng, used: &mut HashSet<String>) -> String {
    loop {
        let syl = rng.random_range(2..=3);
        let w = pseudo_word(ph, rng, syl);
        if used.insert(w.clone()) {
            return w;
        }
    }
}

/// Surface forms of every concept and filler word, per language.
#[derive(Clone, Debug)]
pub struct Lexicon {
    pub languages: Vec<LanguageCode>,
    /// `concepts[c][language]`.
    pub concepts: Vec<BTreeMap<LanguageCode, String>>,
    /// Filler words by descending frequency rank.
    pub fillers: BTreeMap<LanguageCode, Vec<String>>,
}

impl Lexicon {
    fn generate(cfg: &SynthConfig, n_concepts: usize) -> Lexicon {
        let mut rng = seeded_rng(cfg.seed, STREAM_LEXICON);
        let mut used: BTreeMap<LanguageCode, HashSet<String>> =
            cfg.languages.iter().map(|&l| (l, HashSet::new())).collect();
        let phon: BTreeMap<LanguageCode, Phonology> =
            cfg.languages.iter().map(|&l| (l, phonology(l))).collect();
        let mut concepts = Vec::with_capacity(n_concepts);
        for _ in 0..n_concepts {
            let r: f64 = rng.random();
            let mut forms = BTreeMap::new();
            if r < cfg.identical_share {
                let w = loop {
                    let w = pseudo_word(&NEUTRAL, &mut rng, 3);
                    if used.values().all(|u| !u.contains(&w)) {
                        break w;
                    }
                };
                for &l in &cfg.languages {
                    used.get_mut(&l).unwrap().insert(w.clone());
                    forms.insert(l, w.clone());
                }
            } else if r < cfg.identical_share + cfg.cognate_share {
                let stem = pseudo_word(&NEUTRAL, &mut rng, 2);
                let slot = rng.random_range(0..5);
                for &l in &cfg.languages {
                    let sfx = phon[&l].suffixes;
                    let mut w = format!("{stem}{}", sfx[slot % sfx.len()]);
                    while !used.get_mut(&l).unwrap().insert(w.clone()) {
                        w.push_str(phon[&l].vowels.choose(&mut rng).unwrap());
                    }
                    forms.insert(l, w);
                }
            } else {
                for &l in &cfg.languages {
                    let w = fresh_word(&phon[&l], &mut rng, used.get_mut(&l).unwrap());
                    forms.insert(l, w);
                }
            }
            concepts.push(forms);
        }
        let fillers = cfg
            .languages
            .iter()
            .map(|&l| {
                let words = (0..cfg.filler_words)
                    .map(|_| {
                        let syl = rng.random_range(1..=2);
                        loop {
                            let w = pseudo_word(&phon[&l], &mut rng, syl);
                            if used.get_mut(&l).unwrap().insert(w.clone()) {
                                break w;
                            }
                        }
                    })
                    .collect();
                (l, words)
            })
            .collect();
        Lexicon {
            languages: cfg.languages.clone(),
            concepts,
            fillers,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Word {
    Concept(usize),
    Filler(usize),
}

/// Zipf weights `1/rank^s` for ranks `1..=n`.
pub fn zipf_weights(n: usize, exponent: f64) -> Vec<f64> {
    (1..=n).map(|r| 1.0 / (r as f64).powf(exponent)).collect()
}

/// A generated parallel corpus, one [`Corpus`] per language.
#[derive(Clone, Debug)]
pub struct SynthCorpus {
    pub config: SynthConfig,
    pub lexicon: Lexicon,
    pub label_ids: Vec<String>,
    /// Concept indices owned by each label.
    pub clusters: Vec<Vec<usize>>,
    pub corpora: Vec<Corpus>,
}

pub fn label_id(i: usize) -> String {
    format!("{}", 100_000 + i)
}

struct Sampler<'a> {
    cfg: &'a SynthConfig,
    clusters: &'a [Vec<usize>],
    n_concepts: usize,
    filler: WeightedIndex<f64>,
}

impl Sampler<'_> {
    fn words(&self, topics: &[usize], rng: &mut ChaCha8Rng) -> Vec<Word> {
        (0..self.cfg.words_per_doc)
            .map(|_| {
                if rng.random::<f64>() >= self.cfg.content_rate {
                    Word::Filler(self.filler.sample(rng))
                } else if !topics.is_empty() && rng.random::<f64>() < self.cfg.topic_rate {
                    let t = topics[rng.random_range(0..topics.len())];
                    Word::Concept(*self.clusters[t].choose(rng).unwrap())
                } else {
                    Word::Concept(rng.random_range(0..self.n_concepts))
                }
            })
            .collect()
    }
}

fn render(words: &[Word], lex: &Lexicon, language: LanguageCode) -> String {
    let fill = &lex.fillers[&language];
    let mut s = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        match *w {
            Word::Concept(c) => s.push_str(&lex.concepts[c][&language]),
            Word::Filler(f) => s.push_str(&fill[f]),
        }
    }
    s
}

pub fn generate_parallel(cfg: &SynthConfig) -> Result<SynthCorpus, CorpusError> {
    if cfg.languages.is_empty() || cfg.labels == 0 || cfg.concepts_per_label == 0 || cfg.filler_words == 0 {
        return Err(CorpusError::Validation {
            celex_id: String::new(),
            message: "synthetic corpus needs languages, labels, concepts and filler words".into(),
        });
    }
    let n_concepts = cfg.labels * cfg.concepts_per_label + cfg.background_concepts;
    let lexicon = Lexicon::generate(cfg, n_concepts);
    let mut rng = seeded_rng(cfg.seed, STREAM_DOCS);
    let mut concept_order: Vec<usize> = (0..cfg.labels * cfg.concepts_per_label).collect();
    concept_order.shuffle(&mut rng);
    let clusters: Vec<Vec<usize>> = concept_order
        .chunks(cfg.concepts_per_label)
        .map(<[usize]>::to_vec)
        .collect();
    let label_ids: Vec<String> = (0..cfg.labels).map(label_id).collect();
    let sampler = Sampler {
        cfg,
        clusters: &clusters,
        n_concepts,
        filler: WeightedIndex::new(zipf_weights(cfg.filler_words, 1.0)).unwrap(),
    };
    let label_dist = WeightedIndex::new(zipf_weights(cfg.labels, cfg.zipf_exponent)).unwrap();

    let mut split_rng = seeded_rng(cfg.seed, STREAM_SPLITS);
    let n = cfg.labeled_docs;
    let n_train = (cfg.train_fraction * n as f64).round() as usize;
    let n_dev = (cfg.dev_fraction * n as f64).round() as usize;
    let mut splits: Vec<Split> = (0..n)
        .map(|i| {
            if i < n_train {
                Split::Train
            } else if i < n_train + n_dev {
                Split::Dev
            } else {
                Split::Test
            }
        })
        .collect();
    splits.shuffle(&mut split_rng);

    let mut per_lang: BTreeMap<LanguageCode, Vec<Document>> = BTreeMap::new();
    for (i, &split) in splits.iter().enumerate() {
        let k = rng.random_range(1..=cfg.max_labels_per_doc.clamp(1, cfg.labels));
        let mut topics = BTreeSet::new();
        while topics.len() < k {
            topics.insert(label_dist.sample(&mut rng));
        }
        let topics: Vec<usize> = topics.into_iter().collect();
        let title = sampler.words(&topics, &mut rng)[..4.min(cfg.words_per_doc)].to_vec();
        let body = sampler.words(&topics, &mut rng);
        let labels: BTreeSet<String> = topics.iter().map(|&t| label_ids[t].clone()).collect();
        for &l in &cfg.languages {
            per_lang.entry(l).or_default().push(Document {
                celex_id: format!("3{:04}R{:04}", 2000 + i / 1000, i % 1000),
                language: l,
                title: render(&title, &lexicon, l),
                body: render(&body, &lexicon, l),
                labels: labels.clone(),
                split,
            });
        }
    }
    for i in 0..cfg.unlabeled_docs {
        let k = rng.random_range(1..=cfg.max_labels_per_doc.clamp(1, cfg.labels));
        let topics: Vec<usize> = (0..k).map(|_| label_dist.sample(&mut rng)).collect();
        let title = sampler.words(&topics, &mut rng)[..4.min(cfg.words_per_doc)].to_vec();
        let body = sampler.words(&topics, &mut rng);
        for &l in &cfg.languages {
            per_lang.entry(l).or_default().push(Document {
                celex_id: format!("5{:04}PC{:04}", 2000 + i / 1000, i % 1000),
                language: l,
                title: render(&title, &lexicon, l),
                body: render(&body, &lexicon, l),
                labels: BTreeSet::new(),
                split: Split::NoSplit,
            });
        }
    }
    let corpora = cfg
        .languages
        .iter()
        .map(|l| Corpus::new(per_lang.remove(l).unwrap_or_default()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SynthCorpus {
        config: cfg.clone(),
        lexicon,
        label_ids,
        clusters,
        corpora,
    })
}

impl SynthCorpus {
    pub fn corpus(&self, language: LanguageCode) -> Option<&Corpus> {
        self.corpora.iter().find(|c| c.languages().contains(&language))
    }

    /// Unlabeled, non-parallel text from the same lexicon with topical structure but
    /// uniform topic popularity; a stand-in for general-domain pretraining text.
    pub fn general_text(&self, language: LanguageCode, n_docs: usize, seed: u64) -> Vec<String> {
        let cfg = &self.config;
        let mut rng = seeded_rng(seed, STREAM_GENERAL + u64::from(language.as_str().as_bytes()[0]));
        let sampler = Sampler {
            cfg,
            clusters: &self.clusters,
            n_concepts: self.lexicon.concepts.len(),
            filler: WeightedIndex::new(zipf_weights(cfg.filler_words, 1.0)).unwrap(),
        };
        (0..n_docs)
            .map(|_| {
                let k = rng.random_range(1..=2);
                let topics: Vec<usize> = (0..k).map(|_| rng.random_range(0..cfg.labels)).collect();
                render(&sampler.words(&topics, &mut rng), &self.lexicon, language)
            })
            .collect()
    }

    /// A thesaurus with one micro-thesaurus per ten labels under a single domain.
    pub fn thesaurus_text(&self) -> String {
        let mut s = String::from("# synthetic thesaurus\n");
        writeln!(s, "dom01\ttype\tDomain").unwrap();
        writeln!(s, "dom01\tprefLabel\tsynthetic@en").unwrap();
        let n_mt = self.label_ids.len().div_ceil(10);
        for m in 0..n_mt {
            writeln!(s, "mt{:03}\ttype\tMicroThesaurus", m + 1).unwrap();
            writeln!(s, "mt{:03}\tdomain\tdom01", m + 1).unwrap();
        }
        for (i, id) in self.label_ids.iter().enumerate() {
            writeln!(s, "{id}\ttype\tDescriptor").unwrap();
            writeln!(s, "{id}\tinScheme\tmt{:03}", i / 10 + 1).unwrap();
            for (&l, form) in &self.lexicon.concepts[self.clusters[i][0]] {
                writeln!(s, "{id}\tprefLabel\t{form}@{l}").unwrap();
            }
        }
        s
    }
}

/// A thesaurus with the given numbers of domains, micro-thesauri and descriptors. Each
/// descriptor after the first in its micro-thesaurus has a `broader` link to an earlier
/// one with probability 0.7, so the hierarchy is acyclic. `with_cycle` adds one
/// back-edge that closes a cycle.
pub fn eurovoc_fixture(domains: usize, micro_thesauri: usize, descriptors: usize, with_cycle: bool, seed: u64) -> String {
    let mut rng = seeded_rng(seed, 7);
    let mut s = String::new();
    let langs = ["en", "fr", "de"];
    for d in 1..=domains {
        writeln!(s, "dom{d:02}\ttype\tDomain").unwrap();
        writeln!(s, "dom{d:02}\tprefLabel\tdomain {d}@en").unwrap();
    }
    for m in 1..=micro_thesauri {
        writeln!(s, "mt{m:04}\ttype\tMicroThesaurus").unwrap();
        writeln!(s, "mt{m:04}\tdomain\tdom{:02}", (m - 1) % domains.max(1) + 1).unwrap();
        writeln!(s, "mt{m:04}\tprefLabel\tmicro-thesaurus {m}@en").unwrap();
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); micro_thesauri.max(1)];
    let mut first_edge = None;
    for i in 0..descriptors {
        let id = 1000 + i;
        let m = i % micro_thesauri.max(1);
        writeln!(s, "{id}\ttype\tDescriptor").unwrap();
        writeln!(s, "{id}\tinScheme\tmt{:04}", m + 1).unwrap();
        for l in langs {
            writeln!(s, "{id}\tprefLabel\tdescriptor {id} {l}@{l}").unwrap();
        }
        if !members[m].is_empty() && rng.random_bool(0.7) {
            let parent = *members[m].choose(&mut rng).unwrap();
            writeln!(s, "{id}\tbroader\t{parent}").unwrap();
            first_edge.get_or_insert((id, parent));
        }
        if i > 0 && rng.random_bool(0.1) {
            writeln!(s, "{id}\trelated\t{}", 1000 + rng.random_range(0..i)).unwrap();
        }
        members[m].push(id);
    }
    if with_cycle {
        if let Some((child, parent)) = first_edge {
            writeln!(s, "{parent}\tbroader\t{child}").unwrap();
        }
    }
    s
}

/// Split counts of the three-language JRC-Acquis subset: train, dev, test, no split.
pub const JRC_ACQUIS_SPLITS: [(LanguageCode, [usize; 4]); 3] = [
    (LanguageCode::EN, [16454, 1960, 1968, 3163]),
    (LanguageCode::FR, [16434, 1959, 1967, 3267]),
    (LanguageCode::DE, [16363, 1957, 1965, 3256]),
];

/// Split counts of the three-language EURLEX57K extension.
pub const EURLEX57K_SPLITS: [(LanguageCode, [usize; 4]); 3] = [
    (LanguageCode::EN, [44428, 5929, 5921, 24004]),
    (LanguageCode::FR, [44427, 5929, 5921, 24452]),
    (LanguageCode::DE, [43749, 5842, 5820, 23942]),
];

pub fn split_counts(c: [usize; 4]) -> SplitCounts {
    SplitCounts {
        train: c[0],
        dev: c[1],
        test: c[2],
        none: c[3],
    }
}

/// JSONL files whose ingestion reproduces `table`. The `anchor` file states splits; the
/// others carry labels but no split, and reuse the anchor's CELEX IDs (a prefix of each
/// anchor split), so their splits must come from the anchor. Every language needs at most
/// as many labeled documents per split as the anchor.
pub fn split_table_fixture(
    table: &[(LanguageCode, [usize; 4])],
    anchor: LanguageCode,
) -> Result<BTreeMap<LanguageCode, String>, CorpusError> {
    let anchor_counts = table
        .iter()
        .find(|(l, _)| *l == anchor)
        .map(|(_, c)| *c)
        .ok_or(CorpusError::MissingAnchor(anchor))?;
    let splits = [Split::Train, Split::Dev, Split::Test];
    let mut out = BTreeMap::new();
    for &(language, counts) in table {
        let mut s = String::new();
        for (si, split) in splits.iter().enumerate() {
            if counts[si] > anchor_counts[si] {
                return Err(CorpusError::Validation {
                    celex_id: String::new(),
                    message: format!(
                        "{language} has {} {split} documents, more than the anchor's {}",
                        counts[si], anchor_counts[si]
                    ),
                });
            }
            for i in 0..counts[si] {
                let mut rec = json!({
                    "celex_id": format!("3{si}{i:07}"),
                    "language": language.as_str(),
                    "title": format!("{split} document {i}"),
                    "body": "",
                    "labels": [label_id(i % 50)],
                });
                if language == anchor {
                    rec["split"] = json!(split.as_str());
                }
                writeln!(s, "{rec}").unwrap();
            }
        }
        for i in 0..counts[3] {
            let rec = json!({
                "celex_id": format!("9{}{i:07}", language.as_str()),
                "language": language.as_str(),
                "title": format!("unlabeled document {i}"),
                "body": "",
                "labels": [],
            });
            writeln!(s, "{rec}").unwrap();
        }
        out.insert(language, s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{label_stats, Split};
    use crate::eurovoc::parse_thesaurus_str;

    fn small() -> SynthConfig {
        SynthConfig {
            labeled_docs: 60,
            unlabeled_docs: 10,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn parallel_documents_share_ids_labels_and_splits() {
        let s = generate_parallel(&small()).unwrap();
        assert_eq!(s.corpora.len(), 3);
        let en = s.corpus(LanguageCode::EN).unwrap().documents();
        let fr = s.corpus(LanguageCode::FR).unwrap().documents();
        assert_eq!(en.len(), 70);
        for (a, b) in en.iter().zip(fr) {
            assert_eq!(a.celex_id, b.celex_id);
            assert_eq!(a.labels, b.labels);
            assert_eq!(a.split, b.split);
            assert_ne!(a.body, b.body);
        }
        let c = s.corpus(LanguageCode::DE).unwrap().counts_for(LanguageCode::DE);
        assert_eq!((c.train, c.dev, c.test, c.none), (42, 9, 9, 10));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_parallel(&small()).unwrap();
        let b = generate_parallel(&small()).unwrap();
        assert_eq!(a.corpora[1].documents(), b.corpora[1].documents());
        let c = generate_parallel(&SynthConfig { seed: 9, ..small() }).unwrap();
        assert_ne!(a.corpora[1].documents(), c.corpora[1].documents());
        assert_eq!(a.general_text(LanguageCode::FR, 5, 1), b.general_text(LanguageCode::FR, 5, 1));
    }

    #[test]
    fn concept_forms_mix_shared_and_distinct() {
        let s = generate_parallel(&small()).unwrap();
        let same = s
            .lexicon
            .concepts
            .iter()
            .filter(|f| f[&LanguageCode::EN] == f[&LanguageCode::DE])
            .count();
        let n = s.lexicon.concepts.len();
        assert!(same > n / 6 && same < n / 2, "{same} of {n}");
    }

    #[test]
    fn labels_follow_power_law() {
        let cfg = SynthConfig {
            labeled_docs: 1000,
            unlabeled_docs: 0,
            labels: 50,
            max_labels_per_doc: 1,
            train_fraction: 1.0,
            dev_fraction: 0.0,
            languages: vec![LanguageCode::EN],
            ..SynthConfig::default()
        };
        let s = generate_parallel(&cfg).unwrap();
        let stats = label_stats(&s.corpora[0], Split::Train);
        let ratio = stats.rank_frequency[0] as f64 / stats.rank_frequency[9] as f64;
        assert!((5.0..=15.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn thesaurus_fixtures_parse() {
        let s = generate_parallel(&small()).unwrap();
        let g = parse_thesaurus_str(&s.thesaurus_text()).unwrap();
        assert_eq!(g.descriptors.len(), 20);
        let g = parse_thesaurus_str(&eurovoc_fixture(4, 9, 200, false, 1)).unwrap();
        assert_eq!((g.domains.len(), g.micro_thesauri.len(), g.descriptors.len()), (4, 9, 200));
        assert!(parse_thesaurus_str(&eurovoc_fixture(4, 9, 200, true, 1)).is_err());
    }

    #[test]
    fn split_fixture_rejects_oversized_languages() {
        let table = [(LanguageCode::EN, [2, 1, 1, 0]), (LanguageCode::FR, [3, 1, 1, 0])];
        assert!(split_table_fixture(&table, LanguageCode::EN).is_err());
        assert!(split_table_fixture(&table, LanguageCode::DE).is_err());
    }
}
