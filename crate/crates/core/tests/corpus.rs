use std::collections::{BTreeMap, BTreeSet};
use std::fs;

use lmtc::corpus::{
    assign_parallel_splits, ingest, lmft_pool, Corpus, Document, Format, LanguageCode, LanguageRegistry, Split,
    SplitCounts, SplitPolicy,
};
use lmtc::synth::{split_counts, split_table_fixture, EURLEX57K_SPLITS, JRC_ACQUIS_SPLITS};
use proptest::prelude::*;

const EN: LanguageCode = LanguageCode::EN;
const FR: LanguageCode = LanguageCode::FR;
const DE: LanguageCode = LanguageCode::DE;

/// Writes the fixture files, ingests them and copies the anchor's splits.
fn ingest_table(table: &[(LanguageCode, [usize; 4])]) -> Vec<Corpus> {
    let dir = tempfile::tempdir().unwrap();
    let files = split_table_fixture(table, EN).unwrap();
    let registry = LanguageRegistry::new([EN, FR, DE]);
    let corpora: Vec<Corpus> = files
        .iter()
        .map(|(l, text)| {
            let p = dir.path().join(format!("{l}.jsonl"));
            fs::write(&p, text).unwrap();
            ingest(&p, *l, Format::Jsonl, &registry, SplitPolicy::FromAnchor).unwrap()
        })
        .collect();
    assign_parallel_splits(&corpora, EN).unwrap()
}

fn rows(corpora: &[Corpus]) -> BTreeMap<LanguageCode, String> {
    corpora
        .iter()
        .flat_map(|c| c.languages().iter().map(move |&l| (l, c.counts_for(l).table_row(l))))
        .collect()
}

#[test]
fn jrc_acquis_split_table() {
    let corpora = ingest_table(&JRC_ACQUIS_SPLITS);
    let r = rows(&corpora);
    assert_eq!(r[&EN], "EN 16454 1960 1968 3163 23545");
    assert_eq!(r[&FR], "FR 16434 1959 1967 3267 23627");
    assert_eq!(r[&DE], "DE 16363 1957 1965 3256 23541");
}

#[test]
fn eurlex57k_split_table() {
    let corpora = ingest_table(&EURLEX57K_SPLITS);
    let r = rows(&corpora);
    assert_eq!(r[&EN], "EN 44428 5929 5921 24004 80282");
    assert_eq!(r[&FR], "FR 44427 5929 5921 24452 80729");
    assert_eq!(r[&DE], "DE 43749 5842 5820 23942 79353");
}

#[test]
fn lmft_pool_is_train_plus_unsplit() {
    let corpora = ingest_table(&JRC_ACQUIS_SPLITS);
    let pool = lmft_pool(&corpora, &[EN].into_iter().collect());
    assert_eq!(pool.len(), 16454 + 3163);
    let held_out: BTreeSet<&str> = corpora
        .iter()
        .flat_map(|c| c.documents())
        .filter(|d| matches!(d.split, Split::Dev | Split::Test))
        .map(|d| d.celex_id.as_str())
        .collect();
    assert!(pool.iter().all(|d| !held_out.contains(d.celex_id.as_str())));
}

#[test]
fn split_counts_helper_matches_table() {
    let SplitCounts { train, dev, test, none } = split_counts(JRC_ACQUIS_SPLITS[0].1);
    assert_eq!((train, dev, test, none), (16454, 1960, 1968, 3163));
}

fn doc(id: usize, language: LanguageCode, split: Split, labeled: bool) -> Document {
    Document {
        celex_id: format!("3{id:07}"),
        language,
        title: String::new(),
        body: format!("document {id}"),
        labels: if labeled { ["100001".to_string()].into() } else { BTreeSet::new() },
        split,
    }
}

proptest! {
    /// Every parallel document takes the anchor's split; the rest are `none`.
    #[test]
    fn parallel_documents_follow_the_anchor(
        anchor_splits in prop::collection::vec(0u8..4, 1..60),
        present in prop::collection::vec(any::<bool>(), 60),
        extra in 0usize..10,
    ) {
        let to_split = |s: u8| [Split::Train, Split::Dev, Split::Test, Split::NoSplit][s as usize];
        let en: Vec<Document> = anchor_splits
            .iter()
            .enumerate()
            .map(|(i, &s)| doc(i, EN, to_split(s), to_split(s) != Split::NoSplit))
            .collect();
        let mut fr: Vec<Document> = (0..anchor_splits.len())
            .filter(|&i| present[i])
            .map(|i| doc(i, FR, Split::NoSplit, true))
            .collect();
        fr.extend((0..extra).map(|i| doc(1000 + i, FR, Split::NoSplit, false)));
        let corpora = vec![Corpus::new(en).unwrap(), Corpus::new(fr).unwrap()];
        let out = assign_parallel_splits(&corpora, EN).unwrap();
        let anchor: BTreeMap<&str, Split> = out[0].documents().iter().map(|d| (d.celex_id.as_str(), d.split)).collect();
        for d in out[1].documents() {
            let expected = anchor.get(d.celex_id.as_str()).copied().unwrap_or(Split::NoSplit);
            prop_assert_eq!(d.split, expected);
        }
        prop_assert_eq!(out[1].len(), present[..anchor_splits.len()].iter().filter(|&&p| p).count() + extra);
    }
}
