//! EuroVoc descriptor graph and the classifier label index.
//!
//! The thesaurus is read from a simplified N-Triples dialect: one triple per line,
//! `subject<TAB>predicate<TAB>object`, `#` comments and blank lines ignored. Literal
//! objects carry a language tag as `text@xx`.
//!
//! | predicate                          | subject         | object                    |
//! |------------------------------------|-----------------|---------------------------|
//! | `type`                             | any ID          | `Descriptor`, `MicroThesaurus`, `Domain` |
//! | `prefLabel`                        | any ID          | literal                   |
//! | `altLabel` (`usedFor`)             | descriptor      | literal                   |
//! | `broader`                          | descriptor      | descriptor                |
//! | `related`                          | descriptor      | descriptor                |
//! | `inScheme` (`microThesaurus`)      | descriptor      | micro-thesaurus           |
//! | `domain`                           | micro-thesaurus | domain                    |
//! | `replacedBy` (`usedInstead`)       | descriptor      | descriptor                |
//!
//! `skos:`, `rdf:` and `eurovoc:` prefixes are stripped. Other predicates are counted
//! and ignored.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::LanguageCode;

#[derive(Debug, Error)]
pub enum ThesaurusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("dangling references:\n{}", .triples.join("\n"))]
    Dangling { triples: Vec<String> },
    #[error("broader cycle: {}", .cycle.join(" -> "))]
    BroaderCycle { cycle: Vec<String> },
    #[error("invalid thesaurus: {0}")]
    Invalid(String),
    #[error("descriptor {0} is not in the thesaurus")]
    UnknownDescriptor(String),
    #[error("replacement chain starting at {0} loops")]
    ReplacementCycle(String),
    #[error("label index: {0}")]
    BadIndex(String),
}

pub type Result<T> = std::result::Result<T, ThesaurusError>;

pub type Labels = BTreeMap<LanguageCode, String>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Descriptor {
    pub id: String,
    pub pref_label: Labels,
    pub micro_thesauri: BTreeSet<String>,
    pub broader: BTreeSet<String>,
    pub related: BTreeSet<String>,
    pub used_for: BTreeSet<String>,
    pub replaced_by: Option<String>,
}

impl Descriptor {
    pub fn is_active(&self) -> bool {
        self.replaced_by.is_none()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MicroThesaurus {
    pub label: Labels,
    pub domain: String,
}

/// Validated EuroVoc graph. Immutable after [`parse_thesaurus`].
#[derive(Clone, Debug, Default)]
pub struct DescriptorGraph {
    pub descriptors: BTreeMap<String, Descriptor>,
    pub micro_thesauri: BTreeMap<String, MicroThesaurus>,
    pub domains: BTreeMap<String, Labels>,
    /// Triples whose predicate is outside the supported vocabulary.
    pub ignored_triples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Descriptor,
    MicroThesaurus,
    Domain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Predicate {
    Type,
    PrefLabel,
    AltLabel,
    Broader,
    Related,
    InScheme,
    Domain,
    ReplacedBy,
}

fn predicate(raw: &str) -> Option<Predicate> {
    let name = raw
        .trim_start_matches('<')
        .trim_end_matches('>')
        .rsplit(['#', '/', ':'])
        .next()
        .unwrap_or(raw);
    Some(match name {
        "type" => Predicate::Type,
        "prefLabel" => Predicate::PrefLabel,
        "altLabel" | "usedFor" => Predicate::AltLabel,
        "broader" => Predicate::Broader,
        "related" => Predicate::Related,
        "inScheme" | "microThesaurus" => Predicate::InScheme,
        "domain" => Predicate::Domain,
        "replacedBy" | "usedInstead" => Predicate::ReplacedBy,
        _ => return None,
    })
}

fn literal(object: &str, line: usize) -> Result<(LanguageCode, String)> {
    let (text, tag) = object.rsplit_once('@').ok_or_else(|| ThesaurusError::Syntax {
        line,
        message: format!("literal `{object}` lacks a @language tag"),
    })?;
    let lang = tag.parse::<LanguageCode>().map_err(|_| ThesaurusError::Syntax {
        line,
        message: format!("bad language tag `{tag}`"),
    })?;
    Ok((lang, text.trim_matches('"').to_string()))
}

struct Triple<'a> {
    line: usize,
    subject: &'a str,
    predicate: Predicate,
    object: &'a str,
}

impl Triple<'_> {
    fn describe(&self) -> String {
        format!(
            "line {}: {} {:?} {}",
            self.line, self.subject, self.predicate, self.object
        )
    }
}

pub fn parse_thesaurus(path: &Path) -> Result<DescriptorGraph> {
    let text = fs::read_to_string(path).map_err(|source| ThesaurusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_thesaurus_str(&text)
}

pub fn parse_thesaurus_str(text: &str) -> Result<DescriptorGraph> {
    let mut triples = Vec::new();
    let mut ignored = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = raw.split('\t').collect();
        if parts.len() != 3 {
            return Err(ThesaurusError::Syntax {
                line,
                message: format!("expected 3 tab-separated terms, found {}", parts.len()),
            });
        }
        match predicate(parts[1]) {
            Some(p) => triples.push(Triple {
                line,
                subject: parts[0],
                predicate: p,
                object: parts[2],
            }),
            None => ignored += 1,
        }
    }
    if ignored > 0 {
        log::warn!("ignored {ignored} triples with unsupported predicates");
    }

    let mut kinds: HashMap<&str, Kind> = HashMap::new();
    for t in triples.iter().filter(|t| t.predicate == Predicate::Type) {
        let kind = match t.object.rsplit([':', '#', '/']).next().unwrap_or(t.object) {
            "Descriptor" | "Concept" => Kind::Descriptor,
            "MicroThesaurus" | "ConceptScheme" => Kind::MicroThesaurus,
            "Domain" => Kind::Domain,
            other => {
                return Err(ThesaurusError::Syntax {
                    line: t.line,
                    message: format!("unknown type `{other}`"),
                })
            }
        };
        if let Some(prev) = kinds.insert(t.subject, kind) {
            if prev != kind {
                return Err(ThesaurusError::Syntax {
                    line: t.line,
                    message: format!("{} typed as both {prev:?} and {kind:?}", t.subject),
                });
            }
        }
    }

    let mut graph = DescriptorGraph {
        ignored_triples: ignored,
        ..Default::default()
    };
    for (&id, &kind) in &kinds {
        match kind {
            Kind::Descriptor => {
                graph.descriptors.insert(
                    id.to_string(),
                    Descriptor {
                        id: id.to_string(),
                        ..Default::default()
                    },
                );
            }
            Kind::MicroThesaurus => {
                graph.micro_thesauri.insert(id.to_string(), MicroThesaurus::default());
            }
            Kind::Domain => {
                graph.domains.insert(id.to_string(), Labels::new());
            }
        }
    }

    let mut dangling = Vec::new();
    let expect = |id: &str, want: Kind| kinds.get(id) == Some(&want);
    for t in &triples {
        let subject_kind = kinds.get(t.subject).copied();
        match t.predicate {
            Predicate::Type => {}
            Predicate::PrefLabel => {
                let (lang, label) = literal(t.object, t.line)?;
                match subject_kind {
                    Some(Kind::Descriptor) => {
                        graph.descriptors.get_mut(t.subject).unwrap().pref_label.insert(lang, label);
                    }
                    Some(Kind::MicroThesaurus) => {
                        graph.micro_thesauri.get_mut(t.subject).unwrap().label.insert(lang, label);
                    }
                    Some(Kind::Domain) => {
                        graph.domains.get_mut(t.subject).unwrap().insert(lang, label);
                    }
                    None => dangling.push(t.describe()),
                }
            }
            Predicate::AltLabel => {
                let (_, label) = literal(t.object, t.line)?;
                match graph.descriptors.get_mut(t.subject) {
                    Some(d) => {
                        d.used_for.insert(label);
                    }
                    None => dangling.push(t.describe()),
                }
            }
            Predicate::Broader | Predicate::Related | Predicate::ReplacedBy => {
                if !expect(t.subject, Kind::Descriptor) || !expect(t.object, Kind::Descriptor) {
                    dangling.push(t.describe());
                    continue;
                }
                let d = graph.descriptors.get_mut(t.subject).unwrap();
                let object = t.object.to_string();
                match t.predicate {
                    Predicate::Broader => {
                        d.broader.insert(object);
                    }
                    Predicate::Related => {
                        d.related.insert(object);
                    }
                    _ => {
                        if d.replaced_by.as_ref().is_some_and(|r| *r != object) {
                            return Err(ThesaurusError::Syntax {
                                line: t.line,
                                message: format!("{} has two replacements", t.subject),
                            });
                        }
                        d.replaced_by = Some(object);
                    }
                }
            }
            Predicate::InScheme => {
                if !expect(t.subject, Kind::Descriptor) || !expect(t.object, Kind::MicroThesaurus) {
                    dangling.push(t.describe());
                    continue;
                }
                graph
                    .descriptors
                    .get_mut(t.subject)
                    .unwrap()
                    .micro_thesauri
                    .insert(t.object.to_string());
            }
            Predicate::Domain => {
                if !expect(t.subject, Kind::MicroThesaurus) || !expect(t.object, Kind::Domain) {
                    dangling.push(t.describe());
                    continue;
                }
                graph.micro_thesauri.get_mut(t.subject).unwrap().domain = t.object.to_string();
            }
        }
    }
    if !dangling.is_empty() {
        return Err(ThesaurusError::Dangling { triples: dangling });
    }
    graph.validate()?;
    Ok(graph)
}

impl DescriptorGraph {
    fn validate(&self) -> Result<()> {
        for (id, mt) in &self.micro_thesauri {
            if mt.domain.is_empty() {
                return Err(ThesaurusError::Invalid(format!(
                    "micro-thesaurus {id} has no domain"
                )));
            }
        }
        for d in self.descriptors.values() {
            if d.is_active() && d.micro_thesauri.is_empty() {
                return Err(ThesaurusError::Invalid(format!(
                    "active descriptor {} belongs to no micro-thesaurus",
                    d.id
                )));
            }
        }
        if let Some(cycle) = self.find_broader_cycle() {
            return Err(ThesaurusError::BroaderCycle { cycle });
        }
        for id in self.descriptors.keys() {
            self.resolve(id)?;
        }
        Ok(())
    }

    /// Iterative three-colour DFS over `broader` edges; returns one cycle if any.
    fn find_broader_cycle(&self) -> Option<Vec<String>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Colour {
            White,
            Grey,
            Black,
        }
        let mut colour: HashMap<&str, Colour> =
            self.descriptors.keys().map(|k| (k.as_str(), Colour::White)).collect();
        for start in self.descriptors.keys() {
            if colour[start.as_str()] != Colour::White {
                continue;
            }
            let mut stack: Vec<(&str, Vec<&str>)> = vec![(
                start.as_str(),
                self.descriptors[start].broader.iter().map(String::as_str).collect(),
            )];
            colour.insert(start.as_str(), Colour::Grey);
            while let Some((node, pending)) = stack.last_mut() {
                match pending.pop() {
                    Some(next) => match colour[next] {
                        Colour::White => {
                            colour.insert(next, Colour::Grey);
                            let children =
                                self.descriptors[next].broader.iter().map(String::as_str).collect();
                            stack.push((next, children));
                        }
                        Colour::Grey => {
                            let from = stack.iter().position(|(n, _)| *n == next).unwrap();
                            let mut cycle: Vec<String> =
                                stack[from..].iter().map(|(n, _)| n.to_string()).collect();
                            cycle.push(next.to_string());
                            return Some(cycle);
                        }
                        Colour::Black => {}
                    },
                    None => {
                        colour.insert(*node, Colour::Black);
                        stack.pop();
                    }
                }
            }
        }
        None
    }

    pub fn contains(&self, id: &str) -> bool {
        self.descriptors.contains_key(id)
    }

    /// Follows `replaced_by` to the active descriptor that stands for `id`.
    pub fn resolve<'a>(&'a self, id: &'a str) -> Result<&'a str> {
        let mut current = id;
        for _ in 0..=self.descriptors.len() {
            let d = self
                .descriptors
                .get(current)
                .ok_or_else(|| ThesaurusError::UnknownDescriptor(current.to_string()))?;
            match &d.replaced_by {
                Some(next) => current = next,
                None => return Ok(current),
            }
        }
        Err(ThesaurusError::ReplacementCycle(id.to_string()))
    }

    /// Length of the longest `broader` path from `id` to a top descriptor.
    pub fn depth(&self, id: &str) -> Result<usize> {
        fn go<'a>(
            g: &'a DescriptorGraph,
            id: &'a str,
            memo: &mut HashMap<&'a str, usize>,
        ) -> usize {
            if let Some(&d) = memo.get(id) {
                return d;
            }
            let d = g.descriptors[id]
                .broader
                .iter()
                .map(|b| 1 + go(g, b, memo))
                .max()
                .unwrap_or(0);
            memo.insert(id, d);
            d
        }
        if !self.contains(id) {
            return Err(ThesaurusError::UnknownDescriptor(id.to_string()));
        }
        Ok(go(self, id, &mut HashMap::new()))
    }

    /// `labels` together with all transitive `broader` ancestors.
    pub fn expand_ancestors(&self, labels: &BTreeSet<String>) -> BTreeSet<String> {
        let mut out = labels.clone();
        let mut frontier: Vec<&str> = labels.iter().map(String::as_str).collect();
        while let Some(id) = frontier.pop() {
            if let Some(d) = self.descriptors.get(id) {
                for b in &d.broader {
                    if out.insert(b.clone()) {
                        frontier.push(b);
                    }
                }
            }
        }
        out
    }

    /// Micro-thesaurus and domain roll-up of a label set.
    pub fn rollup(&self, labels: &BTreeSet<String>) -> (BTreeSet<String>, BTreeSet<String>) {
        let mts: BTreeSet<String> = labels
            .iter()
            .filter_map(|l| self.descriptors.get(l))
            .flat_map(|d| d.micro_thesauri.iter().cloned())
            .collect();
        let domains = mts
            .iter()
            .filter_map(|m| self.micro_thesauri.get(m))
            .map(|m| m.domain.clone())
            .collect();
        (mts, domains)
    }
}

/// Contiguous, lexicographically ordered mapping between descriptor IDs and head outputs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelIndex {
    id_to_index: BTreeMap<String, usize>,
    index_to_id: Vec<String>,
}

impl LabelIndex {
    pub fn from_ids<I, S>(ids: I) -> LabelIndex
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sorted: BTreeSet<String> = ids.into_iter().map(Into::into).collect();
        let index_to_id: Vec<String> = sorted.into_iter().collect();
        let id_to_index = index_to_id
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        LabelIndex {
            id_to_index,
            index_to_id,
        }
    }

    /// Every active descriptor in the thesaurus.
    pub fn full(graph: &DescriptorGraph) -> LabelIndex {
        LabelIndex::from_ids(
            graph
                .descriptors
                .values()
                .filter(|d| d.is_active())
                .map(|d| d.id.clone()),
        )
    }

    pub fn len(&self) -> usize {
        self.index_to_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_to_id.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.id_to_index.get(id).copied()
    }

    pub fn id_of(&self, index: usize) -> Option<&str> {
        self.index_to_id.get(index).map(String::as_str)
    }

    pub fn ids(&self) -> &[String] {
        &self.index_to_id
    }

    /// Header line with the label count, then `descriptor_id<TAB>index` per label.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.len());
        for (i, id) in self.index_to_id.iter().enumerate() {
            writeln!(out, "{id}\t{i}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<LabelIndex> {
        let bad = |m: String| ThesaurusError::BadIndex(m);
        let mut lines = text.lines();
        let count: usize = lines
            .next()
            .ok_or_else(|| bad("empty file".into()))?
            .trim()
            .parse()
            .map_err(|e| bad(format!("header: {e}")))?;
        let mut ids = Vec::with_capacity(count);
        for (i, line) in lines.filter(|l| !l.is_empty()).enumerate() {
            let (id, idx) = line
                .split_once('\t')
                .ok_or_else(|| bad(format!("line {}: expected id<TAB>index", i + 2)))?;
            let idx: usize = idx.parse().map_err(|e| bad(format!("line {}: {e}", i + 2)))?;
            if idx != i {
                return Err(bad(format!("line {}: index {idx} out of order", i + 2)));
            }
            ids.push(id.to_string());
        }
        if ids.len() != count {
            return Err(bad(format!("header says {count} labels, found {}", ids.len())));
        }
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("ids not in strictly ascending order".into()));
        }
        Ok(LabelIndex::from_ids(ids))
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, self.to_text())
    }

    pub fn load(path: &Path) -> Result<LabelIndex> {
        let text = fs::read_to_string(path).map_err(|source| ThesaurusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        LabelIndex::from_text(&text)
    }
}

/// Index over the observed descriptors, with replaced descriptors mapped to their
/// replacements first.
pub fn build_label_index(graph: &DescriptorGraph, observed: &BTreeSet<String>) -> Result<LabelIndex> {
    let mut resolved = BTreeSet::new();
    for id in observed {
        resolved.insert(graph.resolve(id)?.to_string());
    }
    Ok(LabelIndex::from_ids(resolved))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> String {
        [
            "dom\ttype\tDomain",
            "mt\ttype\tMicroThesaurus",
            "mt\tdomain\tdom",
            "A\ttype\tDescriptor",
            "B\ttype\tDescriptor",
            "C\ttype\tDescriptor",
            "A\tinScheme\tmt",
            "B\tinScheme\tmt",
            "C\tinScheme\tmt",
            "A\tbroader\tB",
            "B\tbroader\tC",
            "A\tprefLabel\timport@en",
            "A\tprefLabel\timportation@fr",
            "A\taltLabel\tinflow@en",
            "A\tskos:notation\t123",
        ]
        .join("\n")
    }

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_chain() {
        let g = parse_thesaurus_str(&chain()).unwrap();
        assert_eq!(g.descriptors.len(), 3);
        assert_eq!(g.micro_thesauri.len(), 1);
        assert_eq!(g.ignored_triples, 1);
        assert_eq!(g.depth("A").unwrap(), 2);
        assert_eq!(g.depth("C").unwrap(), 0);
        let a = &g.descriptors["A"];
        assert_eq!(a.pref_label[&LanguageCode::FR], "importation");
        assert!(a.used_for.contains("inflow"));
    }

    #[test]
    fn two_cycle_rejected() {
        let text = chain() + "\nB\tbroader\tA";
        let err = parse_thesaurus_str(&text).unwrap_err();
        match err {
            ThesaurusError::BroaderCycle { cycle } => {
                assert!(cycle.len() >= 3 && cycle.first() == cycle.last(), "{cycle:?}");
            }
            other => panic!("expected cycle, got {other}"),
        }
    }

    #[test]
    fn dangling_edges_listed() {
        let text = chain() + "\nA\trelated\tZ\nY\tbroader\tA";
        match parse_thesaurus_str(&text).unwrap_err() {
            ThesaurusError::Dangling { triples } => assert_eq!(triples.len(), 2),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn descriptor_without_micro_thesaurus_rejected() {
        let text = chain() + "\nD\ttype\tDescriptor";
        assert!(matches!(parse_thesaurus_str(&text), Err(ThesaurusError::Invalid(_))));
    }

    #[test]
    fn syntax_errors_name_line() {
        let err = parse_thesaurus_str("A\ttype").unwrap_err();
        assert!(matches!(err, ThesaurusError::Syntax { line: 1, .. }));
        let err = parse_thesaurus_str("A\ttype\tDescriptor\nA\tprefLabel\tnolang").unwrap_err();
        assert!(matches!(err, ThesaurusError::Syntax { line: 2, .. }));
    }

    #[test]
    fn expand_ancestors_chain_and_dag() {
        let g = parse_thesaurus_str(&chain()).unwrap();
        assert_eq!(g.expand_ancestors(&set(&["A"])), set(&["A", "B", "C"]));
        assert_eq!(g.expand_ancestors(&set(&["C"])), set(&["C"]));

        let dag = [
            "d\ttype\tDomain",
            "m\ttype\tMicroThesaurus",
            "m\tdomain\td",
            "A1\ttype\tDescriptor",
            "A2\ttype\tDescriptor",
            "X\ttype\tDescriptor",
            "A1\tinScheme\tm",
            "A2\tinScheme\tm",
            "X\tinScheme\tm",
            "A1\tbroader\tX",
            "A2\tbroader\tX",
        ]
        .join("\n");
        let g = parse_thesaurus_str(&dag).unwrap();
        let once = g.expand_ancestors(&set(&["A1", "A2"]));
        assert_eq!(once, set(&["A1", "A2", "X"]));
        assert_eq!(g.expand_ancestors(&once), once);
        let (mts, domains) = g.rollup(&set(&["A1"]));
        assert_eq!((mts, domains), (set(&["m"]), set(&["d"])));
    }

    #[test]
    fn label_index_orders_lexicographically() {
        let g = parse_thesaurus_str(
            &[
                "d\ttype\tDomain",
                "m\ttype\tMicroThesaurus",
                "m\tdomain\td",
                "d1\ttype\tDescriptor",
                "d2\ttype\tDescriptor",
                "d1\tinScheme\tm",
                "d2\tinScheme\tm",
            ]
            .join("\n"),
        )
        .unwrap();
        let idx = build_label_index(&g, &set(&["d2", "d1"])).unwrap();
        assert_eq!(idx.index_of("d1"), Some(0));
        assert_eq!(idx.index_of("d2"), Some(1));
        assert_eq!(idx.len(), 2);

        let empty = build_label_index(&g, &BTreeSet::new()).unwrap();
        assert_eq!(empty.len(), 0);
        assert_eq!(LabelIndex::from_text(&empty.to_text()).unwrap(), empty);

        assert!(matches!(
            build_label_index(&g, &set(&["nope"])),
            Err(ThesaurusError::UnknownDescriptor(id)) if id == "nope"
        ));
    }

    #[test]
    fn replaced_descriptor_indexed_as_replacement() {
        let text = [
            "d\ttype\tDomain",
            "m\ttype\tMicroThesaurus",
            "m\tdomain\td",
            "r\ttype\tDescriptor",
            "s\ttype\tDescriptor",
            "t\ttype\tDescriptor",
            "s\tinScheme\tm",
            "t\tinScheme\tm",
            "r\treplacedBy\ts",
        ]
        .join("\n");
        let g = parse_thesaurus_str(&text).unwrap();
        let idx = build_label_index(&g, &set(&["r", "t"])).unwrap();
        assert_eq!(idx.ids(), &["s".to_string(), "t".to_string()]);
        assert_eq!(LabelIndex::full(&g).len(), 2);
    }

    #[test]
    fn serialized_index_is_deterministic() {
        let a = LabelIndex::from_ids(["b", "a", "c"]);
        let b = LabelIndex::from_ids(["c", "b", "a"]);
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(a.to_text(), "3\na\t0\nb\t1\nc\t2\n");
        assert_eq!(LabelIndex::from_text(&a.to_text()).unwrap(), a);
        assert!(LabelIndex::from_text("2\na\t0\n").is_err());
    }
}
