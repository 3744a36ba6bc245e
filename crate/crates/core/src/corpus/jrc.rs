//! JRC-Acquis TEI documents, one per file.
//!
//! ```text
//! <TEI.2 id="jrc31958Q1101-en" n="31958Q1101" lang="en">
//!   <teiHeader> ... <textClass>
//!     <classCode scheme="eurovoc">1309</classCode> ...
//!   </textClass> ... </teiHeader>
//!   <text><body>
//!     <head>title</head>
//!     <div type="body"><p n="1">...</p><p n="2">...</p></div>
//!   </body></text>
//! </TEI.2>
//! ```
//!
//! The CELEX ID comes from the root `n` attribute. An optional root `split` attribute
//! carries a precomputed split.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use roxmltree::{Document as XmlDocument, Node, ParsingOptions};

use super::{CorpusError, RawRecord, Result, Split};

pub(super) fn read_records(path: &Path) -> Result<Vec<RawRecord>> {
    let io = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let meta = fs::metadata(path).map_err(io)?;
    let files: Vec<PathBuf> = if meta.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "xml"))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    files.iter().map(|f| read_file(f)).collect()
}

fn read_file(path: &Path) -> Result<RawRecord> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let malformed = |element: &str, message: String| CorpusError::MalformedElement {
        path: path.to_path_buf(),
        element: element.to_string(),
        message,
    };
    let opts = ParsingOptions {
        allow_dtd: true,
        ..ParsingOptions::default()
    };
    let xml = XmlDocument::parse_with_options(&text, opts)
        .map_err(|e| malformed("TEI.2", e.to_string()))?;
    let root = xml.root_element();
    if root.tag_name().name() != "TEI.2" {
        return Err(malformed(
            root.tag_name().name(),
            "expected root element <TEI.2>".into(),
        ));
    }
    let celex_id = root
        .attribute("n")
        .filter(|s| !s.trim().is_empty())
        .ok_or_else(|| malformed("TEI.2", "missing CELEX attribute `n`".into()))?
        .trim()
        .to_string();
    let split = root
        .attribute("split")
        .map(|s| s.parse::<Split>().map_err(|e| malformed("TEI.2", e)))
        .transpose()?;

    let mut labels = BTreeSet::new();
    for code in root
        .descendants()
        .filter(|n| n.has_tag_name("classCode") && n.attribute("scheme") == Some("eurovoc"))
    {
        let id = node_text(code);
        if id.is_empty() {
            return Err(malformed("classCode", "empty EuroVoc code".into()));
        }
        labels.insert(id);
    }

    let body_node = root
        .descendants()
        .find(|n| n.has_tag_name("body"))
        .ok_or_else(|| malformed("body", "missing <body>".into()))?;
    let title = body_node
        .children()
        .find(|n| n.has_tag_name("head"))
        .map(node_text)
        .unwrap_or_default();
    let paragraphs: Vec<String> = body_node
        .descendants()
        .filter(|n| n.has_tag_name("p"))
        .map(node_text)
        .filter(|p| !p.is_empty())
        .collect();

    Ok(RawRecord {
        celex_id,
        title,
        body: paragraphs.join("\n"),
        labels,
        split,
    })
}

/// Concatenated descendant text with whitespace runs collapsed.
fn node_text(node: Node) -> String {
    let raw: String = node
        .descendants()
        .filter(|n| n.is_text())
        .filter_map(|n| n.text())
        .collect();
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}
