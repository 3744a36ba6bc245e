//! Shared multilingual byte-level subword vocabulary.
//!
//! Ids 0..5 are the specials, ids 5..261 the 256 single bytes, and every id after that is
//! the result of a learned merge. Text is split into chunks (a whitespace run followed by a
//! non-whitespace run) and merges never cross chunk boundaries.

mod mlm;
mod train;

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::{parse_language_list, LanguageCode};

pub use mlm::{mask_for_mlm, MaskConfig, MaskTargets};
pub use train::train_vocab;

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const CLS: u32 = 2;
pub const SEP: u32 = 3;
pub const MASK: u32 = 4;
pub const SPECIAL_COUNT: u32 = 5;
pub const BYTE_OFFSET: u32 = SPECIAL_COUNT;
/// Specials plus the byte alphabet: the smallest possible vocabulary.
pub const BASE_VOCAB: usize = SPECIAL_COUNT as usize + 256;

const SPECIAL_NAMES: [&str; 5] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"];
const MAGIC: &str = "lmtc-vocab 1";

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("cannot train a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("vocabulary size {0} is below the {BASE_VOCAB}-token byte alphabet")]
    SizeTooSmall(usize),
    #[error("max_seq_len must be at least 2, got {0}")]
    SeqLenTooSmall(usize),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("vocab file line {line}: {message}")]
    Format { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, TokenizerError>;

/// A learned merge: `left` followed by `right` becomes `result`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Merge {
    pub left: u32,
    pub right: u32,
    pub result: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    /// Byte string of every non-special token; entries for specials are empty.
    tokens: Vec<Vec<u8>>,
    merges: Vec<Merge>,
    languages: BTreeSet<LanguageCode>,
    ranks: HashMap<(u32, u32), (usize, u32)>,
}

/// `[CLS] subwords... [SEP]` for one document. Never padded.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

pub fn is_special(id: u32) -> bool {
    id < SPECIAL_COUNT
}

/// Splits text into chunks of leading whitespace plus one non-whitespace run.
pub(crate) fn chunks(bytes: &[u8]) -> Vec<&[u8]> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        out.push(&bytes[start..i]);
        start = i;
    }
    out
}

impl Vocab {
    pub(crate) fn from_parts(
        tokens: Vec<Vec<u8>>,
        merges: Vec<Merge>,
        languages: BTreeSet<LanguageCode>,
    ) -> Vocab {
        let ranks = merges
            .iter()
            .enumerate()
            .map(|(rank, m)| ((m.left, m.right), (rank, m.result)))
            .collect();
        Vocab {
            tokens,
            merges,
            languages,
            ranks,
        }
    }

    /// Specials and single bytes only.
    pub fn bytes_only() -> Vocab {
        Vocab::from_parts(base_tokens(), Vec::new(), BTreeSet::new())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn languages(&self) -> &BTreeSet<LanguageCode> {
        &self.languages
    }

    /// Byte string of a non-special token.
    pub fn token_bytes(&self, id: u32) -> Option<&[u8]> {
        if is_special(id) {
            None
        } else {
            self.tokens.get(id as usize).map(Vec::as_slice)
        }
    }

    /// Printable form of any token.
    pub fn token_name(&self, id: u32) -> String {
        if is_special(id) {
            SPECIAL_NAMES[id as usize].to_string()
        } else {
            String::from_utf8_lossy(&self.tokens[id as usize]).into_owned()
        }
    }

    pub(crate) fn encode_chunk(&self, chunk: &[u8], out: &mut Vec<u32>) {
        let mut ids: Vec<u32> = chunk.iter().map(|&b| BYTE_OFFSET + b as u32).collect();
        loop {
            let best = ids
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0], w[1])).map(|&(rank, res)| (rank, w[0], w[1], res)))
                .min_by_key(|&(rank, ..)| rank);
            let Some((_, left, right, result)) = best else { break };
            let mut merged = Vec::with_capacity(ids.len());
            let mut i = 0;
            while i < ids.len() {
                if i + 1 < ids.len() && ids[i] == left && ids[i + 1] == right {
                    merged.push(result);
                    i += 2;
                } else {
                    merged.push(ids[i]);
                    i += 1;
                }
            }
            ids = merged;
        }
        out.extend_from_slice(&ids);
    }

    /// Subword ids of `text` without specials or truncation.
    pub fn tokenize(&self, text: &str) -> Vec<u32> {
        let mut out = Vec::new();
        for chunk in chunks(text.as_bytes()) {
            self.encode_chunk(chunk, &mut out);
        }
        out
    }

    /// `[CLS] + subwords + [SEP]`, head-truncated so that `[SEP]` stays last.
    pub fn encode(&self, text: &str, max_seq_len: usize) -> Result<TokenSequence> {
        if max_seq_len < 2 {
            return Err(TokenizerError::SeqLenTooSmall(max_seq_len));
        }
        let budget = max_seq_len - 2;
        let mut ids = Vec::with_capacity(max_seq_len.min(text.len() + 2));
        ids.push(CLS);
        for chunk in chunks(text.as_bytes()) {
            if ids.len() > budget {
                break;
            }
            self.encode_chunk(chunk, &mut ids);
        }
        ids.truncate(budget + 1);
        ids.push(SEP);
        Ok(TokenSequence { ids })
    }

    /// Concatenated bytes of all non-special ids.
    pub fn decode(&self, ids: &[u32]) -> Vec<u8> {
        ids.iter()
            .filter_map(|&id| self.token_bytes(id))
            .flatten()
            .copied()
            .collect()
    }

    /// Header, one token per line, then the merge rules in order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MAGIC}").unwrap();
        writeln!(out, "size {}", self.len()).unwrap();
        let langs: Vec<&str> = self.languages.iter().map(LanguageCode::as_str).collect();
        writeln!(out, "languages {}", langs.join(",")).unwrap();
        writeln!(out, "specials {}", SPECIAL_NAMES.join(" ")).unwrap();
        writeln!(out, "tokens").unwrap();
        for (id, tok) in self.tokens.iter().enumerate() {
            if is_special(id as u32) {
                writeln!(out, "{}", SPECIAL_NAMES[id]).unwrap();
            } else {
                writeln!(out, "{}", escape(tok)).unwrap();
            }
        }
        writeln!(out, "merges {}", self.merges.len()).unwrap();
        for m in &self.merges {
            writeln!(out, "{} {} {}", m.left, m.right, m.result).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Vocab> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| TokenizerError::Format {
                line: 0,
                message: format!("unexpected end of file, expected {what}"),
            })
        };
        let err = |line: usize, message: String| TokenizerError::Format { line, message };

        let (n, magic) = next("magic")?;
        if magic != MAGIC {
            return Err(err(n, format!("expected `{MAGIC}`")));
        }
        let (n, size) = next("size")?;
        let size: usize = size
            .strip_prefix("size ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err(n, "expected `size N`".into()))?;
        let (n, langs) = next("languages")?;
        let langs = langs
            .strip_prefix("languages")
            .ok_or_else(|| err(n, "expected `languages`".into()))?;
        let languages = parse_language_list(langs.trim()).map_err(|e| err(n, e.to_string()))?;
        let (n, specials) = next("specials")?;
        if specials != format!("specials {}", SPECIAL_NAMES.join(" ")) {
            return Err(err(n, "unexpected special-token header".into()));
        }
        let (n, t) = next("tokens")?;
        if t != "tokens" {
            return Err(err(n, "expected `tokens`".into()));
        }
        let mut tokens = Vec::with_capacity(size);
        for id in 0..size {
            let (n, line) = next("token")?;
            if let Some(&name) = SPECIAL_NAMES.get(id) {
                if line != name {
                    return Err(err(n, format!("expected {name}")));
                }
                tokens.push(Vec::new());
            } else {
                tokens.push(unescape(line).map_err(|m| err(n, m))?);
            }
        }
        let (n, header) = next("merges")?;
        let count: usize = header
            .strip_prefix("merges ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err(n, "expected `merges N`".into()))?;
        let mut merges = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, line) = next("merge")?;
            let parts: Vec<u32> = line
                .split(' ')
                .map(|p| p.parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| err(n, e.to_string()))?;
            let [left, right, result] = parts[..] else {
                return Err(err(n, "expected `left right result`".into()));
            };
            let ok = |id: u32| !is_special(id) && (id as usize) < size;
            if !ok(left) || !ok(right) || !ok(result) {
                return Err(err(n, "merge refers to an unknown token".into()));
            }
            let mut joined = tokens[left as usize].clone();
            joined.extend_from_slice(&tokens[right as usize]);
            if joined != tokens[result as usize] {
                return Err(err(n, "merge result does not match its token".into()));
            }
            merges.push(Merge { left, right, result });
        }
        for (i, tok) in tokens.iter().enumerate().skip(SPECIAL_COUNT as usize).take(256) {
            if tok.as_slice() != [(i - SPECIAL_COUNT as usize) as u8] {
                return Err(err(0, format!("byte token {i} is not a single byte")));
            }
        }
        Ok(Vocab::from_parts(tokens, merges, languages))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|source| TokenizerError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Vocab> {
        let text = fs::read_to_string(path).map_err(|source| TokenizerError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Vocab::from_text(&text)
    }
}

pub(crate) fn base_tokens() -> Vec<Vec<u8>> {
    let mut tokens = vec![Vec::new(); SPECIAL_COUNT as usize];
    tokens.extend((0..=255u8).map(|b| vec![b]));
    tokens
}

fn escape(bytes: &[u8]) -> String {
    let mut s = String::new();
    for &b in bytes {
        if b.is_ascii_graphic() && b != b'\\' {
            s.push(b as char);
        } else {
            write!(s, "\\x{b:02x}").unwrap();
        }
    }
    s
}

fn unescape(s: &str) -> std::result::Result<Vec<u8>, String> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\\' {
            let hex = s.get(i + 2..i + 4).filter(|_| bytes.get(i + 1) == Some(&b'x'));
            let hex = hex.ok_or_else(|| format!("bad escape in `{s}`"))?;
            out.push(u8::from_str_radix(hex, 16).map_err(|e| e.to_string())?);
            i += 4;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    if out.is_empty() {
        return Err("empty token".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chunking_covers_all_bytes() {
        let text = b"  hello  world\n";
        let parts = chunks(text);
        assert_eq!(parts, vec![&b"  hello"[..], &b"  world"[..], &b"\n"[..]]);
        assert!(chunks(b"").is_empty());
    }

    #[test]
    fn empty_text_is_cls_sep() {
        let v = Vocab::bytes_only();
        assert_eq!(v.encode("", 8).unwrap().ids, vec![CLS, SEP]);
        assert!(v.encode("x", 1).is_err());
    }

    #[test]
    fn long_text_truncates_with_sep_last() {
        let v = Vocab::bytes_only();
        let text: String = (0..10_000).map(|i| if i % 7 == 6 { ' ' } else { 'a' }).collect();
        let seq = v.encode(&text, 256).unwrap();
        assert_eq!(seq.len(), 256);
        assert_eq!(seq.ids[0], CLS);
        assert_eq!(*seq.ids.last().unwrap(), SEP);
        assert!(seq.ids[1..255].iter().all(|&id| !is_special(id)));
    }

    #[test]
    fn escape_roundtrip() {
        let raw = b"a\\b \n\xff";
        assert_eq!(unescape(&escape(raw)).unwrap(), raw);
    }

    #[test]
    fn file_rejects_corruption() {
        let v = Vocab::bytes_only();
        let text = v.to_text();
        assert_eq!(Vocab::from_text(&text).unwrap(), v);
        assert!(Vocab::from_text(&text.replace("lmtc-vocab 1", "lmtc-vocab 9")).is_err());
        let truncated: String = text.lines().take(20).collect::<Vec<_>>().join("\n");
        assert!(Vocab::from_text(&truncated).is_err());
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(text in any::<String>()) {
            let v = train_vocab([text.as_str(), "the theory of the thesaurus"], 300, &BTreeSet::new()).unwrap();
            let seq = v.encode(&text, usize::MAX).unwrap();
            prop_assert_eq!(seq.ids[0], CLS);
            prop_assert_eq!(*seq.ids.last().unwrap(), SEP);
            prop_assert!(seq.ids[1..seq.len() - 1].iter().all(|&id| !is_special(id)));
            prop_assert_eq!(v.decode(&seq.ids), text.as_bytes());
        }
    }
}
