//! Pair-merge vocabulary training with incremental pair counts.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};

use super::{base_tokens, chunks, Merge, Result, TokenizerError, Vocab, BASE_VOCAB, BYTE_OFFSET};
use crate::corpus::LanguageCode;

#[derive(PartialEq, Eq)]
struct Candidate {
    count: i64,
    key: (Vec<u8>, Vec<u8>),
    pair: (u32, u32),
}

impl Ord for Candidate {
    // Highest count first; equal counts go to the lexicographically smaller pair.
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.key.cmp(&self.key))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Learns merges until the vocabulary holds `size` tokens (specials and bytes included)
/// or no adjacent pair occurs at least twice.
pub fn train_vocab<I, S>(texts: I, size: usize, languages: &BTreeSet<LanguageCode>) -> Result<Vocab>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if size < BASE_VOCAB {
        return Err(TokenizerError::SizeTooSmall(size));
    }
    let mut chunk_freq: HashMap<Vec<u8>, u64> = HashMap::new();
    for text in texts {
        for chunk in chunks(text.as_ref().as_bytes()) {
            *chunk_freq.entry(chunk.to_vec()).or_default() += 1;
        }
    }
    if chunk_freq.is_empty() {
        return Err(TokenizerError::EmptyCorpus);
    }
    let mut sorted: Vec<(Vec<u8>, u64)> = chunk_freq.into_iter().collect();
    sorted.sort_unstable();
    let mut words: Vec<Vec<u32>> = Vec::with_capacity(sorted.len());
    let mut freqs: Vec<i64> = Vec::with_capacity(sorted.len());
    for (bytes, f) in sorted {
        words.push(bytes.iter().map(|&b| BYTE_OFFSET + b as u32).collect());
        freqs.push(f as i64);
    }

    let mut tokens = base_tokens();
    let mut lookup: HashMap<Vec<u8>, u32> = tokens
        .iter()
        .enumerate()
        .skip(BYTE_OFFSET as usize)
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();

    let mut pair_counts: HashMap<(u32, u32), i64> = HashMap::new();
    let mut occurrences: HashMap<(u32, u32), HashSet<usize>> = HashMap::new();
    for (w, word) in words.iter().enumerate() {
        for p in word.windows(2) {
            let pair = (p[0], p[1]);
            *pair_counts.entry(pair).or_default() += freqs[w];
            occurrences.entry(pair).or_default().insert(w);
        }
    }

    let candidate = |tokens: &[Vec<u8>], pair: (u32, u32), count: i64| Candidate {
        count,
        key: (tokens[pair.0 as usize].clone(), tokens[pair.1 as usize].clone()),
        pair,
    };
    let mut heap: BinaryHeap<Candidate> = pair_counts
        .iter()
        .map(|(&pair, &count)| candidate(&tokens, pair, count))
        .collect();

    let mut merges = Vec::new();
    while tokens.len() < size {
        let Some(top) = heap.pop() else { break };
        let current = pair_counts.get(&top.pair).copied().unwrap_or(0);
        if top.count != current {
            continue;
        }
        if current < 2 {
            break;
        }
        let (left, right) = top.pair;
        let mut merged_bytes = tokens[left as usize].clone();
        merged_bytes.extend_from_slice(&tokens[right as usize]);
        let result = match lookup.get(&merged_bytes) {
            Some(&id) => id,
            None => {
                let id = tokens.len() as u32;
                tokens.push(merged_bytes.clone());
                lookup.insert(merged_bytes, id);
                id
            }
        };
        merges.push(Merge { left, right, result });

        let mut affected: Vec<usize> = occurrences
            .remove(&top.pair)
            .map(|s| s.into_iter().collect())
            .unwrap_or_default();
        affected.sort_unstable();
        let mut changed: HashSet<(u32, u32)> = HashSet::new();
        for w in affected {
            let f = freqs[w];
            let word = &mut words[w];
            for p in word.windows(2) {
                let pair = (p[0], p[1]);
                *pair_counts.get_mut(&pair).expect("counted pair") -= f;
                changed.insert(pair);
            }
            let mut rewritten = Vec::with_capacity(word.len());
            let mut i = 0;
            while i < word.len() {
                if i + 1 < word.len() && word[i] == left && word[i + 1] == right {
                    rewritten.push(result);
                    i += 2;
                } else {
                    rewritten.push(word[i]);
                    i += 1;
                }
            }
            *word = rewritten;
            for p in word.windows(2) {
                let pair = (p[0], p[1]);
                *pair_counts.entry(pair).or_default() += f;
                occurrences.entry(pair).or_default().insert(w);
                changed.insert(pair);
            }
        }
        for pair in changed {
            let count = pair_counts[&pair];
            if count > 0 {
                heap.push(candidate(&tokens, pair, count));
            } else {
                pair_counts.remove(&pair);
            }
        }
    }
    Ok(Vocab::from_parts(tokens, merges, languages.clone()))
}

#[cfg(test)]
mod tests {
    use super::super::*;

    #[test]
    fn first_merge_is_most_frequent_pair() {
        // "aaab" and " aaab": (a,a) occurs 4 times, (a,b) twice, (' ',a) once.
        let v = train_vocab(["aaab aaab"], 262, &BTreeSet::new()).unwrap();
        let first = v.merges()[0];
        assert_eq!(v.token_bytes(first.result).unwrap(), b"aa");
        assert_eq!(v.len(), 262);
    }

    #[test]
    fn ties_break_lexicographically() {
        // (x,y) and (a,b) both occur twice; "ab" < "xy".
        let v = train_vocab(["xy", "ab", "xy", "ab"], 262, &BTreeSet::new()).unwrap();
        assert_eq!(v.token_bytes(v.merges()[0].result).unwrap(), b"ab");
    }

    #[test]
    fn no_repeated_pairs_means_no_merges() {
        let v = train_vocab(["abcdefg"], BASE_VOCAB, &BTreeSet::new()).unwrap();
        assert_eq!(v.len(), BASE_VOCAB);
        let v = train_vocab(["abcdefg"], 300, &BTreeSet::new()).unwrap();
        assert_eq!(v.len(), BASE_VOCAB);
        assert!(v.merges().is_empty());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            train_vocab(Vec::<String>::new(), 300, &BTreeSet::new()),
            Err(TokenizerError::EmptyCorpus)
        ));
        assert!(matches!(
            train_vocab([""], 300, &BTreeSet::new()),
            Err(TokenizerError::EmptyCorpus)
        ));
        assert!(matches!(
            train_vocab(["abc"], 100, &BTreeSet::new()),
            Err(TokenizerError::SizeTooSmall(100))
        ));
    }

    #[test]
    fn deterministic_and_file_stable() {
        let texts = ["le règlement du conseil", "the council regulation", "die Verordnung des Rates"];
        let langs: BTreeSet<LanguageCode> = [LanguageCode::EN, LanguageCode::FR].into();
        let a = train_vocab(texts, 300, &langs).unwrap();
        let b = train_vocab(texts, 300, &langs).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let back = Vocab::from_text(&a.to_text()).unwrap();
        assert_eq!(back, a);
        for t in texts {
            assert_eq!(back.encode(t, 64).unwrap(), a.encode(t, 64).unwrap());
        }
    }

    #[test]
    fn repeated_text_compresses() {
        let text = "regulation regulation regulation council council";
        let v = train_vocab([text], 400, &BTreeSet::new()).unwrap();
        let ids = v.tokenize(text);
        assert!(ids.len() < 10, "{ids:?}");
        assert_eq!(v.decode(&ids), text.as_bytes());
    }
}
