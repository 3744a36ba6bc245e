//! Masked-LM corruption.

use std::collections::BTreeMap;

use rand::Rng;

use super::{is_special, TokenSequence, MASK, SPECIAL_COUNT};

/// Masked position -> original id.
pub type MaskTargets = BTreeMap<usize, u32>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaskConfig {
    /// Probability that a non-special position is selected.
    pub ratio: f64,
    /// Of the selected positions: share replaced by `[MASK]`.
    pub mask_share: f64,
    /// Of the selected positions: share replaced by a random non-special id.
    /// The remainder keeps its original id.
    pub random_share: f64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        MaskConfig {
            ratio: 0.15,
            mask_share: 0.8,
            random_share: 0.1,
        }
    }
}

/// Selects each non-special position independently with probability `config.ratio`.
///
/// `vocab_len` bounds the random replacement ids to `[SPECIAL_COUNT, vocab_len)`.
pub fn mask_for_mlm<R: Rng + ?Sized>(
    seq: &TokenSequence,
    rng: &mut R,
    config: &MaskConfig,
    vocab_len: usize,
) -> (TokenSequence, MaskTargets) {
    let mut corrupted = seq.ids.clone();
    let mut targets = MaskTargets::new();
    for (pos, &id) in seq.ids.iter().enumerate() {
        if is_special(id) || rng.random::<f64>() >= config.ratio {
            continue;
        }
        targets.insert(pos, id);
        let r: f64 = rng.random();
        if r < config.mask_share {
            corrupted[pos] = MASK;
        } else if r < config.mask_share + config.random_share && vocab_len > SPECIAL_COUNT as usize {
            corrupted[pos] = rng.random_range(SPECIAL_COUNT..vocab_len as u32);
        }
    }
    (TokenSequence { ids: corrupted }, targets)
}

#[cfg(test)]
mod tests {
    use super::super::{CLS, SEP};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seq(n: usize) -> TokenSequence {
        let mut ids = vec![CLS];
        ids.extend((0..n).map(|i| 5 + (i % 200) as u32));
        ids.push(SEP);
        TokenSequence { ids }
    }

    #[test]
    fn only_specials_gives_no_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (c, t) = mask_for_mlm(&seq(0), &mut rng, &MaskConfig::default(), 300);
        assert!(t.is_empty());
        assert_eq!(c, seq(0));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let s = seq(500);
        let a = mask_for_mlm(&s, &mut ChaCha8Rng::seed_from_u64(9), &MaskConfig::default(), 300);
        let b = mask_for_mlm(&s, &mut ChaCha8Rng::seed_from_u64(9), &MaskConfig::default(), 300);
        assert_eq!(a, b);
    }

    #[test]
    fn restoring_targets_recovers_sequence() {
        let s = seq(1000);
        let (mut c, t) = mask_for_mlm(&s, &mut ChaCha8Rng::seed_from_u64(3), &MaskConfig::default(), 300);
        for (&pos, &id) in &t {
            c.ids[pos] = id;
        }
        assert_eq!(c, s);
    }

    #[test]
    fn corruption_shares_are_roughly_80_10_10() {
        let s = seq(100_000);
        let (c, t) = mask_for_mlm(&s, &mut ChaCha8Rng::seed_from_u64(1), &MaskConfig::default(), 300);
        let masked = t.keys().filter(|&&p| c.ids[p] == MASK).count() as f64 / t.len() as f64;
        let kept = t.iter().filter(|(&p, &id)| c.ids[p] == id).count() as f64 / t.len() as f64;
        assert!((masked - 0.8).abs() < 0.02, "{masked}");
        // Random replacement can coincide with the original id.
        assert!((kept - 0.1).abs() < 0.02, "{kept}");
        assert!(c.ids.iter().all(|&id| (id as usize) < 300));
    }
}
