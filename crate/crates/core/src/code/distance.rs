use std::collections::BTreeMap;

use super::Codebook;
use crate::channel::Bit;

/// Edit distance counting insertions, deletions and substitutions.
pub fn levenshtein(a: &[Bit], b: &[Bit]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &y) in b.iter().enumerate() {
            let sub = prev[j] + (x != y) as usize;
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Multiplicity of each pairwise Levenshtein distance within one codebook.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DistanceSpectrum {
    counts: BTreeMap<usize, usize>,
}

impl DistanceSpectrum {
    pub fn from_counts(counts: BTreeMap<usize, usize>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &BTreeMap<usize, usize> {
        &self.counts
    }

    /// Unordered pairs at distance `d`.
    pub fn multiplicity(&self, d: usize) -> usize {
        self.counts.get(&d).copied().unwrap_or(0)
    }

    /// Minimum distance; `None` for a single-word book.
    pub fn d_lmin(&self) -> Option<usize> {
        self.counts.keys().next().copied()
    }

    /// Number of correctable edits, `floor((d_lmin - 1) / 2)`.
    pub fn correctable(&self) -> Option<usize> {
        self.d_lmin().map(|d| d.saturating_sub(1) / 2)
    }

    pub fn pairs(&self) -> usize {
        self.counts.values().sum()
    }
}

pub fn spectrum(book: &Codebook) -> DistanceSpectrum {
    let mut counts = BTreeMap::new();
    let words = book.words();
    for i in 0..words.len() {
        for j in (i + 1)..words.len() {
            *counts.entry(levenshtein(&words[i], &words[j])).or_insert(0) += 1;
        }
    }
    DistanceSpectrum { counts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(s: &str) -> Vec<Bit> {
        s.bytes().map(|c| c - b'0').collect()
    }

    #[test]
    fn known_distances() {
        assert_eq!(levenshtein(&bits("0110"), &bits("0110")), 0);
        assert_eq!(levenshtein(&bits("0000000"), &bits("0000111")), 3);
        assert_eq!(levenshtein(&[], &bits("101")), 3);
        assert_eq!(levenshtein(&bits("0101"), &bits("1010")), 2);
    }

    #[test]
    fn single_word_has_empty_spectrum() {
        let s = spectrum(&Codebook::from_strs(&["0101"]).unwrap());
        assert_eq!(s.d_lmin(), None);
        assert_eq!(s.pairs(), 0);
    }

    #[test]
    fn correctable_from_minimum_distance() {
        let book = Codebook::from_strs(&["000", "111"]).unwrap();
        let s = spectrum(&book);
        assert_eq!(s.d_lmin(), Some(3));
        assert_eq!(s.correctable(), Some(1));
    }

    fn word() -> impl Strategy<Value = Vec<Bit>> {
        prop::collection::vec(0u8..2, 0..=12)
    }

    proptest! {
        #[test]
        fn metric_axioms(a in word(), b in word(), c in word()) {
            let ab = levenshtein(&a, &b);
            prop_assert_eq!(ab, levenshtein(&b, &a));
            prop_assert_eq!(ab == 0, a == b);
            prop_assert!(levenshtein(&a, &c) <= ab + levenshtein(&b, &c));
        }
    }
}
