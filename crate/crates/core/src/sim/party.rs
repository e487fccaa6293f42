use std::fmt;

use serde::{Deserialize, Serialize};

/// Index of a party in `[0, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartyId(pub u32);

impl PartyId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

impl From<usize> for PartyId {
    fn from(i: usize) -> Self {
        PartyId(i as u32)
    }
}

/// Largest supported party count.
pub const MAX_PARTIES: usize = 256;

/// A set of distinct parties, used for quorum tallies. Fixed-size bitset.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct PartySet {
    words: [u64; MAX_PARTIES / 64],
}

impl PartySet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `p`; returns `true` if it was not present.
    pub fn insert(&mut self, p: PartyId) -> bool {
        assert!(p.index() < MAX_PARTIES, "party {p} beyond {MAX_PARTIES}");
        let (w, mask) = (p.index() / 64, 1u64 << (p.index() % 64));
        let fresh = self.words[w] & mask == 0;
        self.words[w] |= mask;
        fresh
    }

    pub fn contains(&self, p: PartyId) -> bool {
        p.index() < MAX_PARTIES && self.words[p.index() / 64] & (1u64 << (p.index() % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = PartyId> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64).filter(move |b| bits & (1u64 << b) != 0).map(move |b| PartyId((w * 64 + b) as u32))
        })
    }
}

impl fmt::Debug for PartySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|p| p.0)).finish()
    }
}

impl FromIterator<PartyId> for PartySet {
    fn from_iter<I: IntoIterator<Item = PartyId>>(iter: I) -> Self {
        let mut s = PartySet::new();
        for p in iter {
            s.insert(p);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_is_idempotent() {
        let mut s = PartySet::new();
        assert!(s.insert(PartyId(3)));
        assert!(!s.insert(PartyId(3)));
        assert!(s.insert(PartyId(70)));
        assert_eq!(s.len(), 2);
        assert!(s.contains(PartyId(70)));
        assert!(!s.contains(PartyId(4)));
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![PartyId(3), PartyId(70)]);
    }
}
