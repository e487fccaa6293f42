//! Graded consensus: the 3-round 1-graded protocol, the 3-round proposal
//! protocol and their grade-doubling composition.

mod gc1;
mod gc2k;
mod prop;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::sim::tag::{read_varint, write_varint};
use crate::wire::{BitString, WireValue};

pub use gc1::Gc1;
pub use gc2k::{double_grade, Gc2k, MalformedPropOutput};
pub use prop::Prop;

/// A value-grade pair. Grade 0 carries no value (⊥).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GradedOutput {
    pub value: Option<BitString>,
    pub grade: u32,
}

impl GradedOutput {
    pub fn bottom() -> Self {
        GradedOutput { value: None, grade: 0 }
    }

    /// `grade` must be positive.
    pub fn new(value: BitString, grade: u32) -> Self {
        debug_assert!(grade > 0);
        GradedOutput { value: Some(value), grade }
    }

    pub fn is_bottom(&self) -> bool {
        self.value.is_none()
    }
}

impl fmt::Debug for GradedOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.value {
            Some(v) => write!(f, "({v:?}, {})", self.grade),
            None => write!(f, "(⊥, {})", self.grade),
        }
    }
}

/// `varint(grade) ‖ value`, with no value bytes at grade 0.
impl WireValue for GradedOutput {
    type Shape = u32;

    fn encode(&self, out: &mut Vec<u8>) {
        write_varint(self.grade as u64, out);
        if let Some(v) = &self.value {
            v.encode(out);
        }
    }

    fn decode(bytes: &[u8], ell: &u32) -> Option<Self> {
        let (grade, rest) = read_varint(bytes)?;
        let grade = u32::try_from(grade).ok()?;
        if grade == 0 {
            return rest.is_empty().then(GradedOutput::bottom);
        }
        Some(GradedOutput::new(BitString::decode(rest, ell)?, grade))
    }
}

/// Bit length needed to carry indices `1..=count` as `index − 1`.
pub fn index_bits(count: u32) -> u32 {
    if count <= 2 {
        1
    } else {
        32 - (count - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_wire_roundtrip() {
        let g = GradedOutput::new(BitString::from_u64(5, 3), 2);
        assert_eq!(GradedOutput::decode(&g.to_bytes(), &3), Some(g));
        assert_eq!(GradedOutput::decode(&[0], &3), Some(GradedOutput::bottom()));
        assert!(GradedOutput::decode(&[0, 0xa0], &3).is_none());
        assert!(GradedOutput::decode(&[1], &3).is_none());
    }

    #[test]
    fn index_bits_cover_degree() {
        assert_eq!(index_bits(1), 1);
        assert_eq!(index_bits(2), 1);
        assert_eq!(index_bits(3), 2);
        assert_eq!(index_bits(4), 2);
        assert_eq!(index_bits(5), 3);
    }
}
