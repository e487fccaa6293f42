//! Canonical payload encodings for protocol values.
//!
//! Decoders are strict: every value has exactly one accepted byte form, so
//! two different payloads never count as the same value in a tally.

use std::fmt;
use std::hash::Hash;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::sim::tag::{read_varint, write_varint};

/// A value that can travel inside a message payload.
pub trait WireValue: Clone + Eq + Ord + Hash + fmt::Debug {
    /// Static decoding context, e.g. the bit length of a string.
    type Shape: Clone + Eq + Hash + fmt::Debug;

    fn encode(&self, out: &mut Vec<u8>);

    /// Decodes a complete payload; trailing bytes are an error.
    fn decode(bytes: &[u8], shape: &Self::Shape) -> Option<Self>;

    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode(&mut out);
        out
    }
}

/// A fixed-length bit string, most significant bit first.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BitString {
    len: u32,
    bytes: Vec<u8>,
}

impl BitString {
    pub fn zeros(len: u32) -> Self {
        BitString { len, bytes: vec![0; (len as usize).div_ceil(8)] }
    }

    /// The low `len` bits of `value`.
    pub fn from_u64(value: u64, len: u32) -> Self {
        let mut s = BitString::zeros(len);
        for k in 0..len {
            let shift = len - 1 - k;
            if shift < 64 && (value >> shift) & 1 == 1 {
                s.set(k, true);
            }
        }
        s
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = BitString::zeros(bits.len() as u32);
        for (k, &b) in bits.iter().enumerate() {
            s.set(k as u32, b);
        }
        s
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit `k`, counting from 0 at the most significant end.
    pub fn bit(&self, k: u32) -> bool {
        self.bytes[(k / 8) as usize] & (0x80 >> (k % 8)) != 0
    }

    pub fn set(&mut self, k: u32, b: bool) {
        let mask = 0x80 >> (k % 8);
        if b {
            self.bytes[(k / 8) as usize] |= mask;
        } else {
            self.bytes[(k / 8) as usize] &= !mask;
        }
    }

    /// Value of the string read as a big-endian integer, if it fits.
    pub fn to_u64(&self) -> Option<u64> {
        if self.len > 64 {
            return None;
        }
        Some((0..self.len).fold(0u64, |acc, k| (acc << 1) | self.bit(k) as u64))
    }

    /// Parses a string of `0` and `1` characters.
    pub fn parse(s: &str) -> Option<Self> {
        let bits: Option<Vec<bool>> = s
            .chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect();
        bits.map(|b| BitString::from_bits(&b))
    }

    /// Same string with bit `k` flipped.
    pub fn flipped(&self, k: u32) -> Self {
        let mut s = self.clone();
        s.set(k, !self.bit(k));
        s
    }
}

/// The bits, most significant first.
impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.len {
            f.write_str(if self.bit(k) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("0b")?;
        for k in 0..self.len {
            f.write_str(if self.bit(k) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl WireValue for BitString {
    type Shape = u32;

    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.bytes);
    }

    fn decode(bytes: &[u8], len: &u32) -> Option<Self> {
        if bytes.len() != (*len as usize).div_ceil(8) {
            return None;
        }
        // padding bits must be zero
        let pad = (8 - len % 8) % 8;
        if pad > 0 && bytes.last().is_some_and(|b| b & ((1u8 << pad) - 1) != 0) {
            return None;
        }
        Some(BitString { len: *len, bytes: bytes.to_vec() })
    }
}

/// Minimal two's-complement big-endian encoding.
impl WireValue for BigInt {
    type Shape = ();

    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_signed_bytes_be());
    }

    fn decode(bytes: &[u8], _: &()) -> Option<Self> {
        let v = BigInt::from_signed_bytes_be(bytes);
        (v.to_signed_bytes_be() == bytes).then_some(v)
    }
}

/// Tree vertex ids as varints.
impl WireValue for u32 {
    type Shape = ();

    fn encode(&self, out: &mut Vec<u8>) {
        write_varint(*self as u64, out);
    }

    fn decode(bytes: &[u8], _: &()) -> Option<Self> {
        match read_varint(bytes)? {
            (v, []) => u32::try_from(v).ok(),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bit_order_is_msb_first() {
        let s = BitString::from_u64(0x2A, 8);
        assert_eq!(s.to_bytes(), vec![0x2A]);
        assert!(!s.bit(0) && s.bit(2) && s.bit(6) && !s.bit(7));
        let one = BitString::from_u64(1, 1);
        assert_eq!(one.to_bytes(), vec![0x80]);
    }

    #[test]
    fn nonzero_padding_is_rejected() {
        assert!(BitString::decode(&[0x81], &1).is_none());
        assert!(BitString::decode(&[0x80], &1).is_some());
        assert!(BitString::decode(&[0x80, 0], &1).is_none());
    }

    #[test]
    fn bigint_encoding_is_canonical() {
        assert_eq!(BigInt::from(0).to_bytes(), vec![0]);
        assert!(BigInt::decode(&[], &()).is_none());
        assert_eq!(BigInt::from(-1).to_bytes(), vec![0xff]);
        assert!(BigInt::decode(&[0x00, 0x05], &()).is_none());
        assert!(BigInt::decode(&[0xff, 0xff], &()).is_none());
    }

    #[test]
    fn vertex_rejects_overflow_and_trailing() {
        assert_eq!(u32::decode(&[0x05], &()), Some(5));
        assert!(u32::decode(&[0x05, 0x00], &()).is_none());
        assert!(u32::decode(&[0xff, 0xff, 0xff, 0xff, 0x7f], &()).is_none());
    }

    proptest! {
        #[test]
        fn bitstring_roundtrip(v in any::<u64>(), len in 1u32..=64) {
            let s = BitString::from_u64(v, len);
            prop_assert_eq!(BitString::decode(&s.to_bytes(), &len), Some(s.clone()));
            let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
            prop_assert_eq!(s.to_u64(), Some(v & mask));
        }

        #[test]
        fn bigint_roundtrip(v in any::<i128>()) {
            let b = BigInt::from(v);
            prop_assert_eq!(BigInt::decode(&b.to_bytes(), &()), Some(b));
        }
    }
}
