//! Hierarchical instance tags and the canonical envelope encoding.
//!
//! An envelope body on the wire is
//! `varint(component count) ‖ (kind byte ‖ varint(child index))* ‖ message-kind byte ‖ payload`,
//! with LEB128 varints. Bit accounting is always `8 × body length`.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Protocol kind byte carried by each tag component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum ProtocolKind {
    Gc1 = 1,
    Prop = 2,
    Gc2k = 3,
    Tc = 4,
    Exp = 5,
    TwoStep = 6,
    AgrZ = 7,
    Term = 8,
    WithTerm = 9,
    TcStar = 10,
    Epsilon = 11,
    Echo = 12,
}

impl ProtocolKind {
    pub fn from_byte(b: u8) -> Option<Self> {
        use ProtocolKind::*;
        Some(match b {
            1 => Gc1,
            2 => Prop,
            3 => Gc2k,
            4 => Tc,
            5 => Exp,
            6 => TwoStep,
            7 => AgrZ,
            8 => Term,
            9 => WithTerm,
            10 => TcStar,
            11 => Epsilon,
            12 => Echo,
            _ => return None,
        })
    }
}

/// One `(protocol kind, child index)` step of an instance path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TagComponent {
    pub kind: ProtocolKind,
    pub index: u64,
}

impl TagComponent {
    pub const fn new(kind: ProtocolKind, index: u64) -> Self {
        TagComponent { kind, index }
    }
}

/// Absolute path identifying a nested protocol instance.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InstanceTag(pub Vec<TagComponent>);

impl InstanceTag {
    pub fn root(kind: ProtocolKind) -> Self {
        InstanceTag(vec![TagComponent::new(kind, 0)])
    }

    pub fn child(&self, c: TagComponent) -> Self {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(c);
        InstanceTag(v)
    }

    pub fn components(&self) -> &[TagComponent] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        write_varint(self.0.len() as u64, out);
        for c in &self.0 {
            out.push(c.kind as u8);
            write_varint(c.index, out);
        }
    }

    /// Decodes a tag from the front of `bytes`, returning the remainder.
    pub fn decode(bytes: &[u8]) -> Option<(Self, &[u8])> {
        let (count, mut rest) = read_varint(bytes)?;
        if count > MAX_TAG_DEPTH {
            return None;
        }
        let mut comps = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let (&k, r) = rest.split_first()?;
            let kind = ProtocolKind::from_byte(k)?;
            let (index, r) = read_varint(r)?;
            comps.push(TagComponent { kind, index });
            rest = r;
        }
        Some((InstanceTag(comps), rest))
    }
}

/// Tags deeper than this are rejected by the decoder.
pub const MAX_TAG_DEPTH: u64 = 4096;

impl fmt::Debug for InstanceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for InstanceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{:?}.{}", c.kind, c.index)?;
        }
        Ok(())
    }
}

pub fn write_varint(mut v: u64, out: &mut Vec<u8>) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

/// Reads a minimal LEB128 varint.
pub fn read_varint(bytes: &[u8]) -> Option<(u64, &[u8])> {
    let mut v: u64 = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if i >= 10 {
            return None;
        }
        let part = (b & 0x7f) as u64;
        if i == 9 && part > 1 {
            return None;
        }
        v |= part << (7 * i);
        if b & 0x80 == 0 {
            // reject non-minimal encodings such as [0x80, 0x00]
            if i > 0 && b == 0 {
                return None;
            }
            return Some((v, &bytes[i + 1..]));
        }
    }
    None
}

/// Canonical body of an envelope: tag, message kind and payload.
pub fn encode_body(tag: &InstanceTag, msg_kind: u8, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 + 3 * tag.depth() + payload.len());
    tag.encode(&mut out);
    out.push(msg_kind);
    out.extend_from_slice(payload);
    out
}

pub fn decode_body(bytes: &[u8]) -> Option<(InstanceTag, u8, &[u8])> {
    let (tag, rest) = InstanceTag::decode(bytes)?;
    let (&kind, payload) = rest.split_first()?;
    Some((tag, kind, payload))
}

/// Number of bits an envelope occupies under the canonical encoding.
pub fn count_bits(tag: &InstanceTag, payload_len: usize) -> u64 {
    let mut len = varint_len(tag.depth() as u64);
    for c in &tag.0 {
        len += 1 + varint_len(c.index);
    }
    // message-kind byte
    len += 1;
    8 * (len + payload_len as u64)
}

fn varint_len(v: u64) -> u64 {
    let bits = 64 - v.leading_zeros() as u64;
    bits.div_ceil(7).max(1)
}
