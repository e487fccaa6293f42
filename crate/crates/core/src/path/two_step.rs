use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use crate::sim::{drive, Automaton, Context, Incoming, Latch, ProtocolKind, TagComponent};
use crate::tree::{PathTc, Segment, TcInput};

/// `⌊log₂(v + 1)⌋`: the bit length of `v + 1`, minus one.
pub fn floor_log2_plus1(v: &BigInt) -> u64 {
    assert!(!v.is_negative(), "floor_log2_plus1 needs v ≥ 0");
    (v + 1u32).bits() - 1
}

/// An inner output `z = 5k + r`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TwoStepDecode {
    pub z: BigInt,
    pub k: BigInt,
    pub r: u8,
}

pub fn decode_two_step(z: &BigInt) -> TwoStepDecode {
    assert!(!z.is_negative(), "decode_two_step needs z ≥ 0");
    let five = BigInt::from(5);
    let r = (z % &five).to_u8().expect("remainder below 5");
    TwoStepDecode { z: z.clone(), k: z / five, r }
}

/// Edge agreement in ℕ in two stages: the inner protocol agrees on
/// `5⌊log₂(v + 1)⌋`, which picks a dyadic path `(2^k − 1, …, 2^{k+1} − 1)`
/// that the parties then finish on with path agreement.
///
/// Path instances are keyed by their level, so parties that reach the same
/// level through different remainders share one instance.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TwoStep<N> {
    inner: N,
    input: Option<BigInt>,
    decoded: Option<TwoStepDecode>,
    paths: BTreeMap<u32, PathTc>,
    out: Latch,
}

const INNER_INDEX: u64 = 0;

impl<N> TwoStep<N>
where
    N: Automaton<Input = BigInt, Output = BigInt>,
{
    pub fn new(inner: N) -> Self {
        TwoStep { inner, input: None, decoded: None, paths: BTreeMap::new(), out: Latch::default() }
    }

    pub fn decoded(&self) -> Option<&TwoStepDecode> {
        self.decoded.as_ref()
    }

    fn inner_slot() -> TagComponent {
        TagComponent::new(N::KIND, INNER_INDEX)
    }

    fn emit(&mut self, y: BigInt, cx: &mut Context<'_, BigInt>) {
        if self.out.fire() {
            cx.output(y);
        }
    }

    /// Forwards path outputs of `level` when the remainder says to.
    fn path_outputs(&mut self, level: u32, ys: Vec<BigInt>, cx: &mut Context<'_, BigInt>) {
        let Some(d) = &self.decoded else { return };
        let wanted = match d.r {
            0 | 1 => d.k == BigInt::from(level),
            4 => d.k.clone() + 1 == BigInt::from(level),
            _ => false,
        };
        if wanted {
            for y in ys {
                self.emit(y, cx);
            }
        }
    }

    fn path(&mut self, level: u32) -> &mut PathTc {
        self.paths.entry(level).or_insert_with(|| PathTc::new(level, 2))
    }

    fn run_path(&mut self, level: u32, v: BigInt, cx: &mut Context<'_, BigInt>) {
        let seg = Segment::dyadic(level);
        let a = seg.lo.clone();
        let tc = self.path(level);
        let rep = drive(cx, TagComponent::new(ProtocolKind::Tc, u64::from(level)), |c| {
            tc.on_input(TcInput::with_domain(v, seg, a, None), c)
        });
        self.path_outputs(level, rep.outputs, cx);
    }

    fn on_inner_output(&mut self, z: BigInt, cx: &mut Context<'_, BigInt>) {
        if self.decoded.is_some() {
            return;
        }
        if z.is_negative() {
            cx.fault(format!("inner output {z} is negative"));
            return;
        }
        let d = decode_two_step(&z);
        let Some(k) = d.k.to_u32().filter(|k| *k < u32::MAX) else {
            cx.fault(format!("level {} out of range", d.k));
            return;
        };
        let r = d.r;
        let v = self.input.clone().expect("inner outputs only after input");
        let seg = Segment::dyadic(k);
        let v_next = if r == 0 { seg.clamp(&v) } else { seg.hi.clone() };
        self.decoded = Some(d);
        // direct outputs first: a path instance may answer at once
        if (2..=3).contains(&r) {
            self.emit(v_next.clone(), cx);
        }
        if r <= 2 {
            self.run_path(k, v_next.clone(), cx);
        }
        if r >= 3 {
            self.run_path(k + 1, v_next, cx);
        }
    }
}

impl<N> Automaton for TwoStep<N>
where
    N: Automaton<Input = BigInt, Output = BigInt>,
{
    type Input = BigInt;
    type Output = BigInt;
    const KIND: ProtocolKind = ProtocolKind::TwoStep;

    fn on_input(&mut self, v: BigInt, cx: &mut Context<'_, BigInt>) {
        if self.input.is_some() {
            return;
        }
        if v.is_negative() {
            cx.fault(format!("input {v} is negative"));
            return;
        }
        let x = BigInt::from(5u64) * BigInt::from(floor_log2_plus1(&v));
        self.input = Some(v);
        let inner = &mut self.inner;
        let rep = drive(cx, Self::inner_slot(), |c| inner.on_input(x, c));
        for z in rep.outputs {
            self.on_inner_output(z, cx);
        }
    }

    fn on_message(&mut self, msg: Incoming<'_>, cx: &mut Context<'_, BigInt>) {
        let Some((comp, sub_msg)) = msg.for_child() else {
            cx.malformed();
            return;
        };
        if comp == Self::inner_slot() {
            let inner = &mut self.inner;
            let rep = drive(cx, comp, |c| inner.on_message(sub_msg, c));
            for z in rep.outputs {
                self.on_inner_output(z, cx);
            }
            return;
        }
        match (comp.kind, u32::try_from(comp.index)) {
            (ProtocolKind::Tc, Ok(level)) => {
                let tc = self.path(level);
                let rep = drive(cx, comp, |c| tc.on_message(sub_msg, c));
                self.path_outputs(level, rep.outputs, cx);
            }
            _ => cx.malformed(),
        }
    }
}

impl<N> TwoStep<N> {
    /// Levels whose path instance this party has allocated.
    pub fn path_levels(&self) -> impl Iterator<Item = u32> + '_ {
        self.paths.keys().copied()
    }
}
