use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::graded::{Gc2k, GradedOutput};
use crate::sim::{drive, Automaton, Context, Incoming, Latch, ProtocolKind, TagComponent};
use crate::wire::BitString;

const GC_SLOT: TagComponent = TagComponent::new(ProtocolKind::Gc2k, 0);
const INNER_INDEX: u64 = 1;

/// Edge agreement in ℤ: a binary graded vote on the sign, then agreement
/// in ℕ on the (possibly mirrored) magnitude.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AgrZ<N> {
    gc: Gc2k,
    inner: N,
    input: Option<BigInt>,
    /// `+1` or `−1` when inner outputs are forwarded.
    sign: Option<i8>,
    gc_done: bool,
    /// A graded output that arrived before this party's input.
    early: Option<GradedOutput>,
    out: Latch,
}

impl<N> AgrZ<N>
where
    N: Automaton<Input = BigInt, Output = BigInt>,
{
    pub fn new(inner: N) -> Self {
        AgrZ { gc: Gc2k::two_graded(1), inner, input: None, sign: None, gc_done: false, early: None, out: Latch::default() }
    }

    fn inner_slot() -> TagComponent {
        TagComponent::new(N::KIND, INNER_INDEX)
    }

    fn emit(&mut self, y: BigInt, cx: &mut Context<'_, BigInt>) {
        if self.out.fire() {
            cx.output(y);
        }
    }

    fn inner_outputs(&mut self, ys: Vec<BigInt>, cx: &mut Context<'_, BigInt>) {
        let Some(k) = self.sign else { return };
        for y in ys {
            self.emit(y * k, cx);
        }
    }

    fn on_gc_output(&mut self, y: GradedOutput, cx: &mut Context<'_, BigInt>) {
        if self.gc_done {
            return;
        }
        let Some(v) = self.input.clone() else {
            self.early.get_or_insert(y);
            return;
        };
        self.gc_done = true;
        let k = match y.value.as_ref().and_then(BitString::to_u64) {
            Some(0) if y.grade > 0 => Some(1i8),
            Some(_) if y.grade > 0 => Some(-1i8),
            _ => None,
        };
        let x = match k {
            None => {
                self.emit(BigInt::zero(), cx);
                BigInt::zero()
            }
            Some(k) => {
                self.sign = Some(k);
                let scaled = BigInt::from(y.grade as i64 - 1) * k * v;
                scaled.max(BigInt::zero())
            }
        };
        let inner = &mut self.inner;
        let rep = drive(cx, Self::inner_slot(), |c| inner.on_input(x, c));
        self.inner_outputs(rep.outputs, cx);
    }
}

impl<N> Automaton for AgrZ<N>
where
    N: Automaton<Input = BigInt, Output = BigInt>,
{
    type Input = BigInt;
    type Output = BigInt;
    const KIND: ProtocolKind = ProtocolKind::AgrZ;

    fn on_input(&mut self, v: BigInt, cx: &mut Context<'_, BigInt>) {
        if self.input.is_some() {
            return;
        }
        let bit = u64::from(v.is_negative());
        self.input = Some(v);
        let rep = drive(cx, GC_SLOT, |c| self.gc.on_input(BitString::from_u64(bit, 1), c));
        let early = self.early.take();
        for y in early.into_iter().chain(rep.outputs) {
            self.on_gc_output(y, cx);
        }
    }

    fn on_message(&mut self, msg: Incoming<'_>, cx: &mut Context<'_, BigInt>) {
        let Some((comp, sub_msg)) = msg.for_child() else {
            cx.malformed();
            return;
        };
        if comp == GC_SLOT {
            let rep = drive(cx, comp, |c| self.gc.on_message(sub_msg, c));
            for y in rep.outputs {
                self.on_gc_output(y, cx);
            }
        } else if comp == Self::inner_slot() {
            let inner = &mut self.inner;
            let rep = drive(cx, comp, |c| inner.on_message(sub_msg, c));
            self.inner_outputs(rep.outputs, cx);
        } else {
            cx.malformed();
        }
    }
}
