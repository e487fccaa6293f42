use num_bigint::BigInt;
use num_traits::One;

use crate::graded::{Gc2k, GradedOutput};
use crate::sim::{drive, Automaton, Context, Incoming, Latch, PartySet, ProtocolKind, Quorum, TagComponent};
use crate::tree::{PathTc, Segment, TcInput};
use crate::wire::BitString;

pub const CENTER: u8 = 1;
pub const LEFT: u8 = 2;
pub const RIGHT: u8 = 3;

const GC_SLOT: TagComponent = TagComponent::new(ProtocolKind::Gc2k, 0);
const TC_SLOT: TagComponent = TagComponent::new(ProtocolKind::Tc, 1);
const NEXT_SLOT: TagComponent = TagComponent::new(ProtocolKind::Exp, 2);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Edge agreement in the infinite path `(2^j − 1, …)` by exponential
/// search: a binary graded vote on `v < 2^{j+1}` sends each party either
/// into the finite path below `2^{j+1} − 1` or one level up.
///
/// Children are created lazily, so a party never allocates a level it does
/// not enter.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Exp {
    j: u32,
    input: Option<BigInt>,
    gc: Gc2k,
    /// Grade of the graded output, once known.
    grade: Option<u32>,
    /// A graded output that arrived before this party's input.
    early: Option<GradedOutput>,
    side: Option<Side>,
    v_next: Option<BigInt>,
    center: PartySet,
    left: PartySet,
    right: PartySet,
    tc: Option<Box<PathTc>>,
    next: Option<Box<Exp>>,
    out: Latch,
}

impl Exp {
    pub fn new(j: u32) -> Self {
        Exp {
            j,
            input: None,
            gc: Gc2k::two_graded(1),
            grade: None,
            early: None,
            side: None,
            v_next: None,
            center: PartySet::new(),
            left: PartySet::new(),
            right: PartySet::new(),
            tc: None,
            next: None,
            out: Latch::default(),
        }
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    /// `2^{j+1} − 1`, the boundary between the two halves.
    fn mid(&self) -> BigInt {
        (BigInt::one() << (self.j + 1)) - 1
    }

    fn emit(&mut self, y: BigInt, cx: &mut Context<'_, BigInt>) {
        if self.out.fire() {
            cx.output(y);
        }
    }

    /// Child outputs are forwarded only after a graded output with grade ≥ 1.
    fn forward(&mut self, ys: Vec<BigInt>, cx: &mut Context<'_, BigInt>) {
        if self.grade.is_some_and(|g| g >= 1) {
            for y in ys {
                self.emit(y, cx);
            }
        }
    }

    fn gc_outputs(&mut self, ys: Vec<GradedOutput>, cx: &mut Context<'_, BigInt>) {
        for y in ys {
            self.on_gc_output(y, cx);
        }
    }

    fn on_gc_output(&mut self, y: GradedOutput, cx: &mut Context<'_, BigInt>) {
        if self.grade.is_some() {
            return;
        }
        let Some(v) = self.input.clone() else {
            self.early.get_or_insert(y);
            return;
        };
        self.grade = Some(y.grade);
        let mid = self.mid();
        let side = match y.value.as_ref().and_then(BitString::to_u64) {
            Some(0) => Some(Side::Left),
            Some(_) => Some(Side::Right),
            None => None,
        };
        match (side, y.grade) {
            (Some(Side::Left), 2) => {
                self.v_next = Some(v.min(mid));
                self.enter(Side::Left, cx);
            }
            (Some(Side::Right), 2) => {
                self.v_next = Some(v.max(mid));
                self.enter(Side::Right, cx);
            }
            (Some(s), g) if g >= 1 => {
                self.v_next = Some(mid);
                cx.multicast(if s == Side::Left { LEFT } else { RIGHT }, Vec::new());
                self.enter(s, cx);
            }
            _ => {
                self.grade = Some(0);
                self.v_next = Some(mid.clone());
                self.emit(mid, cx);
                cx.multicast(CENTER, Vec::new());
                self.try_join(cx);
            }
        }
    }

    /// After a grade-0 output, follow whichever side `t + 1` parties report.
    fn try_join(&mut self, cx: &mut Context<'_, BigInt>) {
        if self.grade != Some(0) || self.side.is_some() {
            return;
        }
        let q = cx.quorum(Quorum::ExpSide);
        if self.left.len() >= q {
            self.enter(Side::Left, cx);
        } else if self.right.len() >= q {
            self.enter(Side::Right, cx);
        }
    }

    fn enter(&mut self, side: Side, cx: &mut Context<'_, BigInt>) {
        if self.side.is_some() {
            return;
        }
        self.side = Some(side);
        let v = self.v_next.clone().expect("set before a side is chosen");
        match side {
            Side::Left => {
                let seg = Segment::dyadic(self.j);
                let a = seg.lo.clone();
                let j = self.j;
                let tc = self.tc.get_or_insert_with(|| Box::new(PathTc::new(j, 2)));
                let rep = drive(cx, TC_SLOT, |c| tc.on_input(TcInput::with_domain(v, seg, a, None), c));
                self.forward(rep.outputs, cx);
            }
            Side::Right => {
                let j = self.j;
                let next = self.next.get_or_insert_with(|| Box::new(Exp::new(j + 1)));
                let rep = drive(cx, NEXT_SLOT, |c| next.on_input(v, c));
                self.forward(rep.outputs, cx);
            }
        }
    }

    fn on_local(&mut self, msg: &Incoming<'_>, cx: &mut Context<'_, BigInt>) {
        if !msg.payload.is_empty() {
            cx.malformed();
            return;
        }
        match msg.kind {
            CENTER => {
                self.center.insert(msg.from);
                if self.center.len() >= cx.quorum(Quorum::ExpCenter) {
                    let mid = self.mid();
                    self.emit(mid, cx);
                }
            }
            LEFT => {
                self.left.insert(msg.from);
                self.try_join(cx);
            }
            RIGHT => {
                self.right.insert(msg.from);
                self.try_join(cx);
            }
            _ => cx.malformed(),
        }
    }
}

impl Automaton for Exp {
    type Input = BigInt;
    type Output = BigInt;
    const KIND: ProtocolKind = ProtocolKind::Exp;

    fn on_input(&mut self, v: BigInt, cx: &mut Context<'_, BigInt>) {
        if self.input.is_some() {
            return;
        }
        if v < (BigInt::one() << self.j) - 1 {
            cx.fault(format!("input {v} below 2^{} − 1", self.j));
            return;
        }
        let bit = u64::from(v >= (BigInt::one() << (self.j + 1)));
        self.input = Some(v);
        let rep = drive(cx, GC_SLOT, |c| self.gc.on_input(BitString::from_u64(bit, 1), c));
        let early = self.early.take();
        self.gc_outputs(early.into_iter().chain(rep.outputs).collect(), cx);
    }

    fn on_message(&mut self, msg: Incoming<'_>, cx: &mut Context<'_, BigInt>) {
        if msg.is_local() {
            self.on_local(&msg, cx);
            return;
        }
        let Some((comp, sub_msg)) = msg.for_child() else {
            cx.malformed();
            return;
        };
        if comp == GC_SLOT {
            let rep = drive(cx, comp, |c| self.gc.on_message(sub_msg, c));
            self.gc_outputs(rep.outputs, cx);
        } else if comp == TC_SLOT {
            // messages may precede entry; the child holds them until its input
            let j = self.j;
            let tc = self.tc.get_or_insert_with(|| Box::new(PathTc::new(j, 2)));
            let rep = drive(cx, comp, |c| tc.on_message(sub_msg, c));
            self.forward(rep.outputs, cx);
        } else if comp == NEXT_SLOT {
            let j = self.j;
            let next = self.next.get_or_insert_with(|| Box::new(Exp::new(j + 1)));
            let rep = drive(cx, comp, |c| next.on_message(sub_msg, c));
            self.forward(rep.outputs, cx);
        } else {
            cx.malformed();
        }
    }
}
