use std::collections::BTreeMap;

use super::GradedOutput;
use crate::sim::{Automaton, Context, Incoming, Latch, PartyId, PartySet, ProtocolKind, Quorum};
use crate::wire::{BitString, WireValue};

pub(crate) const ECHO: u8 = 1;
pub(crate) const ECHO_BOT: u8 = 2;
pub(crate) const PROP: u8 = 3;

/// 3-round 1-graded consensus on `ℓ`-bit strings.
///
/// Deliveries that arrive before the input are buffered and replayed in
/// order once the input is known, since the ⊥ rule compares against it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Gc1 {
    ell: u32,
    input: Option<BitString>,
    buffered: Vec<(PartyId, u8, Vec<u8>)>,
    /// Senders of an echo on ⊥ or on a string other than the input.
    other: PartySet,
    /// `tally[k][b]`: senders of an echo on ⊥ or on a string with bit `k` equal to `b`.
    tally: Vec<[PartySet; 2]>,
    v_sets: Vec<[bool; 2]>,
    w_sets: Vec<[bool; 2]>,
    echoed_bot: bool,
    proposed: bool,
    proposals: BTreeMap<BitString, PartySet>,
    out: Latch,
}

impl Gc1 {
    pub fn new(ell: u32) -> Self {
        assert!(ell >= 1, "strings need at least one bit");
        let ell_us = ell as usize;
        Gc1 {
            ell,
            input: None,
            buffered: Vec::new(),
            other: PartySet::new(),
            tally: vec![[PartySet::new(), PartySet::new()]; ell_us],
            v_sets: vec![[false; 2]; ell_us],
            w_sets: vec![[false; 2]; ell_us],
            echoed_bot: false,
            proposed: false,
            proposals: BTreeMap::new(),
            out: Latch::default(),
        }
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    fn emit(&mut self, y: GradedOutput, cx: &mut Context<'_, GradedOutput>) {
        if self.out.fire() {
            cx.output(y);
        }
    }

    fn deliver(&mut self, from: PartyId, kind: u8, payload: &[u8], cx: &mut Context<'_, GradedOutput>) {
        match kind {
            ECHO => match BitString::decode(payload, &self.ell) {
                Some(v) => self.on_echo(from, Some(v), cx),
                None => cx.malformed(),
            },
            ECHO_BOT if payload.is_empty() => self.on_echo(from, None, cx),
            PROP => match BitString::decode(payload, &self.ell) {
                Some(v) => self.on_prop(from, v, cx),
                None => cx.malformed(),
            },
            _ => cx.malformed(),
        }
    }

    fn on_echo(&mut self, from: PartyId, value: Option<BitString>, cx: &mut Context<'_, GradedOutput>) {
        // repeated echoes are absorbed by the per-sender sets below
        let input = self.input.as_ref().expect("echoes are buffered until input");
        if value.as_ref() != Some(input) && self.other.insert(from) && self.other.len() >= cx.quorum(Quorum::Gc1OtherEcho)
        {
            if !self.echoed_bot {
                self.echoed_bot = true;
                cx.multicast(ECHO_BOT, Vec::new());
            }
            self.emit(GradedOutput::bottom(), cx);
        }
        let (vq, wq) = (cx.quorum(Quorum::Gc1VSet), cx.quorum(Quorum::Gc1WSet));
        // All set updates of one delivery land before the proposal rule runs,
        // so a ⊥ echo completing both bits at once never proposes either.
        let mut w_grew = false;
        for k in 0..self.ell {
            for b in [false, true] {
                if value.as_ref().is_some_and(|v| v.bit(k) != b) {
                    continue;
                }
                let set = &mut self.tally[k as usize][b as usize];
                if !set.insert(from) {
                    continue;
                }
                let count = set.len();
                if count >= vq && !self.v_sets[k as usize][b as usize] {
                    self.v_sets[k as usize][b as usize] = true;
                    if self.v_sets[k as usize] == [true, true] {
                        self.emit(GradedOutput::bottom(), cx);
                    }
                }
                if count >= wq && !self.w_sets[k as usize][b as usize] {
                    self.w_sets[k as usize][b as usize] = true;
                    w_grew = true;
                }
            }
        }
        if w_grew {
            self.maybe_propose(cx);
        }
    }

    fn maybe_propose(&mut self, cx: &mut Context<'_, GradedOutput>) {
        if self.proposed {
            return;
        }
        let mut bits = Vec::with_capacity(self.ell as usize);
        for w in &self.w_sets {
            match w {
                [true, false] => bits.push(false),
                [false, true] => bits.push(true),
                _ => return,
            }
        }
        self.proposed = true;
        cx.multicast(PROP, BitString::from_bits(&bits).to_bytes());
    }

    fn on_prop(&mut self, from: PartyId, value: BitString, cx: &mut Context<'_, GradedOutput>) {
        let set = self.proposals.entry(value.clone()).or_default();
        if !set.insert(from) || set.len() < cx.quorum(Quorum::Gc1Decide) {
            return;
        }
        let y = if Some(&value) == self.input.as_ref() { GradedOutput::new(value, 1) } else { GradedOutput::bottom() };
        self.emit(y, cx);
    }
}

impl Automaton for Gc1 {
    type Input = BitString;
    type Output = GradedOutput;
    const KIND: ProtocolKind = ProtocolKind::Gc1;

    fn on_input(&mut self, input: BitString, cx: &mut Context<'_, GradedOutput>) {
        if self.input.is_some() {
            return;
        }
        if input.len() != self.ell {
            cx.fault(format!("input has {} bits, expected {}", input.len(), self.ell));
            return;
        }
        cx.multicast(ECHO, input.to_bytes());
        self.input = Some(input);
        for (from, kind, payload) in std::mem::take(&mut self.buffered) {
            self.deliver(from, kind, &payload, cx);
        }
    }

    fn on_message(&mut self, msg: Incoming<'_>, cx: &mut Context<'_, GradedOutput>) {
        if !msg.is_local() {
            cx.malformed();
            return;
        }
        if self.input.is_none() {
            self.buffered.push((msg.from, msg.kind, msg.payload.to_vec()));
            return;
        }
        self.deliver(msg.from, msg.kind, msg.payload, cx);
    }

    fn forget_irrelevant(&mut self) {
        if self.input.is_none() {
            return;
        }
        let out = self.out.is_set();
        if out {
            // V sets and proposals only ever lead to an output
            self.proposals.clear();
            self.v_sets.iter_mut().for_each(|v| *v = [false; 2]);
        }
        if self.proposed {
            self.w_sets.iter_mut().for_each(|w| *w = [false; 2]);
        }
        if out && self.proposed {
            self.tally.iter_mut().for_each(|t| *t = Default::default());
        }
        if out && self.echoed_bot {
            self.other = PartySet::new();
        }
    }

    fn is_inert(&self) -> bool {
        self.out.is_set() && self.proposed && self.echoed_bot
    }

    fn absorbs(&self, msg: &Incoming<'_>) -> bool {
        let Some(input) = self.input.as_ref() else {
            return false;
        };
        if !msg.is_local() {
            return false;
        }
        let out = self.out.is_set();
        // which bits the echo counts for; `None` means both
        let value = match msg.kind {
            ECHO => match BitString::decode(msg.payload, &self.ell) {
                Some(v) => Some(v),
                None => return false,
            },
            ECHO_BOT if msg.payload.is_empty() => None,
            PROP => {
                return out
                    || BitString::decode(msg.payload, &self.ell)
                        .is_some_and(|v| self.proposals.get(&v).is_some_and(|s| s.contains(msg.from)))
            }
            _ => return false,
        };
        let other_done = value.as_ref() == Some(input) || self.other.contains(msg.from) || (out && self.echoed_bot);
        let tally_done = (out && self.proposed)
            || (0..self.ell).all(|k| {
                [false, true]
                    .into_iter()
                    .filter(|&b| value.as_ref().is_none_or(|v| v.bit(k) == b))
                    .all(|b| self.tally[k as usize][b as usize].contains(msg.from))
            });
        other_done && tally_done
    }
}
