use std::collections::{BTreeMap, BTreeSet};

use crate::sim::{Automaton, Context, Incoming, Latch, PartySet, ProtocolKind, Quorum};
use crate::wire::WireValue;

pub(crate) const ECHO: u8 = 1;
pub(crate) const PROP: u8 = 2;

/// 3-round proposal: outputs a set of one or two values such that honest
/// output sets pairwise intersect, provided honest inputs span at most two
/// values.
///
/// The instance runs before it has an input, so echo amplification can
/// happen early.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Prop<V: WireValue> {
    shape: V::Shape,
    has_input: bool,
    echoed: BTreeSet<V>,
    echoes: BTreeMap<V, PartySet>,
    accepted: BTreeSet<V>,
    proposed: bool,
    proposals: BTreeMap<V, PartySet>,
    out: Latch,
}

impl<V: WireValue> Prop<V> {
    pub fn new(shape: V::Shape) -> Self {
        Prop {
            shape,
            has_input: false,
            echoed: BTreeSet::new(),
            echoes: BTreeMap::new(),
            accepted: BTreeSet::new(),
            proposed: false,
            proposals: BTreeMap::new(),
            out: Latch::default(),
        }
    }

    /// An echo count only drives echoing, accepting and proposing; once all
    /// three are settled for `v` the count is dead.
    fn echoes_settled(&self, v: &V) -> bool {
        self.proposed && self.echoed.contains(v) && (self.out.is_set() || self.accepted.contains(v))
    }

    fn echo(&mut self, v: &V, cx: &mut Context<'_, Vec<V>>) {
        if self.echoed.insert(v.clone()) {
            cx.multicast(ECHO, v.to_bytes());
        }
    }

    fn on_echo(&mut self, from: crate::sim::PartyId, v: V, cx: &mut Context<'_, Vec<V>>) {
        if self.echoes_settled(&v) {
            return;
        }
        let set = self.echoes.entry(v.clone()).or_default();
        if !set.insert(from) {
            return;
        }
        let count = set.len();
        if count >= cx.quorum(Quorum::PropAmplify) {
            self.echo(&v, cx);
            if self.accepted.insert(v.clone()) && self.accepted.len() == 2 && self.out.fire() {
                cx.output(self.accepted.iter().cloned().collect());
            }
        }
        if count >= cx.quorum(Quorum::PropPropose) && !self.proposed {
            self.proposed = true;
            cx.multicast(PROP, v.to_bytes());
        }
    }

    fn on_prop(&mut self, from: crate::sim::PartyId, v: V, cx: &mut Context<'_, Vec<V>>) {
        if self.out.is_set() {
            return;
        }
        let set = self.proposals.entry(v.clone()).or_default();
        if set.insert(from) && set.len() >= cx.quorum(Quorum::PropDecide) && self.out.fire() {
            cx.output(vec![v]);
        }
    }
}

impl<V: WireValue> Automaton for Prop<V> {
    type Input = V;
    /// Sorted, one or two elements.
    type Output = Vec<V>;
    const KIND: ProtocolKind = ProtocolKind::Prop;

    fn on_input(&mut self, input: V, cx: &mut Context<'_, Vec<V>>) {
        if std::mem::replace(&mut self.has_input, true) {
            return;
        }
        self.echo(&input, cx);
    }

    fn forget_irrelevant(&mut self) {
        if self.out.is_set() {
            self.accepted.clear();
            self.proposals.clear();
        }
        let dead: Vec<V> = self.echoes.keys().filter(|v| self.echoes_settled(v)).cloned().collect();
        for v in dead {
            self.echoes.remove(&v);
        }
    }

    fn absorbs(&self, msg: &Incoming<'_>) -> bool {
        let Some(v) = msg.is_local().then(|| V::decode(msg.payload, &self.shape)).flatten() else {
            return false;
        };
        let seen = |m: &BTreeMap<V, PartySet>| m.get(&v).is_some_and(|s| s.contains(msg.from));
        match msg.kind {
            ECHO => self.echoes_settled(&v) || seen(&self.echoes),
            PROP => self.out.is_set() || seen(&self.proposals),
            _ => false,
        }
    }

    fn on_message(&mut self, msg: Incoming<'_>, cx: &mut Context<'_, Vec<V>>) {
        if !msg.is_local() {
            cx.malformed();
            return;
        }
        let Some(v) = V::decode(msg.payload, &self.shape) else {
            cx.malformed();
            return;
        };
        match msg.kind {
            ECHO => self.on_echo(msg.from, v, cx),
            PROP => self.on_prop(msg.from, v, cx),
            _ => cx.malformed(),
        }
    }
}
