use std::collections::{BTreeMap, BTreeSet};

use crate::sim::{Automaton, Context, Incoming, PartySet, ProtocolKind, Quorum};
use crate::wire::WireValue;

pub const ECHO: u8 = 1;
pub const READY: u8 = 2;

/// Three-round termination for inputs drawn from at most two values.
///
/// A party outputs and terminates once it holds a value, has sent READY and
/// has seen `2t + 1` READYs. Echoes on a value are only ever sent for an
/// honest input, so the output is always some honest party's input.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term<V: WireValue> {
    shape: V::Shape,
    y: Option<V>,
    echoed: BTreeSet<V>,
    echoes: BTreeMap<V, PartySet>,
    ready: PartySet,
    ready_sent: bool,
    done: bool,
}

impl<V: WireValue> Term<V> {
    pub fn new(shape: V::Shape) -> Self {
        Term {
            shape,
            y: None,
            echoed: BTreeSet::new(),
            echoes: BTreeMap::new(),
            ready: PartySet::new(),
            ready_sent: false,
            done: false,
        }
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Echoes on `v` only drive adopting `v` and sending READY.
    fn echoes_settled(&self, v: &V) -> bool {
        self.ready_sent && self.echoed.contains(v)
    }

    fn adopt(&mut self, v: V, cx: &mut Context<'_, V>) {
        if self.y.is_none() {
            self.y = Some(v.clone());
        }
        if !self.echoed.contains(&v) {
            cx.multicast(ECHO, v.to_bytes());
            self.echoed.insert(v);
        }
    }

    fn progress(&mut self, cx: &mut Context<'_, V>) {
        if !self.ready_sent {
            let from_echo = cx.quorum(Quorum::TermReadyFromEcho);
            if self.ready.len() >= cx.quorum(Quorum::TermReadyAmplify)
                || self.echoes.values().any(|s| s.len() >= from_echo)
            {
                self.ready_sent = true;
                cx.multicast(READY, Vec::new());
            }
        }
        if self.ready_sent && self.ready.len() >= cx.quorum(Quorum::TermDecide) {
            if let Some(y) = self.y.clone() {
                self.done = true;
                cx.output(y);
                cx.terminate();
            }
        }
    }
}

impl<V: WireValue> Automaton for Term<V> {
    type Input = V;
    type Output = V;
    const KIND: ProtocolKind = ProtocolKind::Term;
    const TERMINATING: bool = true;

    fn on_input(&mut self, v: V, cx: &mut Context<'_, V>) {
        if self.done {
            return;
        }
        self.adopt(v, cx);
        self.progress(cx);
    }

    fn on_message(&mut self, msg: Incoming<'_>, cx: &mut Context<'_, V>) {
        if self.done {
            return;
        }
        if !msg.is_local() {
            cx.malformed();
            return;
        }
        match msg.kind {
            ECHO => {
                let Some(v) = V::decode(msg.payload, &self.shape) else {
                    cx.malformed();
                    return;
                };
                if self.echoes_settled(&v) {
                    return;
                }
                let tally = self.echoes.entry(v.clone()).or_default();
                tally.insert(msg.from);
                if tally.len() >= cx.quorum(Quorum::TermEchoAmplify) {
                    self.adopt(v, cx);
                }
            }
            READY if msg.payload.is_empty() => {
                self.ready.insert(msg.from);
            }
            _ => {
                cx.malformed();
                return;
            }
        }
        self.progress(cx);
    }

    fn is_inert(&self) -> bool {
        self.done
    }

    fn forget_irrelevant(&mut self) {
        if self.done {
            self.echoes.clear();
            self.echoed.clear();
            self.ready = PartySet::new();
        }
        let dead: Vec<V> = self.echoes.keys().filter(|v| self.echoes_settled(v)).cloned().collect();
        for v in dead {
            self.echoes.remove(&v);
        }
    }

    fn absorbs(&self, msg: &Incoming<'_>) -> bool {
        if self.done {
            return true;
        }
        if !msg.is_local() {
            return false;
        }
        match msg.kind {
            READY => self.ready.contains(msg.from),
            ECHO => V::decode(msg.payload, &self.shape).is_some_and(|v| {
                self.echoes_settled(&v) || self.echoes.get(&v).is_some_and(|s| s.contains(msg.from))
            }),
            _ => false,
        }
    }
}
