//! The party-automaton abstraction shared by every protocol.
//!
//! A protocol instance is a pure state machine. It reacts to its input and to
//! deliveries, and reports effects (sends, outputs, termination) through a
//! [`Context`]. Nested instances get a child context whose sends are tagged
//! with the child's path, so a parent only ever sees its children's outputs.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::party::PartyId;
use super::tag::{InstanceTag, ProtocolKind, TagComponent};

/// Quorum thresholds used by the protocols. Each one resolves against `(n, t)`
/// at runtime so the mutation harness can perturb a single threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quorum {
    /// GC1: echoes on ⊥ or on strings other than the own input (t+1).
    Gc1OtherEcho,
    /// GC1: V-set bit threshold (t+1).
    Gc1VSet,
    /// GC1: W-set bit threshold (2t+1).
    Gc1WSet,
    /// GC1: proposals needed to output (n−t).
    Gc1Decide,
    /// Prop: echo amplification (t+1).
    PropAmplify,
    /// Prop: echoes needed to propose (2t+1).
    PropPropose,
    /// Prop: proposals needed to output (n−t).
    PropDecide,
    /// Term: echo amplification (t+1).
    TermEchoAmplify,
    /// Term: READY amplification (t+1).
    TermReadyAmplify,
    /// Term: echoes on one value before READY (2t+1).
    TermReadyFromEcho,
    /// Term: READY messages needed to terminate (2t+1).
    TermDecide,
    /// Exp: LEFT/RIGHT messages needed to pick a side (t+1).
    ExpSide,
    /// Exp: CENTER messages needed to output (t+1).
    ExpCenter,
}

impl Quorum {
    pub fn base(self, n: usize, t: usize) -> usize {
        use Quorum::*;
        match self {
            Gc1OtherEcho | Gc1VSet | PropAmplify | TermEchoAmplify | TermReadyAmplify | ExpSide
            | ExpCenter => t + 1,
            Gc1WSet | PropPropose | TermReadyFromEcho | TermDecide => 2 * t + 1,
            Gc1Decide | PropDecide => n - t,
        }
    }
}

/// Static parameters of one party's execution environment.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Env {
    pub n: usize,
    pub t: usize,
    pub me: PartyId,
    /// A threshold lowered by one, for mutation testing.
    pub mutation: Option<Quorum>,
}

impl Env {
    pub fn new(n: usize, t: usize, me: PartyId) -> Self {
        Env { n, t, me, mutation: None }
    }

    pub fn quorum(&self, q: Quorum) -> usize {
        let base = q.base(self.n, self.t);
        if self.mutation == Some(q) {
            base.saturating_sub(1)
        } else {
            base
        }
    }
}

/// A message emitted by an automaton, addressed by absolute instance tag.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Outgoing {
    /// `None` means multicast to every party (including the sender).
    pub to: Option<PartyId>,
    pub tag: InstanceTag,
    pub kind: u8,
    pub payload: Vec<u8>,
}

/// Side effects accumulated while one automaton step runs.
#[derive(Debug, Default)]
pub struct Effects {
    pub outbox: Vec<Outgoing>,
    pub malformed: u64,
    pub faults: Vec<String>,
}

/// A delivery routed to an instance. `path` is the part of the tag below it.
#[derive(Clone, Copy)]
pub struct Incoming<'m> {
    pub from: PartyId,
    pub path: &'m [TagComponent],
    pub kind: u8,
    pub payload: &'m [u8],
}

impl<'m> Incoming<'m> {
    /// Splits off the first path component when the message targets a child.
    pub fn for_child(self) -> Option<(TagComponent, Incoming<'m>)> {
        let (&first, rest) = self.path.split_first()?;
        Some((first, Incoming { path: rest, ..self }))
    }

    pub fn is_local(&self) -> bool {
        self.path.is_empty()
    }
}

impl fmt::Debug for Incoming<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Incoming")
            .field("from", &self.from)
            .field("path", &self.path)
            .field("kind", &self.kind)
            .field("payload", &self.payload)
            .finish()
    }
}

/// Effect sink handed to an automaton for one step.
pub struct Context<'a, O> {
    env: &'a Env,
    fx: &'a mut Effects,
    prefix: InstanceTag,
    outputs: Vec<O>,
    terminated: bool,
}

/// What a child instance reported during one step.
#[derive(Debug)]
pub struct Reported<O> {
    pub outputs: Vec<O>,
    pub terminated: bool,
}

impl<'a, O> Context<'a, O> {
    pub fn new(env: &'a Env, fx: &'a mut Effects, prefix: InstanceTag) -> Self {
        Context { env, fx, prefix, outputs: Vec::new(), terminated: false }
    }

    pub fn env(&self) -> &Env {
        self.env
    }

    pub fn n(&self) -> usize {
        self.env.n
    }

    pub fn t(&self) -> usize {
        self.env.t
    }

    pub fn me(&self) -> PartyId {
        self.env.me
    }

    pub fn quorum(&self, q: Quorum) -> usize {
        self.env.quorum(q)
    }

    pub fn tag(&self) -> &InstanceTag {
        &self.prefix
    }

    pub fn multicast(&mut self, kind: u8, payload: Vec<u8>) {
        self.fx.outbox.push(Outgoing { to: None, tag: self.prefix.clone(), kind, payload });
    }

    pub fn send(&mut self, to: PartyId, kind: u8, payload: Vec<u8>) {
        self.fx.outbox.push(Outgoing { to: Some(to), tag: self.prefix.clone(), kind, payload });
    }

    pub fn output(&mut self, o: O) {
        self.outputs.push(o);
    }

    /// Signals that this instance has terminated. At the root this halts the party.
    pub fn terminate(&mut self) {
        self.terminated = true;
    }

    /// Records a delivery that failed to decode.
    pub fn malformed(&mut self) {
        self.fx.malformed += 1;
    }

    /// Records a broken internal invariant without aborting the run.
    pub fn fault(&mut self, what: impl Into<String>) {
        self.fx.faults.push(format!("{}: {}", self.prefix, what.into()));
    }

    /// Context for a nested instance at `self.tag()/comp`.
    pub fn child<C>(&mut self, comp: TagComponent) -> Context<'_, C> {
        Context {
            env: self.env,
            fx: &mut *self.fx,
            prefix: self.prefix.child(comp),
            outputs: Vec::new(),
            terminated: false,
        }
    }

    pub fn finish(self) -> Reported<O> {
        Reported { outputs: self.outputs, terminated: self.terminated }
    }
}

/// A protocol instance run by one party.
pub trait Automaton {
    type Input;
    type Output;

    const KIND: ProtocolKind;
    /// Whether completion is signalled by termination rather than first output.
    const TERMINATING: bool = false;

    fn on_input(&mut self, input: Self::Input, cx: &mut Context<'_, Self::Output>);

    fn on_message(&mut self, msg: Incoming<'_>, cx: &mut Context<'_, Self::Output>);

    /// Clears state that can no longer influence any future send, output or
    /// termination, so equivalent states compare equal. Exploration only.
    fn forget_irrelevant(&mut self) {}

    /// `true` if no future input or delivery can cause any effect.
    fn is_inert(&self) -> bool {
        false
    }

    /// `true` if delivering `msg` now or at any later point has no effect and
    /// leaves the state unchanged. Exploration only; `false` is always safe.
    fn absorbs(&self, _msg: &Incoming<'_>) -> bool {
        false
    }
}

/// Runs `f` against a child automaton and returns what it reported.
pub fn drive<P, C, F>(cx: &mut Context<'_, P>, comp: TagComponent, f: F) -> Reported<C>
where
    F: FnOnce(&mut Context<'_, C>),
{
    let mut sub = cx.child::<C>(comp);
    f(&mut sub);
    sub.finish()
}

/// One-shot latch on an output channel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Latch(bool);

impl Latch {
    /// Returns `true` the first time it is called.
    pub fn fire(&mut self) -> bool {
        !std::mem::replace(&mut self.0, true)
    }

    pub fn is_set(&self) -> bool {
        self.0
    }
}
