//! Deterministic discrete-event simulation of an asynchronous authenticated
//! network under an adaptive byzantine adversary.
//!
//! Virtual time is an exact rational. Deliveries that fall on the same
//! instant are ordered by `(deliver_time, receiver, sender, per-sender seq)`;
//! input arrivals at an instant precede deliveries at that instant.

pub mod adversary;
pub mod automaton;
pub mod party;
pub mod tag;

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Debug;

use num_rational::Rational64;
use serde::Serialize;

pub use adversary::{Adversary, EnvelopeView, Injection, NetControl, NetError};
pub use automaton::{drive, Automaton, Context, Effects, Env, Incoming, Latch, Outgoing, Quorum, Reported};
pub use party::{PartyId, PartySet, MAX_PARTIES};
pub use tag::{count_bits, InstanceTag, ProtocolKind, TagComponent};

/// Virtual time.
pub type VTime = Rational64;

/// Default ceiling on processed events per run.
pub const DEFAULT_EVENT_BUDGET: u64 = 10_000_000;

/// Environment variable overriding [`DEFAULT_EVENT_BUDGET`].
pub const EVENT_BUDGET_VAR: &str = "APPROXON_EVENT_BUDGET";

pub fn default_event_budget() -> u64 {
    std::env::var(EVENT_BUDGET_VAR)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_EVENT_BUDGET)
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("event budget of {0} events exceeded")]
    EventBudgetExceeded(u64),
    #[error("adversary `{strategy}` broke the model: {err}")]
    Adversary { strategy: String, err: NetError },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("honest party {0} never completed")]
pub struct NotQuiescent(pub PartyId);

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub n: usize,
    pub t: usize,
    /// Recorded in reports; strategies receive their own seed at construction.
    pub seed: u64,
    /// Per-party input arrival time; `None` means the party never acquires one.
    pub input_times: Vec<Option<VTime>>,
    pub event_budget: u64,
    pub record_trace: bool,
    pub mutation: Option<Quorum>,
}

impl SimConfig {
    /// All parties acquire their inputs at time 0.
    pub fn new(n: usize, t: usize, seed: u64) -> Self {
        SimConfig {
            n,
            t,
            seed,
            input_times: vec![Some(VTime::from_integer(0)); n],
            event_budget: default_event_budget(),
            record_trace: false,
            mutation: None,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n == 0 {
            return Err(SimError::InvalidConfig("n must be positive".into()));
        }
        if self.n > party::MAX_PARTIES {
            return Err(SimError::InvalidConfig(format!("n = {} exceeds {}", self.n, party::MAX_PARTIES)));
        }
        if 3 * self.t >= self.n {
            return Err(SimError::InvalidConfig(format!(
                "need t < n/3, got n = {}, t = {}",
                self.n, self.t
            )));
        }
        if self.input_times.len() != self.n {
            return Err(SimError::InvalidConfig(format!(
                "input_times has {} entries for n = {}",
                self.input_times.len(),
                self.n
            )));
        }
        if self.input_times.iter().flatten().any(|t| *t < VTime::from_integer(0)) {
            return Err(SimError::InvalidConfig("input times must be non-negative".into()));
        }
        Ok(())
    }
}

/// Complexity measurements of one execution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceMetrics {
    /// Largest delay over delivered envelopes between honest parties.
    #[serde(serialize_with = "ser_time")]
    pub delta_observed: VTime,
    #[serde(serialize_with = "ser_opt_time")]
    pub t_inputs_done: Option<VTime>,
    #[serde(serialize_with = "ser_opt_time")]
    pub t_outputs_done: Option<VTime>,
    /// `None` when some honest party never completed.
    #[serde(serialize_with = "ser_opt_time")]
    pub rounds: Option<VTime>,
    pub messages_total: u64,
    pub bits_total: u64,
    pub per_party_messages: Vec<u64>,
    pub per_party_multicasts: Vec<u64>,
}

fn ser_time<S: serde::Serializer>(t: &VTime, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_time(t))
}

fn ser_opt_time<S: serde::Serializer>(t: &Option<VTime>, s: S) -> Result<S::Ok, S::Error> {
    match t {
        Some(t) => s.serialize_str(&fmt_time(t)),
        None => s.serialize_none(),
    }
}

pub fn fmt_time(t: &VTime) -> String {
    if t.is_integer() {
        t.numer().to_string()
    } else {
        format!("{}/{}", t.numer(), t.denom())
    }
}

/// One entry of the exportable event trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Input {
        #[serde(serialize_with = "ser_time")]
        time: VTime,
        party: PartyId,
    },
    Send {
        #[serde(serialize_with = "ser_time")]
        time: VTime,
        id: u64,
        sender: PartyId,
        receiver: PartyId,
        tag: String,
        kind: u8,
        payload: String,
        /// Whether the sender was honest when it sent.
        honest: bool,
        #[serde(serialize_with = "ser_opt_time")]
        deliver_time: Option<VTime>,
    },
    Deliver {
        #[serde(serialize_with = "ser_time")]
        time: VTime,
        id: u64,
        sender: PartyId,
        receiver: PartyId,
    },
    Output {
        #[serde(serialize_with = "ser_time")]
        time: VTime,
        party: PartyId,
        value: String,
    },
    Corrupt {
        #[serde(serialize_with = "ser_time")]
        time: VTime,
        party: PartyId,
    },
    Halt {
        #[serde(serialize_with = "ser_time")]
        time: VTime,
        party: PartyId,
    },
}

/// A send as kept in the trace, with its decoded tag.
#[derive(Clone, Debug)]
pub struct SentEnvelope {
    pub id: u64,
    pub sender: PartyId,
    pub receiver: PartyId,
    pub tag: InstanceTag,
    pub kind: u8,
    pub payload: Vec<u8>,
    pub send_time: VTime,
    pub deliver_time: Option<VTime>,
    pub honest: bool,
}

/// Everything observable about a finished run.
#[derive(Clone, Debug)]
pub struct SimOutcome<O> {
    /// Parties never corrupted during the run.
    pub honest: Vec<bool>,
    /// First output of each party, with its time.
    pub outputs: Vec<Option<(VTime, O)>>,
    pub halt_times: Vec<Option<VTime>>,
    pub input_times: Vec<Option<VTime>>,
    /// Completion time: first output, or halt for terminating protocols.
    pub completion: Vec<Option<VTime>>,
    pub metrics: TraceMetrics,
    pub malformed: u64,
    pub faults: Vec<String>,
    pub events: u64,
    pub trace: Option<Vec<TraceEvent>>,
    /// Envelopes in send order; only kept when tracing.
    pub sent: Option<Vec<SentEnvelope>>,
}

impl<O> SimOutcome<O> {
    pub fn honest_parties(&self) -> impl Iterator<Item = PartyId> + '_ {
        self.honest.iter().enumerate().filter(|(_, &h)| h).map(|(i, _)| PartyId(i as u32))
    }

    /// First outputs of honest parties; `None` for honest parties that never output.
    pub fn honest_outputs(&self) -> Vec<(PartyId, Option<&O>)> {
        self.honest_parties()
            .map(|p| (p, self.outputs[p.index()].as_ref().map(|(_, o)| o)))
            .collect()
    }

    /// Outputs of honest parties, failing if one is missing.
    pub fn require_outputs(&self) -> Result<Vec<(PartyId, &O)>, NotQuiescent> {
        self.honest_outputs().into_iter().map(|(p, o)| o.map(|o| (p, o)).ok_or(NotQuiescent(p))).collect()
    }

    pub fn trace_json_lines(&self) -> String {
        let mut s = String::new();
        for ev in self.trace.iter().flatten() {
            s.push_str(&serde_json::to_string(ev).expect("trace events serialize"));
            s.push('\n');
        }
        s
    }
}

/// Rounds of a completed run: `(last completion − last input) / delta_observed`.
pub fn measure_rounds<O>(out: &SimOutcome<O>) -> Result<VTime, NotQuiescent> {
    for p in out.honest_parties() {
        if out.completion[p.index()].is_none() {
            return Err(NotQuiescent(p));
        }
    }
    Ok(out.metrics.rounds.unwrap_or_else(|| VTime::from_integer(0)))
}

pub(crate) fn rounds_formula(inputs_done: Option<VTime>, outputs_done: VTime, delta: VTime) -> VTime {
    let zero = VTime::from_integer(0);
    let start = inputs_done.unwrap_or(zero);
    let span = outputs_done - start;
    if span <= zero || delta == zero {
        zero
    } else {
        span / delta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Input = 0,
    Deliver = 1,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct QueueKey {
    time: VTime,
    kind: EventKind,
    receiver: PartyId,
    sender: PartyId,
    seq: u64,
    id: u64,
}

struct Envelope {
    sender: PartyId,
    receiver: PartyId,
    tag: InstanceTag,
    kind: u8,
    payload: Vec<u8>,
    send_time: VTime,
    honest: bool,
}

struct Kernel<'a, A: Automaton> {
    cfg: &'a SimConfig,
    envs: Vec<Env>,
    parties: Vec<A>,
    pending_inputs: Vec<Option<A::Input>>,
    adversary: &'a mut dyn Adversary,
    net: NetControl,
    queue: BinaryHeap<Reverse<QueueKey>>,
    envelopes: Vec<Envelope>,
    seq: Vec<u64>,
    halted: Vec<Option<VTime>>,
    outputs: Vec<Option<(VTime, A::Output)>>,
    input_times: Vec<Option<VTime>>,
    trace: Option<Vec<TraceEvent>>,
    sent: Option<Vec<SentEnvelope>>,
    delta: VTime,
    per_party_messages: Vec<u64>,
    per_party_multicasts: Vec<u64>,
    bits_total: u64,
    malformed: u64,
    faults: Vec<String>,
    root: InstanceTag,
}

/// Runs one execution to quiescence.
///
/// `factory` builds the automaton of every party (corrupted ones are never
/// stepped). `inputs[i]` is delivered to party `i` at `config.input_times[i]`.
pub fn run_simulation<A, F>(
    config: &SimConfig,
    mut factory: F,
    inputs: Vec<Option<A::Input>>,
    adversary: &mut dyn Adversary,
) -> Result<SimOutcome<A::Output>, SimError>
where
    A: Automaton,
    A::Output: Clone + Debug,
    F: FnMut(PartyId) -> A,
{
    config.validate()?;
    if inputs.len() != config.n {
        return Err(SimError::InvalidConfig(format!("{} inputs for n = {}", inputs.len(), config.n)));
    }
    let n = config.n;
    let k = Kernel {
        cfg: config,
        envs: (0..n)
            .map(|i| Env { n, t: config.t, me: PartyId(i as u32), mutation: config.mutation })
            .collect(),
        parties: (0..n).map(|i| factory(PartyId(i as u32))).collect(),
        pending_inputs: inputs,
        adversary,
        net: NetControl::new(n, config.t),
        queue: BinaryHeap::new(),
        envelopes: Vec::new(),
        seq: vec![0; n],
        halted: vec![None; n],
        outputs: (0..n).map(|_| None).collect(),
        input_times: vec![None; n],
        trace: config.record_trace.then(Vec::new),
        sent: config.record_trace.then(Vec::new),
        delta: VTime::from_integer(0),
        per_party_messages: vec![0; n],
        per_party_multicasts: vec![0; n],
        bits_total: 0,
        malformed: 0,
        faults: Vec::new(),
        root: InstanceTag::root(A::KIND),
    };
    k.run()
}

impl<'a, A> Kernel<'a, A>
where
    A: Automaton,
    A::Output: Clone + Debug,
{
    fn run(mut self) -> Result<SimOutcome<A::Output>, SimError> {
        self.adversary.start(&mut self.net);
        self.absorb_adversary()?;
        for (i, t) in self.cfg.input_times.iter().enumerate() {
            if let Some(t) = t {
                if self.pending_inputs[i].is_some() {
                    let p = PartyId(i as u32);
                    self.queue.push(Reverse(QueueKey {
                        time: *t,
                        kind: EventKind::Input,
                        receiver: p,
                        sender: p,
                        seq: 0,
                        id: u64::MAX,
                    }));
                }
            }
        }
        let mut events: u64 = 0;
        while let Some(Reverse(ev)) = self.queue.pop() {
            events += 1;
            if events > self.cfg.event_budget {
                return Err(SimError::EventBudgetExceeded(self.cfg.event_budget));
            }
            self.net.now = ev.time;
            match ev.kind {
                EventKind::Input => self.handle_input(ev.receiver)?,
                EventKind::Deliver => self.handle_delivery(ev.id as usize)?,
            }
        }
        Ok(self.finish(events))
    }

    fn record(&mut self, ev: TraceEvent) {
        if let Some(tr) = self.trace.as_mut() {
            tr.push(ev);
        }
    }

    fn is_active(&self, p: PartyId) -> bool {
        !self.net.is_corrupted(p) && self.halted[p.index()].is_none()
    }

    fn handle_input(&mut self, p: PartyId) -> Result<(), SimError> {
        let Some(input) = self.pending_inputs[p.index()].take() else {
            return Ok(());
        };
        if !self.is_active(p) {
            return Ok(());
        }
        let now = self.net.now;
        self.input_times[p.index()] = Some(now);
        self.record(TraceEvent::Input { time: now, party: p });
        self.adversary.on_input(p, &mut self.net);
        self.absorb_adversary()?;
        let mut fx = Effects::default();
        let reported = {
            let mut cx = Context::new(&self.envs[p.index()], &mut fx, self.root.clone());
            self.parties[p.index()].on_input(input, &mut cx);
            cx.finish()
        };
        self.apply(p, fx, reported)
    }

    fn handle_delivery(&mut self, id: usize) -> Result<(), SimError> {
        let now = self.net.now;
        let (sender, receiver, honest, send_time) = {
            let e = &self.envelopes[id];
            (e.sender, e.receiver, e.honest, e.send_time)
        };
        self.record(TraceEvent::Deliver { time: now, id: id as u64, sender, receiver });
        if honest && !self.net.is_corrupted(receiver) {
            let d = now - send_time;
            if d > self.delta {
                self.delta = d;
            }
        }
        if !self.is_active(receiver) {
            return Ok(());
        }
        let mut fx = Effects::default();
        let reported = {
            let e = &self.envelopes[id];
            let root = &self.root.components()[0];
            let mut cx = Context::new(&self.envs[receiver.index()], &mut fx, self.root.clone());
            match e.tag.components().split_first() {
                Some((first, rest)) if first == root => {
                    let msg = Incoming { from: e.sender, path: rest, kind: e.kind, payload: &e.payload };
                    self.parties[receiver.index()].on_message(msg, &mut cx);
                }
                _ => cx.malformed(),
            }
            cx.finish()
        };
        self.apply(receiver, fx, reported)
    }

    fn apply(&mut self, p: PartyId, fx: Effects, reported: Reported<A::Output>) -> Result<(), SimError> {
        let now = self.net.now;
        self.malformed += fx.malformed;
        self.faults.extend(fx.faults.into_iter().map(|f| format!("{p}: {f}")));
        for o in reported.outputs {
            self.record(TraceEvent::Output { time: now, party: p, value: format!("{o:?}") });
            if self.outputs[p.index()].is_none() {
                self.outputs[p.index()] = Some((now, o));
            }
        }
        for out in fx.outbox {
            if self.net.is_corrupted(p) {
                break;
            }
            self.dispatch(p, out)?;
        }
        if reported.terminated && self.halted[p.index()].is_none() && !self.net.is_corrupted(p) {
            self.halted[p.index()] = Some(now);
            self.record(TraceEvent::Halt { time: now, party: p });
        }
        Ok(())
    }

    fn dispatch(&mut self, sender: PartyId, out: Outgoing) -> Result<(), SimError> {
        let now = self.net.now;
        let receivers: Vec<PartyId> = match out.to {
            Some(r) => vec![r],
            None => (0..self.cfg.n).map(|i| PartyId(i as u32)).collect(),
        };
        if out.to.is_none() {
            self.per_party_multicasts[sender.index()] += 1;
        }
        let delays = {
            let views: Vec<EnvelopeView<'_>> = receivers
                .iter()
                .map(|&r| EnvelopeView {
                    sender,
                    receiver: r,
                    tag: &out.tag,
                    kind: out.kind,
                    payload: &out.payload,
                    send_time: now,
                })
                .collect();
            self.adversary.schedule(&views, &mut self.net)
        };
        let strategy = self.adversary.name().to_string();
        if delays.len() != receivers.len() {
            return Err(SimError::Adversary { strategy, err: NetError::NonPositiveDelay });
        }
        let corrupted_now = self.net.is_corrupted(sender);
        if delays.iter().any(|d| d.is_none()) && !corrupted_now {
            return Err(SimError::Adversary { strategy, err: NetError::Forgery(sender) });
        }
        let bits = count_bits(&out.tag, out.payload.len());
        for (r, d) in receivers.into_iter().zip(delays) {
            if let Some(d) = d {
                if d <= VTime::from_integer(0) {
                    return Err(SimError::Adversary { strategy, err: NetError::NonPositiveDelay });
                }
            }
            // a sender corrupted while multicasting no longer sends honestly
            let honest = !corrupted_now;
            if honest {
                self.per_party_messages[sender.index()] += 1;
                self.bits_total += bits;
            }
            self.enqueue(sender, r, out.tag.clone(), out.kind, out.payload.clone(), d, honest);
        }
        self.absorb_adversary()
    }

    #[allow(clippy::too_many_arguments)]
    fn enqueue(
        &mut self,
        sender: PartyId,
        receiver: PartyId,
        tag: InstanceTag,
        kind: u8,
        payload: Vec<u8>,
        delay: Option<VTime>,
        honest: bool,
    ) {
        let now = self.net.now;
        let id = self.envelopes.len() as u64;
        let seq = self.seq[sender.index()];
        self.seq[sender.index()] += 1;
        let deliver_time = delay.map(|d| now + d);
        if self.trace.is_some() {
            self.record(TraceEvent::Send {
                time: now,
                id,
                sender,
                receiver,
                tag: tag.to_string(),
                kind,
                payload: hex(&payload),
                honest,
                deliver_time,
            });
            if let Some(sent) = self.sent.as_mut() {
                sent.push(SentEnvelope {
                    id,
                    sender,
                    receiver,
                    tag: tag.clone(),
                    kind,
                    payload: payload.clone(),
                    send_time: now,
                    deliver_time,
                    honest,
                });
            }
        }
        self.envelopes.push(Envelope { sender, receiver, tag, kind, payload, send_time: now, honest });
        if let Some(time) = deliver_time {
            self.queue.push(Reverse(QueueKey { time, kind: EventKind::Deliver, receiver, sender, seq, id }));
        }
    }

    fn absorb_adversary(&mut self) -> Result<(), SimError> {
        let now = self.net.now;
        for p in std::mem::take(&mut self.net.newly_corrupted) {
            self.record(TraceEvent::Corrupt { time: now, party: p });
        }
        for inj in std::mem::take(&mut self.net.injections) {
            self.enqueue(inj.from, inj.to, inj.tag, inj.kind, inj.payload, Some(inj.delay), false);
        }
        Ok(())
    }

    fn finish(self, events: u64) -> SimOutcome<A::Output> {
        let n = self.cfg.n;
        let honest: Vec<bool> = (0..n).map(|i| !self.net.corrupted[i]).collect();
        let completion: Vec<Option<VTime>> = (0..n)
            .map(|i| {
                if A::TERMINATING {
                    self.halted[i]
                } else {
                    self.outputs[i].as_ref().map(|(t, _)| *t)
                }
            })
            .collect();
        let t_inputs_done = (0..n).filter(|&i| honest[i]).filter_map(|i| self.input_times[i]).max();
        let all_done = (0..n).filter(|&i| honest[i]).all(|i| completion[i].is_some());
        let t_outputs_done = (0..n).filter(|&i| honest[i]).filter_map(|i| completion[i]).max();
        let rounds = match (all_done, t_outputs_done) {
            (true, Some(done)) => Some(rounds_formula(t_inputs_done, done, self.delta)),
            (true, None) => Some(VTime::from_integer(0)),
            _ => None,
        };
        let metrics = TraceMetrics {
            delta_observed: self.delta,
            t_inputs_done,
            t_outputs_done,
            rounds,
            messages_total: self.per_party_messages.iter().sum(),
            bits_total: self.bits_total,
            per_party_messages: self.per_party_messages,
            per_party_multicasts: self.per_party_multicasts,
        };
        SimOutcome {
            honest,
            outputs: self.outputs,
            halt_times: self.halted,
            input_times: self.input_times,
            completion,
            metrics,
            malformed: self.malformed,
            faults: self.faults,
            events,
            trace: self.trace,
            sent: self.sent,
        }
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests;
