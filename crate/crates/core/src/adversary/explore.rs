//! Exhaustive enumeration of timed schedules and byzantine choices.
//!
//! Time advances in unit steps. Every honest envelope sent during step `τ`
//! arrives at step `τ + 1` or, when the delay set has two elements, at
//! `τ + 2`. Deliveries within one step follow the simulator's order
//! (receiver, then sender, then send order), so every explored schedule is a
//! concrete [`run_simulation`](crate::sim::run_simulation) schedule. A delay
//! set `{d}` or `{d, 2d}` is the same model rescaled.
//!
//! Corruption is static. Each corrupted party may deliver each menu message
//! to each honest party at most once, at any step. States at receiver
//! boundaries are quotiented by a 128-bit hash of (automaton states, in-flight
//! envelopes, unused byzantine sends, output latches). The future depends
//! only on that, so pruning revisits is sound for the reachable-outcome set.
//!
//! A byzantine delivery that leaves its receiver's state unchanged is
//! skipped: the run without it reaches the same state and keeps the message
//! available for later. A byzantine send its receiver would absorb forever
//! (see [`Automaton::absorbs`]) counts as used, so it does not split states.
//! Honest envelopes their receiver would absorb are dropped for the same
//! reason; replaying a witness delivers them late, to no effect.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Debug;
use std::hash::{BuildHasherDefault, Hash, Hasher};
use std::rc::Rc;

use xxhash_rust::xxh3::xxh3_128;

use crate::sim::{Automaton, Context, Effects, Env, Incoming, InstanceTag, PartyId, Quorum, VTime};

/// One byzantine message a corrupted party may send to each honest party.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ByzMessage {
    pub tag: InstanceTag,
    pub kind: u8,
    pub payload: Vec<u8>,
}

#[derive(Clone, Debug)]
pub struct ExploreConfig {
    pub n: usize,
    pub t: usize,
    /// Statically corrupted parties; at most `t`.
    pub corrupted: Vec<PartyId>,
    /// `{d}` or `{d, 2d}`.
    pub delay_set: Vec<VTime>,
    pub state_bound: u64,
    pub mutation: Option<Quorum>,
}

impl ExploreConfig {
    /// Corrupts the last `t` parties; delay set `{1, 2}`.
    pub fn new(n: usize, t: usize) -> Self {
        ExploreConfig {
            n,
            t,
            corrupted: (n - t..n).map(PartyId::from).collect(),
            delay_set: vec![VTime::from_integer(1), VTime::from_integer(2)],
            state_bound: 20_000_000,
            mutation: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ExploreError {
    #[error("more than {0} distinct states; the instance is too large for exhaustive mode")]
    BoundExceeded(u64),
    #[error("invalid exploration config: {0}")]
    InvalidConfig(String),
}

/// One delivery of a witness schedule, at integer step `at`. Inputs all
/// arrive at step 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Step {
    Deliver { sender: PartyId, receiver: PartyId, tag: InstanceTag, kind: u8, payload: Vec<u8>, at: u32 },
    Byz { from: PartyId, to: PartyId, menu: usize, at: u32 },
}

/// Per-party first outputs (`None` for corrupted or silent parties) and, for
/// halted parties, how many steps after the first honest halt they halted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Outcome<O> {
    pub outputs: Vec<Option<O>>,
    pub halt_lag: Vec<Option<u32>>,
}

/// Every reachable terminal outcome with one witness schedule each.
#[derive(Clone, Debug)]
pub struct OutcomeSet<O> {
    pub outcomes: BTreeMap<Outcome<O>, Vec<Step>>,
    pub states: u64,
    pub honest: Vec<bool>,
    /// The search stopped at the first outcome the caller flagged.
    pub stopped: bool,
    /// Length of one step in virtual time.
    pub unit: VTime,
}

impl<O> OutcomeSet<O> {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Envelope {
    receiver: PartyId,
    sender: PartyId,
    tag: InstanceTag,
    kind: u8,
    payload: Vec<u8>,
}

/// An interned envelope waiting at receiver `r`. `forced` ones must arrive
/// in the current step; the others may also wait one more step.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Pending {
    r: u8,
    forced: bool,
    id: u32,
}

impl Pending {
    fn key(&self) -> (u8, bool) {
        (self.r, !self.forced)
    }
}

/// Inserts keeping the queue sorted by (receiver, forced first) and in send
/// order within each key, so equal states have equal queues.
fn enqueue(q: &mut Vec<Pending>, x: Pending) {
    let at = q.partition_point(|y| y.key() <= x.key());
    q.insert(at, x);
}

#[derive(Clone)]
struct State<A, O> {
    /// Shared until written, so branching clones stay cheap.
    parties: Vec<Rc<A>>,
    /// Fingerprint of each party, refreshed whenever it steps.
    prints: Vec<u128>,
    outputs: Vec<Option<O>>,
    halted: u64,
    /// Steps since the first honest halt, saturating.
    age: Option<u8>,
    lags: Vec<Option<u8>>,
    /// Halted, or unable to react to anything any more.
    inert: u64,
    /// Deliverable this step.
    cur: Vec<Pending>,
    /// Deliverable next step.
    next: Vec<Pending>,
    /// Bit `(c * menu + m) * n + r`.
    byz_unused: u128,
    /// Next receiver to process in the current step.
    cursor: usize,
}

impl<A, O: Hash> Hash for State<A, O> {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        self.prints.hash(h);
        self.outputs.hash(h);
        (self.halted, self.inert, self.byz_unused, self.cursor, self.age).hash(h);
        self.lags.hash(h);
        self.cur.hash(h);
        self.next.hash(h);
    }
}

fn bit(mask: u64, i: usize) -> bool {
    mask >> i & 1 == 1
}

struct Explorer<'a, A: Automaton> {
    cfg: &'a ExploreConfig,
    envs: Vec<Env>,
    honest: Vec<bool>,
    two_delays: bool,
    menu: &'a [ByzMessage],
    root: InstanceTag,
    visited: HashSet<u128, BuildHasherDefault<Fold128>>,
    interned: HashMap<Envelope, u32>,
    envelopes: Vec<Envelope>,
    path: Vec<Step>,
    found: BTreeMap<Outcome<A::Output>, Vec<Step>>,
    stop: &'a mut dyn FnMut(&Outcome<A::Output>) -> bool,
    stopped: bool,
}

/// Keys of the visited set are already uniform fingerprints.
#[derive(Default)]
struct Fold128(u64);

impl Hasher for Fold128 {
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = self.0.rotate_left(8) ^ u64::from(b);
        }
    }

    fn write_u128(&mut self, x: u128) {
        self.0 ^= (x as u64) ^ (x >> 64) as u64;
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

/// Collects the bytes a `Hash` impl feeds in, so they can be hashed in one
/// call instead of many small streaming updates.
struct ByteSink(Vec<u8>);

impl Hasher for ByteSink {
    fn write(&mut self, bytes: &[u8]) {
        self.0.extend_from_slice(bytes);
    }

    fn finish(&self) -> u64 {
        unreachable!("only the collected bytes are used")
    }
}

thread_local! {
    static SINK: std::cell::RefCell<ByteSink> = const { std::cell::RefCell::new(ByteSink(Vec::new())) };
}

fn fingerprint<T: Hash>(x: &T) -> u128 {
    SINK.with(|sink| {
        let mut sink = sink.borrow_mut();
        sink.0.clear();
        x.hash(&mut *sink);
        xxh3_128(&sink.0)
    })
}

/// One candidate delivery at the current receiver.
#[derive(Clone, Copy)]
enum Slot {
    Forced(usize),
    Fresh(usize),
    Byz { c: usize, m: usize },
}

/// Enumerates all schedules of `factory`'s automaton on `inputs` with the
/// corrupted parties restricted to `menu`.
pub fn exhaustive_explore<A, F>(
    cfg: &ExploreConfig,
    factory: F,
    inputs: Vec<Option<A::Input>>,
    menu: &[ByzMessage],
) -> Result<OutcomeSet<A::Output>, ExploreError>
where
    A: Automaton + Clone + Hash + Eq,
    A::Output: Clone + Hash + Ord + Debug,
    F: FnMut(PartyId) -> A,
{
    exhaustive_search(cfg, factory, inputs, menu, &mut |_| false)
}

/// Like [`exhaustive_explore`], but gives up as soon as `stop` accepts a
/// newly found outcome.
pub fn exhaustive_search<A, F>(
    cfg: &ExploreConfig,
    mut factory: F,
    inputs: Vec<Option<A::Input>>,
    menu: &[ByzMessage],
    stop: &mut dyn FnMut(&Outcome<A::Output>) -> bool,
) -> Result<OutcomeSet<A::Output>, ExploreError>
where
    A: Automaton + Clone + Hash + Eq,
    A::Output: Clone + Hash + Ord + Debug,
    F: FnMut(PartyId) -> A,
{
    let n = cfg.n;
    if n == 0 || 3 * cfg.t >= n {
        return Err(ExploreError::InvalidConfig(format!("need 3t < n, got n = {n}, t = {}", cfg.t)));
    }
    if n > 64 {
        return Err(ExploreError::InvalidConfig(format!("exhaustive mode supports at most 64 parties, got {n}")));
    }
    if cfg.corrupted.len() > cfg.t || cfg.corrupted.iter().any(|p| p.index() >= n) {
        return Err(ExploreError::InvalidConfig("corrupted set exceeds t or names a missing party".into()));
    }
    let unit = match cfg.delay_set[..] {
        [d] if d > VTime::from_integer(0) => (d, false),
        [a, b] if a > VTime::from_integer(0) && (b == a * 2 || a == b * 2) => (a.min(b), true),
        _ => return Err(ExploreError::InvalidConfig("delay set must be {d} or {d, 2d} with d > 0".into())),
    };
    if inputs.len() != n {
        return Err(ExploreError::InvalidConfig(format!("{} inputs for n = {n}", inputs.len())));
    }
    let byz_slots = cfg.corrupted.len() * menu.len() * n;
    if byz_slots > 128 {
        return Err(ExploreError::InvalidConfig(format!("{byz_slots} byzantine sends exceed 128")));
    }
    let mut honest = vec![true; n];
    for p in &cfg.corrupted {
        honest[p.index()] = false;
    }
    let mut ex = Explorer::<A> {
        cfg,
        envs: (0..n).map(|i| Env { n, t: cfg.t, me: PartyId::from(i), mutation: cfg.mutation }).collect(),
        honest: honest.clone(),
        two_delays: unit.1,
        menu,
        root: InstanceTag::root(A::KIND),
        visited: HashSet::default(),
        interned: HashMap::new(),
        envelopes: Vec::new(),
        path: Vec::new(),
        found: BTreeMap::new(),
        stop,
        stopped: false,
    };
    let parties: Vec<Rc<A>> = (0..n).map(|i| Rc::new(factory(PartyId::from(i)))).collect();
    let mut s = State {
        prints: parties.iter().map(|a| fingerprint(&**a)).collect(),
        parties,
        outputs: vec![None; n],
        halted: 0,
        age: None,
        lags: vec![None; n],
        inert: 0,
        cur: Vec::new(),
        next: Vec::new(),
        byz_unused: if byz_slots == 128 { u128::MAX } else { (1u128 << byz_slots) - 1 },
        cursor: 0,
    };
    // step 0: inputs, in party order
    for (i, x) in inputs.into_iter().enumerate() {
        if let (true, Some(x)) = (honest[i], x) {
            ex.step(&mut s, PartyId::from(i), Event::Input(x));
        }
    }
    ex.boundary(s, 1)?;
    let stopped = ex.stopped;
    Ok(OutcomeSet { outcomes: ex.found, states: ex.visited.len() as u64, honest, stopped, unit: unit.0 })
}

impl<A> Explorer<'_, A>
where
    A: Automaton + Clone + Hash + Eq,
    A::Output: Clone + Hash + Ord + Debug,
{
    fn visit(&mut self, s: &mut State<A, A::Output>) -> Result<bool, ExploreError> {
        if self.stopped {
            return Ok(false);
        }
        self.retire_byz(s);
        if !self.visited.insert(fingerprint(s)) {
            return Ok(false);
        }
        if self.visited.len() as u64 > self.cfg.state_bound {
            return Err(ExploreError::BoundExceeded(self.cfg.state_bound));
        }
        Ok(true)
    }

    /// End of a step: next step's queues become current.
    fn boundary(&mut self, mut s: State<A, A::Output>, at: u32) -> Result<(), ExploreError> {
        s.cur = std::mem::take(&mut s.next);
        if !self.two_delays {
            // a single delay leaves no choice
            for x in &mut s.cur {
                x.forced = true;
            }
            s.cur.sort_by_key(Pending::key);
        }
        s.cursor = 0;
        let n = self.cfg.n;
        let done = |i: usize| if A::TERMINATING { bit(s.halted, i) } else { s.outputs[i].is_some() };
        let all_done = (0..n).filter(|&i| self.honest[i]).all(done);
        if !all_done {
            s.age = s.age.map(|a| a.saturating_add(1));
        }
        if !self.visit(&mut s)? {
            return Ok(());
        }
        let quiet = s.cur.is_empty();
        if all_done || quiet {
            let outcome = Outcome { outputs: s.outputs.clone(), halt_lag: s.lags.iter().map(|l| l.map(u32::from)).collect() };
            if !self.found.contains_key(&outcome) {
                self.stopped = (self.stop)(&outcome);
                self.found.insert(outcome, self.path.clone());
                if self.stopped {
                    return Ok(());
                }
            }
        }
        if all_done {
            return Ok(());
        }
        if quiet && s.byz_unused == 0 {
            return Ok(());
        }
        self.receiver(s, at)
    }

    /// Processes the current receiver's deliveries for this step.
    fn receiver(&mut self, s: State<A, A::Output>, at: u32) -> Result<(), ExploreError> {
        let n = self.cfg.n;
        let r = s.cursor;
        if r == n {
            return self.boundary(s, at + 1);
        }
        if !self.honest[r] || bit(s.inert, r) {
            let mut next = s;
            next.cursor += 1;
            return self.receiver(next, at);
        }
        let mut s = s;
        let mine: Vec<Pending> = s.cur.iter().copied().filter(|x| x.r as usize == r).collect();
        s.cur.retain(|x| x.r as usize != r);
        let forced: Vec<Envelope> =
            mine.iter().filter(|x| x.forced).map(|x| self.envelopes[x.id as usize].clone()).collect();
        let fresh: Vec<Envelope> =
            mine.iter().filter(|x| !x.forced).map(|x| self.envelopes[x.id as usize].clone()).collect();
        let mut slots: Vec<(PartyId, u8, Slot)> = Vec::new();
        for (i, e) in forced.iter().enumerate() {
            slots.push((e.sender, 0, Slot::Forced(i)));
        }
        for (i, e) in fresh.iter().enumerate() {
            slots.push((e.sender, 1, Slot::Fresh(i)));
        }
        let m_len = self.menu.len();
        for (c, &from) in self.cfg.corrupted.iter().enumerate() {
            for m in 0..m_len {
                if s.byz_unused >> ((c * m_len + m) * n + r) & 1 == 1 {
                    slots.push((from, 2, Slot::Byz { c, m }));
                }
            }
        }
        // simulator order: by sender, then send order; stable sort keeps it
        slots.sort_by_key(|&(sender, class, _)| (sender, class));
        let slots: Vec<Slot> = slots.into_iter().map(|(_, _, slot)| slot).collect();
        self.choose(s, &slots, &forced, &fresh, at)
    }

    /// Walks the receiver's candidate deliveries, branching on the optional ones.
    fn choose(
        &mut self,
        mut s: State<A, A::Output>,
        slots: &[Slot],
        forced: &[Envelope],
        fresh: &[Envelope],
        at: u32,
    ) -> Result<(), ExploreError> {
        let r = s.cursor;
        let Some((&slot, rest)) = slots.split_first() else {
            s.cursor += 1;
            if !self.visit(&mut s)? {
                return Ok(());
            }
            return self.receiver(s, at);
        };
        if bit(s.inert, r) {
            // everything further is a no-op; unused fresh envelopes vanish too
            return self.choose(s, &[], forced, fresh, at);
        }
        let rp = PartyId::from(r);
        match slot {
            Slot::Forced(i) => {
                self.deliver_honest(&mut s, rp, &forced[i], at);
                let res = self.choose(s, rest, forced, fresh, at);
                self.path.pop();
                res
            }
            Slot::Fresh(i) => {
                let mut now = s.clone();
                self.deliver_honest(&mut now, rp, &fresh[i], at);
                let res = self.choose(now, rest, forced, fresh, at);
                self.path.pop();
                res?;
                let id = self.intern(&fresh[i]);
                enqueue(&mut s.next, Pending { r: r as u8, forced: true, id });
                self.choose(s, rest, forced, fresh, at)
            }
            Slot::Byz { c, m } => {
                let mut now = s.clone();
                let slot_ix = (c * self.menu.len() + m) * self.cfg.n + r;
                now.byz_unused &= !(1u128 << slot_ix);
                let b = &self.menu[m];
                let from = self.cfg.corrupted[c];
                let before = now.prints[r];
                let effect = self.step(&mut now, rp, Event::Deliver(from, &b.tag, b.kind, &b.payload));
                if effect || now.prints[r] != before {
                    self.path.push(Step::Byz { from, to: rp, menu: m, at });
                    let res = self.choose(now, rest, forced, fresh, at);
                    self.path.pop();
                    res?;
                }
                self.choose(s, rest, forced, fresh, at)
            }
        }
    }

    /// Pushes the delivery onto the witness path; the caller pops it.
    fn deliver_honest(&mut self, s: &mut State<A, A::Output>, r: PartyId, e: &Envelope, at: u32) {
        self.path.push(Step::Deliver {
            sender: e.sender,
            receiver: r,
            tag: e.tag.clone(),
            kind: e.kind,
            payload: e.payload.clone(),
            at,
        });
        self.step(s, r, Event::Deliver(e.sender, &e.tag, e.kind, &e.payload));
    }

    fn intern(&mut self, e: &Envelope) -> u32 {
        if let Some(&id) = self.interned.get(e) {
            return id;
        }
        let id = self.envelopes.len() as u32;
        self.envelopes.push(e.clone());
        self.interned.insert(e.clone(), id);
        id
    }

    /// Marks byzantine sends to inert receivers, and sends their receiver
    /// would absorb, as used.
    fn retire_byz(&self, s: &mut State<A, A::Output>) {
        let n = self.cfg.n;
        let mut bits = s.byz_unused;
        while bits != 0 {
            let slot = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let (r, m, c) = (slot % n, (slot / n) % self.menu.len(), slot / n / self.menu.len());
            let b = &self.menu[m];
            let absorbed = bit(s.inert, r) || self.absorbs(&s.parties[r], self.cfg.corrupted[c], &b.tag, b.kind, &b.payload);
            if absorbed {
                s.byz_unused &= !(1u128 << slot);
            }
        }
    }

    fn absorbs(&self, party: &A, from: PartyId, tag: &InstanceTag, kind: u8, payload: &[u8]) -> bool {
        match tag.components().split_first() {
            Some((first, rest)) if first == &self.root.components()[0] => {
                party.absorbs(&Incoming { from, path: rest, kind, payload })
            }
            _ => false,
        }
    }

    fn absorbs_pending(&self, s: &State<A, A::Output>, x: &Pending) -> bool {
        let e = &self.envelopes[x.id as usize];
        self.absorbs(&s.parties[x.r as usize], e.sender, &e.tag, e.kind, &e.payload)
    }

    /// Runs one automaton step; returns whether it sent, output or halted.
    fn step(&mut self, s: &mut State<A, A::Output>, p: PartyId, ev: Event<'_, A::Input>) -> bool {
        let mut fx = Effects::default();
        let reported = {
            let mut cx = Context::new(&self.envs[p.index()], &mut fx, self.root.clone());
            let party = Rc::make_mut(&mut s.parties[p.index()]);
            match ev {
                Event::Input(x) => party.on_input(x, &mut cx),
                Event::Deliver(from, tag, kind, payload) => match tag.components().split_first() {
                    Some((first, rest)) if first == &self.root.components()[0] => {
                        party.on_message(Incoming { from, path: rest, kind, payload }, &mut cx)
                    }
                    _ => cx.malformed(),
                },
            }
            cx.finish()
        };
        let mut effect = !fx.outbox.is_empty() || reported.terminated;
        if let Some(o) = reported.outputs.into_iter().next() {
            if s.outputs[p.index()].is_none() {
                s.outputs[p.index()] = Some(o);
                effect = true;
            }
        }
        for out in fx.outbox {
            let receivers: Vec<PartyId> = match out.to {
                Some(r) => vec![r],
                None => (0..self.cfg.n).map(PartyId::from).collect(),
            };
            for r in receivers {
                if !self.honest[r.index()]
                    || bit(s.inert, r.index())
                    || self.absorbs(&s.parties[r.index()], p, &out.tag, out.kind, &out.payload)
                {
                    continue;
                }
                let e = Envelope { receiver: r, sender: p, tag: out.tag.clone(), kind: out.kind, payload: out.payload.clone() };
                let id = self.intern(&e);
                enqueue(&mut s.next, Pending { r: r.index() as u8, forced: false, id });
            }
        }
        let i = p.index();
        Rc::make_mut(&mut s.parties[i]).forget_irrelevant();
        s.prints[i] = fingerprint(&*s.parties[i]);
        if reported.terminated || s.parties[i].is_inert() {
            if reported.terminated {
                s.halted |= 1 << i;
                let age = *s.age.get_or_insert(0);
                s.lags[i] = Some(age);
            }
            s.inert |= 1 << i;
            // deliveries to a halted or inert party are no-ops
            s.cur.retain(|x| x.r as usize != i);
            s.next.retain(|x| x.r as usize != i);
        } else {
            // envelopes the receiver now ignores would only split states by arrival time
            let (mut cur, mut next) = (std::mem::take(&mut s.cur), std::mem::take(&mut s.next));
            cur.retain(|x| x.r as usize != i || !self.absorbs_pending(s, x));
            next.retain(|x| x.r as usize != i || !self.absorbs_pending(s, x));
            (s.cur, s.next) = (cur, next);
        }
        effect
    }
}

enum Event<'a, I> {
    Input(I),
    Deliver(PartyId, &'a InstanceTag, u8, &'a [u8]),
}
