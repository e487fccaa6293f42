use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::sim::{Adversary, EnvelopeView, InstanceTag, Injection, NetControl, PartyId, VTime};

/// Corrupts the last `t` parties, which then say nothing; every honest
/// message takes the same delay.
pub struct Silent {
    delay: VTime,
}

impl Silent {
    pub fn new(delay: VTime) -> Self {
        Silent { delay }
    }
}

fn corrupt_last(net: &mut NetControl) {
    let n = net.n();
    for i in n - net.t()..n {
        net.corrupt(PartyId::from(i)).expect("within budget");
    }
}

impl Adversary for Silent {
    fn name(&self) -> &str {
        "silent"
    }

    fn start(&mut self, net: &mut NetControl) {
        corrupt_last(net);
    }

    fn schedule(&mut self, batch: &[EnvelopeView<'_>], _: &mut NetControl) -> Vec<Option<VTime>> {
        vec![Some(self.delay); batch.len()]
    }
}

/// Delays everything addressed to one honest party by `slow`, everything
/// else by `fast`. Nobody is corrupted.
pub struct Late {
    victim: PartyId,
    fast: VTime,
    slow: VTime,
}

impl Late {
    pub fn new(victim: PartyId, fast: VTime, slow: VTime) -> Self {
        Late { victim, fast, slow }
    }
}

impl Adversary for Late {
    fn name(&self) -> &str {
        "late"
    }

    fn schedule(&mut self, batch: &[EnvelopeView<'_>], _: &mut NetControl) -> Vec<Option<VTime>> {
        batch.iter().map(|e| Some(if e.receiver == self.victim { self.slow } else { self.fast })).collect()
    }
}

/// Splits the honest parties into two halves. Per instance, one half gets
/// every message late, and the corrupted parties (the last `t`) feed each
/// half a different one of the two most frequent honest messages.
pub struct Splitter {
    fast: VTime,
    slow: VTime,
    halves: [BTreeSet<PartyId>; 2],
    counts: HashMap<(InstanceTag, u8), BTreeMap<Vec<u8>, usize>>,
    sent: BTreeSet<(InstanceTag, u8, PartyId, PartyId, Vec<u8>)>,
}

impl Splitter {
    pub fn new(fast: VTime, slow: VTime) -> Self {
        Splitter { fast, slow, halves: Default::default(), counts: HashMap::new(), sent: BTreeSet::new() }
    }

    fn slow_half(tag: &InstanceTag) -> usize {
        let s: u64 = tag.components().iter().map(|c| c.index + c.kind as u64).sum();
        (s as usize + tag.depth()) % 2
    }

    /// The two most frequent payloads, ties broken by byte order.
    fn top_two(&self, key: &(InstanceTag, u8)) -> Option<(Vec<u8>, Vec<u8>)> {
        let counts = self.counts.get(key)?;
        let mut ranked: Vec<(&Vec<u8>, &usize)> = counts.iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        let first = ranked[0].0.clone();
        let second = match ranked.get(1) {
            Some((p, _)) => (*p).clone(),
            None if !first.is_empty() => {
                let mut q = first.clone();
                let last = q.len() - 1;
                q[last] ^= 0x80;
                q
            }
            None => first.clone(),
        };
        Some((first, second))
    }
}

impl Adversary for Splitter {
    fn name(&self) -> &str {
        "splitter"
    }

    fn start(&mut self, net: &mut NetControl) {
        corrupt_last(net);
        let honest: Vec<PartyId> = (0..net.n()).map(PartyId::from).filter(|&p| !net.is_corrupted(p)).collect();
        let mid = honest.len().div_ceil(2);
        self.halves = [honest[..mid].iter().copied().collect(), honest[mid..].iter().copied().collect()];
    }

    fn schedule(&mut self, batch: &[EnvelopeView<'_>], net: &mut NetControl) -> Vec<Option<VTime>> {
        let first = &batch[0];
        let slow = &self.halves[Self::slow_half(first.tag)];
        let delays = batch.iter().map(|e| Some(if slow.contains(&e.receiver) { self.slow } else { self.fast })).collect();

        let key = (first.tag.clone(), first.kind);
        *self.counts.entry(key.clone()).or_default().entry(first.payload.to_vec()).or_default() += 1;
        let Some((a, b)) = self.top_two(&key) else { return delays };
        let corrupted: Vec<PartyId> = net.corrupted().collect();
        for c in corrupted {
            for (half, payload) in [(0, &a), (1, &b)] {
                for &r in &self.halves[half] {
                    let k = (key.0.clone(), key.1, c, r, payload.clone());
                    if self.sent.insert(k) {
                        net.inject(Injection {
                            from: c,
                            to: r,
                            tag: key.0.clone(),
                            kind: key.1,
                            payload: payload.clone(),
                            delay: self.fast,
                        })
                        .expect("sender is corrupted");
                    }
                }
            }
        }
        delays
    }
}
