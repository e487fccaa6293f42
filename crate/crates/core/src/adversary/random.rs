use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sim::{Adversary, EnvelopeView, InstanceTag, NetControl, PartyId, VTime};

/// Knobs of [`RandomAdversary`].
#[derive(Clone, Debug)]
pub struct RandomParams {
    pub delays: Vec<VTime>,
    /// Chance that a corrupted party reacts to one honest send.
    pub byz_rate: f64,
    /// Chance of corrupting the sender of an honest multicast while budget remains.
    pub adaptive_rate: f64,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            delays: vec![VTime::from_integer(1), VTime::from_integer(4)],
            byz_rate: 0.5,
            adaptive_rate: 0.05,
        }
    }
}

/// I.i.d. delays, random static and mid-multicast corruption, and byzantine
/// equivocation over the messages honest parties sent at the same instance.
///
/// Every random draw is independent of message contents, so two executions
/// whose honest payloads differ by a bijection see the same decisions.
pub struct RandomAdversary {
    rng: ChaCha8Rng,
    params: RandomParams,
    adaptive_budget: usize,
    /// Honest `(kind, payload)` pairs per instance, in first-seen order.
    observed: HashMap<InstanceTag, Vec<(u8, Vec<u8>)>>,
}

impl RandomAdversary {
    pub fn new(seed: u64, params: RandomParams) -> Self {
        assert!(!params.delays.is_empty(), "delay set must be non-empty");
        RandomAdversary { rng: ChaCha8Rng::seed_from_u64(seed), params, adaptive_budget: 0, observed: HashMap::new() }
    }

    fn delay(&mut self) -> VTime {
        let i = self.rng.gen_range(0..self.params.delays.len());
        self.params.delays[i]
    }

    /// Observed messages at `tag` plus two bit-flipped variants of the first
    /// non-empty payload.
    fn menu(&self, tag: &InstanceTag) -> Vec<(u8, Vec<u8>)> {
        let mut menu = self.observed.get(tag).cloned().unwrap_or_default();
        if let Some((kind, p)) = menu.iter().find(|(_, p)| !p.is_empty()).cloned() {
            let last = p.len() - 1;
            for mask in [0x80u8, 0x01] {
                let mut q = p.clone();
                q[last] ^= mask;
                menu.push((kind, q));
            }
        }
        menu
    }
}

impl Adversary for RandomAdversary {
    fn name(&self) -> &str {
        "random"
    }

    fn start(&mut self, net: &mut NetControl) {
        let t = net.t();
        let statics = if self.params.adaptive_rate > 0.0 && t > 0 { self.rng.gen_range(0..=t) } else { t };
        let mut ids: Vec<PartyId> = (0..net.n()).map(PartyId::from).collect();
        ids.shuffle(&mut self.rng);
        for &p in ids.iter().take(statics) {
            net.corrupt(p).expect("within budget");
        }
        self.adaptive_budget = t - statics;
    }

    fn schedule(&mut self, batch: &[EnvelopeView<'_>], net: &mut NetControl) -> Vec<Option<VTime>> {
        let first = &batch[0];
        let sender = first.sender;
        let multicast = batch.len() == net.n();
        let intercept = multicast
            && self.adaptive_budget > 0
            && self.params.adaptive_rate > 0.0
            && self.rng.gen_bool(self.params.adaptive_rate);
        let mut delays = Vec::with_capacity(batch.len());
        if intercept {
            net.corrupt(sender).expect("within budget");
            self.adaptive_budget -= 1;
            for _ in batch {
                let keep = self.rng.gen_bool(0.5);
                let d = self.delay();
                delays.push(keep.then_some(d));
            }
        } else {
            for _ in batch {
                delays.push(Some(self.delay()));
            }
            let seen = self.observed.entry(first.tag.clone()).or_default();
            if !seen.iter().any(|(k, p)| *k == first.kind && p.as_slice() == first.payload) {
                seen.push((first.kind, first.payload.to_vec()));
            }
        }

        let menu = self.menu(first.tag);
        if menu.is_empty() {
            return delays;
        }
        let corrupted: Vec<PartyId> = net.corrupted().collect();
        for c in corrupted {
            if !self.rng.gen_bool(self.params.byz_rate) {
                continue;
            }
            for r in 0..net.n() {
                let r = PartyId::from(r);
                if net.is_corrupted(r) {
                    continue;
                }
                let (kind, payload) = menu[self.rng.gen_range(0..menu.len())].clone();
                let delay = self.delay();
                net.inject(crate::sim::Injection { from: c, to: r, tag: first.tag.clone(), kind, payload, delay })
                    .expect("sender is corrupted");
            }
        }
        delays
    }
}
