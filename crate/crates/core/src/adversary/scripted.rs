use std::collections::{HashMap, VecDeque};

use super::explore::{ByzMessage, Step};
use crate::sim::{Adversary, EnvelopeView, InstanceTag, Injection, NetControl, PartyId, VTime};

type Key = (PartyId, PartyId, InstanceTag, u8, Vec<u8>);

/// Replays an explorer schedule in the simulator. Step `k` happens at time
/// `k * unit`; envelopes the schedule never delivers arrive after its end.
///
/// Envelopes are matched by content, which is exact as long as no honest
/// party sends the same message to the same receiver twice.
pub struct Scripted {
    corrupted: Vec<PartyId>,
    slots: HashMap<Key, VecDeque<VTime>>,
    byz: Vec<Injection>,
    horizon: VTime,
}

impl Scripted {
    /// Returns the adversary and the per-party input times (all zero).
    pub fn from_schedule(
        schedule: &[Step],
        menu: &[ByzMessage],
        n: usize,
        corrupted: &[PartyId],
        unit: VTime,
    ) -> (Self, Vec<Option<VTime>>) {
        let mut last = 0;
        let mut slots: HashMap<Key, VecDeque<VTime>> = HashMap::new();
        let mut byz = Vec::new();
        for step in schedule {
            match step {
                Step::Deliver { sender, receiver, tag, kind, payload, at } => {
                    last = last.max(*at);
                    let key = (*sender, *receiver, tag.clone(), *kind, payload.clone());
                    slots.entry(key).or_default().push_back(unit * i64::from(*at));
                }
                Step::Byz { from, to, menu: m, at } => {
                    last = last.max(*at);
                    byz.push(Injection {
                        from: *from,
                        to: *to,
                        tag: menu[*m].tag.clone(),
                        kind: menu[*m].kind,
                        payload: menu[*m].payload.clone(),
                        delay: unit * i64::from(*at),
                    });
                }
            }
        }
        let horizon = unit * i64::from(last + 1);
        (Scripted { corrupted: corrupted.to_vec(), slots, byz, horizon }, vec![Some(VTime::from_integer(0)); n])
    }
}

impl Adversary for Scripted {
    fn name(&self) -> &str {
        "scripted"
    }

    fn start(&mut self, net: &mut NetControl) {
        for &p in &self.corrupted {
            net.corrupt(p).expect("schedule respects the budget");
        }
        for inj in self.byz.drain(..) {
            net.inject(inj).expect("injections come from corrupted parties");
        }
    }

    fn schedule(&mut self, batch: &[EnvelopeView<'_>], net: &mut NetControl) -> Vec<Option<VTime>> {
        let now = net.now();
        batch
            .iter()
            .map(|e| {
                let key = (e.sender, e.receiver, e.tag.clone(), e.kind, e.payload.to_vec());
                let at = self.slots.get_mut(&key).and_then(VecDeque::pop_front).unwrap_or(self.horizon.max(now) + 1);
                Some(at - now)
            })
            .collect()
    }
}
