use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{honest_io, simulate, verdict, Setup, Tally, Verdict};
use crate::adversary::explore::{exhaustive_search, ByzMessage, ExploreConfig, Outcome};
use crate::check::{check_graded, check_prop};
use crate::graded::{Gc1, Gc2k, GradedOutput, Prop};
use crate::sim::{Automaton, InstanceTag, ProtocolKind, VTime};
use crate::wire::{BitString, WireValue};

/// Honest inputs: a common value, two values, or independent values, by seed.
pub(super) fn bit_inputs(n: usize, ell: u32, seed: u64) -> Vec<Option<BitString>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let draw = |rng: &mut ChaCha8Rng| {
        let x: u64 = rng.gen();
        BitString::from_u64(if ell >= 64 { x } else { x & ((1 << ell) - 1) }, ell)
    };
    let pool: Vec<BitString> = match seed % 3 {
        0 => vec![draw(&mut rng)],
        1 => vec![draw(&mut rng), draw(&mut rng)],
        _ => (0..n).map(|_| draw(&mut rng)).collect(),
    };
    (0..n).map(|_| Some(pool[rng.gen_range(0..pool.len())].clone())).collect()
}

pub(super) fn gc1_random(setup: &Setup) -> Verdict {
    let mut tally = Tally::default();
    let mut max_multicasts = 0;
    for (n, ell) in [(4, 1), (4, 8), (7, 1), (7, 8)] {
        for seed in 0..1000 {
            let inputs = bit_inputs(n, ell, seed);
            let out = match simulate(n, seed, setup, |_| Gc1::new(ell), inputs.clone()) {
                Ok(o) => o,
                Err(e) => {
                    tally.fail(e);
                    continue;
                }
            };
            let ctx = format!("n={n} ell={ell} seed={seed}");
            tally.rounds(&ctx, &out, VTime::from_integer(3));
            let (ins, outs) = honest_io(&inputs, &out);
            tally.check(&ctx, check_graded(&ins, &outs, 1));
            for p in out.honest_parties() {
                let m = out.metrics.per_party_multicasts[p.index()];
                max_multicasts = max_multicasts.max(m);
                if m > 3 {
                    tally.fail(format!("{ctx}: party {p} multicast {m} times"));
                }
            }
        }
    }
    verdict(
        tally.violations == 0,
        format!("{}, max multicasts {max_multicasts}", tally.summary()),
        "0 violations, rounds ≤ 3, ≤ 3 multicasts per honest party",
    )
}

/// Totals over a set of exhaustive searches.
#[derive(Default)]
pub(super) struct Searched {
    pub states: u64,
    pub outcomes: u64,
    pub violation: Option<String>,
}

impl Searched {
    pub fn summary(&self) -> String {
        let mut s = format!("{} states, {} outcomes", self.states, self.outcomes);
        match &self.violation {
            Some(v) => s.push_str(&format!(", violation: {v}")),
            None => s.push_str(", 0 violations"),
        }
        s
    }
}

/// Explores each honest input pattern on n = 4, t = 1 (party 3 corrupted,
/// delays {1, 2}) and stops at the first outcome `check` rejects.
pub(super) fn search_patterns<A, F>(
    setup: &Setup,
    patterns: &[Vec<Option<A::Input>>],
    mut factory: F,
    menu: &[ByzMessage],
    check: impl Fn(&[Option<A::Input>], &[bool], &Outcome<A::Output>) -> Result<(), String>,
) -> Searched
where
    A: Automaton + Clone + std::hash::Hash + Eq,
    A::Input: Clone + std::fmt::Debug,
    A::Output: Clone + std::hash::Hash + Ord + std::fmt::Debug,
    F: FnMut(crate::sim::PartyId) -> A,
{
    let mut cfg = ExploreConfig::new(4, 1);
    cfg.mutation = setup.mutation;
    let mut total = Searched::default();
    for inputs in patterns {
        let honest = [true, true, true, false];
        let mut found = None;
        let res = {
            let mut stop = |o: &Outcome<A::Output>| match check(inputs, &honest, o) {
                Ok(()) => false,
                Err(e) => {
                    found = Some(format!("inputs {inputs:?}: {e}"));
                    true
                }
            };
            exhaustive_search(&cfg, &mut factory, inputs.clone(), menu, &mut stop)
        };
        match res {
            Ok(set) => {
                total.states += set.states;
                total.outcomes += set.len() as u64;
            }
            Err(e) => found = Some(format!("inputs {inputs:?}: {e}")),
        }
        if found.is_some() {
            total.violation = found;
            return total;
        }
    }
    total
}

/// The honest input patterns up to swapping the two values; the protocols
/// treat values symmetrically and the menus are closed under the swap.
pub(super) fn binary_patterns<V: Clone>(zero: V, one: V) -> Vec<Vec<Option<V>>> {
    [[0, 0, 0], [0, 0, 1], [0, 1, 0], [1, 0, 0]]
        .iter()
        .map(|p| p.iter().map(|&b| Some(if b == 0 { zero.clone() } else { one.clone() })).chain([None]).collect())
        .collect()
}

/// Outputs of every honest party, failing if one never output although
/// every honest message was delivered.
pub(super) fn settled<O: Clone>(honest: &[bool], o: &Outcome<O>) -> Result<Vec<O>, String> {
    let mut outs = Vec::new();
    for (i, h) in honest.iter().enumerate() {
        if *h {
            outs.push(o.outputs[i].clone().ok_or_else(|| format!("liveness: party {i} never output"))?);
        }
    }
    Ok(outs)
}

fn honest_inputs<I: Clone>(inputs: &[Option<I>], honest: &[bool]) -> Vec<I> {
    inputs.iter().zip(honest).filter(|(_, h)| **h).filter_map(|(x, _)| x.clone()).collect()
}

fn gc1_menu() -> Vec<ByzMessage> {
    let root = InstanceTag::root(ProtocolKind::Gc1);
    let b = |x| BitString::from_u64(x, 1).to_bytes();
    let m = |kind, payload| ByzMessage { tag: root.clone(), kind, payload };
    // echo 0, echo 1, echo ⊥, propose 0, propose 1
    vec![m(1, b(0)), m(1, b(1)), m(2, vec![]), m(3, b(0)), m(3, b(1))]
}

pub(super) fn gc1_exhaustive(setup: &Setup) -> Verdict {
    let patterns = binary_patterns(BitString::from_u64(0, 1), BitString::from_u64(1, 1));
    let s = search_patterns(setup, &patterns, |_| Gc1::new(1), &gc1_menu(), |inputs, honest, o| {
        let outs: Vec<GradedOutput> = settled(honest, o)?;
        check_graded(&honest_inputs(inputs, honest), &outs, 1).map_err(|e| e.to_string())
    });
    verdict(
        s.violation.is_none(),
        format!("{} over patterns 000, 001, 010, 100 (the rest mirror them)", s.summary()),
        "0 violations of agreement, intrusion tolerance, validity or liveness",
    )
}

fn prop_menu() -> Vec<ByzMessage> {
    let root = InstanceTag::root(ProtocolKind::Prop);
    let m = |kind, v: u32| ByzMessage { tag: root.clone(), kind, payload: v.to_bytes() };
    // ⊥ has no encoding in Prop: it is an undecodable payload, which changes nothing
    vec![m(1, 0), m(1, 1), m(2, 0), m(2, 1)]
}

pub(super) fn prop(setup: &Setup) -> Verdict {
    let mut tally = Tally::default();
    for n in [4, 7] {
        for seed in 0..1000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inputs: Vec<Option<u32>> = (0..n).map(|_| Some(rng.gen_range(0..2))).collect();
            let out = match simulate(n, seed, setup, |_| Prop::<u32>::new(()), inputs.clone()) {
                Ok(o) => o,
                Err(e) => {
                    tally.fail(e);
                    continue;
                }
            };
            let ctx = format!("n={n} seed={seed}");
            tally.rounds(&ctx, &out, VTime::from_integer(3));
            let (ins, outs) = honest_io(&inputs, &out);
            tally.check(&ctx, check_prop(&ins, &outs));
        }
    }
    let s = search_patterns(setup, &binary_patterns(0u32, 1), |_| Prop::<u32>::new(()), &prop_menu(), |inputs, honest, o| {
        let outs = settled(honest, o)?;
        check_prop(&honest_inputs(inputs, honest), &outs).map_err(|e| e.to_string())
    });
    verdict(
        tally.violations == 0 && s.violation.is_none(),
        format!("random: {}; exhaustive: {}", tally.summary(), s.summary()),
        "0 violations of intersection, provenance or validity; rounds ≤ 3",
    )
}

pub(super) fn gc2k(setup: &Setup) -> Verdict {
    let mut tally = Tally::default();
    let mut worst_share = (0u64, 1u64);
    for k in 1..=3u32 {
        for n in [4usize, 7] {
            for seed in 0..500 {
                let inputs = bit_inputs(n, 2, seed);
                let out = match simulate(n, seed, setup, |_| Gc2k::new(k, 2), inputs.clone()) {
                    Ok(o) => o,
                    Err(e) => {
                        tally.fail(e);
                        continue;
                    }
                };
                let ctx = format!("k={k} n={n} seed={seed}");
                tally.rounds(&ctx, &out, VTime::from_integer(i64::from(3 * k + 3)));
                let (ins, outs) = honest_io(&inputs, &out);
                tally.check(&ctx, check_graded(&ins, &outs, 1 << k));
                let cap = 3 * u64::from(k + 1) * n as u64;
                for p in out.honest_parties() {
                    let m = out.metrics.per_party_messages[p.index()];
                    if m * worst_share.1 > worst_share.0 * cap {
                        worst_share = (m, cap);
                    }
                    if m > cap {
                        tally.fail(format!("{ctx}: party {p} sent {m} messages, over {cap}"));
                    }
                }
            }
        }
    }
    verdict(
        tally.violations == 0,
        format!("{}, peak messages {} of cap {}", tally.summary(), worst_share.0, worst_share.1),
        "0 violations, rounds ≤ 3k+3, messages ≤ 3(k+1)·n per honest party",
    )
}
