use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::graded::{binary_patterns, bit_inputs, search_patterns};
use super::{honest_io, simulate, simulate_with, verdict, Setup, Tally, Verdict};
use crate::adversary::explore::{ByzMessage, Outcome};
use crate::adversary::{RandomAdversary, RandomParams};
use crate::check::{check_edge_tree, check_graded, check_provenance};
use crate::graded::{Gc2k, GradedOutput};
use crate::sim::{fmt_time, Adversary, EnvelopeView, InstanceTag, Injection, NetControl, PartyId, ProtocolKind, SimOutcome, VTime};
use crate::terminate::{TcStar, Term, WithTerm, ECHO, READY};
use crate::tree::{random_halving_tree, TcInput, Tree, TreeTc};
use crate::wire::WireValue;

fn party_count(seed: u64) -> usize {
    if seed.is_multiple_of(2) {
        4
    } else {
        7
    }
}

fn halts<O>(out: &SimOutcome<O>) -> Vec<Option<VTime>> {
    out.honest_parties().map(|p| out.halt_times[p.index()]).collect()
}

/// Inputs from two adjacent values, as an edge agreement would hand over.
fn two_values(n: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let base = rng.gen_range(0..10);
    let split = rng.gen_bool(0.5);
    (0..n).map(|_| base + u32::from(split && rng.gen())).collect()
}

/// Every honest party has its input by `T`: all halt by `T + 3Δ`.
fn inputs_by_deadline(setup: &Setup, tally: &mut Tally, worst: &mut VTime) {
    for seed in 0..600 {
        let n = party_count(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e57);
        let values = two_values(n, &mut rng);
        let times: Vec<Option<VTime>> = (0..n).map(|_| Some(VTime::new(rng.gen_range(0..=6), 2))).collect();
        let inputs = values.iter().copied().map(Some).collect();
        let mut adv = RandomAdversary::new(seed, RandomParams::default());
        let out = match simulate_with(n, seed, setup, |_| Term::<u32>::new(()), inputs, Some(times.clone()), &mut adv) {
            Ok(o) => o,
            Err(e) => {
                tally.fail(e);
                continue;
            }
        };
        let ctx = format!("by-T seed={seed}");
        tally.rounds(&ctx, &out, VTime::from_integer(3));
        let deadline = out.honest_parties().filter_map(|p| times[p.index()]).max().unwrap_or_default();
        let delta = out.metrics.delta_observed;
        for (p, h) in out.honest_parties().zip(halts(&out)) {
            match h {
                Some(h) if delta > VTime::from_integer(0) => {
                    *worst = (*worst).max((h - deadline) / delta);
                    if h > deadline + delta * 3 {
                        tally.fail(format!("{ctx}: party {p} halted at {}, after T + 3Δ", fmt_time(&h)));
                    }
                }
                Some(_) => {}
                None => tally.fail(format!("{ctx}: party {p} never halted")),
            }
        }
        let vin: Vec<Option<u32>> = values.iter().copied().map(Some).collect();
        let (ins, outs) = honest_io(&vin, &out);
        tally.check(&ctx, check_provenance(&ins, &outs));
    }
}

/// Some honest parties never get an input: once one honest party halts,
/// all do within `2Δ`.
fn single_terminator(setup: &Setup, tally: &mut Tally, cascades: &mut u64, worst: &mut VTime) {
    for seed in 0..600 {
        let n = party_count(seed);
        let t = (n - 1) / 3;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xca5c);
        let values = two_values(n, &mut rng);
        let mut missing = vec![false; n];
        for _ in 0..rng.gen_range(1..=t) {
            missing[rng.gen_range(0..n)] = true;
        }
        let inputs: Vec<Option<u32>> = values.iter().zip(&missing).map(|(&v, &m)| (!m).then_some(v)).collect();
        let times = missing.iter().map(|&m| (!m).then_some(VTime::from_integer(0))).collect();
        let mut adv = RandomAdversary::new(seed, RandomParams::default());
        let out = match simulate_with(n, seed, setup, |_| Term::<u32>::new(()), inputs.clone(), Some(times), &mut adv) {
            Ok(o) => o,
            Err(e) => {
                tally.fail(e);
                continue;
            }
        };
        tally.runs += 1;
        let ctx = format!("cascade seed={seed}");
        let hs = halts(&out);
        let Some(first) = hs.iter().flatten().min().copied() else { continue };
        *cascades += 1;
        let delta = out.metrics.delta_observed;
        for (p, h) in out.honest_parties().zip(&hs) {
            match h {
                Some(h) => {
                    if delta > VTime::from_integer(0) {
                        *worst = (*worst).max((h - first) / delta);
                    }
                    if *h > first + delta * 2 {
                        tally.fail(format!("{ctx}: party {p} halted {} after the first", fmt_time(&(h - first))));
                    }
                }
                None => tally.fail(format!("{ctx}: party {p} never halted after another did")),
            }
        }
        let (ins, outs) = honest_io(&inputs, &out);
        tally.check(&ctx, check_provenance(&ins, &outs));
    }
}

/// Worst case for the cascade at `n = 7`: the byzantine pair pushes one
/// party `p` to halt as early as the READY quorum allows while the parties
/// outside a fast clique `{p, q, r}` see everything a full `Δ` late.
///
/// `p` and `q` hold `v`, the rest `w`. Both byzantine parties echo `v` to
/// `p` and `q`, one of them to `r`, and send READY to `p` alone. Then `q`
/// sees `2t + 1` echoes on `v` and readies, `r` sees only `t + 1`, and `p`
/// holds `t + 1` READYs (`q` and the pair) and amplifies. With the honest
/// quorum `p` must wait for a READY from outside the clique, which arrives
/// together with everyone else's.
struct RushedCascade {
    clique: [PartyId; 3],
    byz: [PartyId; 2],
    v: u32,
    fast: VTime,
}

impl RushedCascade {
    const N: usize = 7;

    fn new(seed: u64) -> (Self, Vec<Option<u32>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a);
        let mut roles: Vec<PartyId> = (0..Self::N as u32).map(PartyId).collect();
        for i in (1..roles.len()).rev() {
            roles.swap(i, rng.gen_range(0..=i));
        }
        let base = rng.gen_range(0..10);
        let (v, w) = if rng.gen() { (base, base + 1) } else { (base + 1, base) };
        let fast = VTime::new(1, [16, 8, 4][rng.gen_range(0..3)]);
        let mut inputs = vec![Some(w); Self::N];
        for p in &roles[..2] {
            inputs[p.index()] = Some(v);
        }
        let adv = RushedCascade { clique: [roles[0], roles[1], roles[2]], byz: [roles[5], roles[6]], v, fast };
        (adv, inputs)
    }
}

impl Adversary for RushedCascade {
    fn name(&self) -> &str {
        "rushed-cascade"
    }

    fn start(&mut self, net: &mut NetControl) {
        let [p, q, r] = self.clique;
        for &b in &self.byz {
            net.corrupt(b).expect("t = 2 at n = 7");
        }
        let tag = InstanceTag::root(ProtocolKind::Term);
        let mut send = |from, to, kind, payload: Vec<u8>| {
            let inj = Injection { from, to, tag: tag.clone(), kind, payload, delay: self.fast };
            net.inject(inj).expect("sender is corrupted");
        };
        for &b in &self.byz {
            send(b, p, ECHO, self.v.to_bytes());
            send(b, q, ECHO, self.v.to_bytes());
            send(b, p, READY, Vec::new());
        }
        send(self.byz[0], r, ECHO, self.v.to_bytes());
    }

    fn schedule(&mut self, batch: &[EnvelopeView<'_>], _net: &mut NetControl) -> Vec<Option<VTime>> {
        let inside = |x: PartyId| self.clique.contains(&x);
        batch
            .iter()
            .map(|e| Some(if inside(e.sender) && inside(e.receiver) { self.fast } else { VTime::from_integer(1) }))
            .collect()
    }
}

/// The rushed schedule over permuted roles and clique speeds.
fn rushed_cascade(setup: &Setup, tally: &mut Tally, worst: &mut VTime) {
    for seed in 0..60 {
        let (mut adv, inputs) = RushedCascade::new(seed);
        let out = match simulate_with(RushedCascade::N, seed, setup, |_| Term::<u32>::new(()), inputs.clone(), None, &mut adv)
        {
            Ok(o) => o,
            Err(e) => {
                tally.fail(e);
                continue;
            }
        };
        tally.runs += 1;
        let ctx = format!("rushed seed={seed}");
        let hs = halts(&out);
        let Some(first) = hs.iter().flatten().min().copied() else {
            tally.fail(format!("{ctx}: no honest party halted"));
            continue;
        };
        let delta = out.metrics.delta_observed;
        for (p, h) in out.honest_parties().zip(&hs) {
            match h {
                Some(h) => {
                    *worst = (*worst).max((h - first) / delta);
                    if *h > first + delta * 2 {
                        tally.fail(format!("{ctx}: party {p} halted {} after the first", fmt_time(&(h - first))));
                    }
                }
                None => tally.fail(format!("{ctx}: party {p} never halted")),
            }
        }
        let (ins, outs) = honest_io(&inputs, &out);
        tally.check(&ctx, check_provenance(&ins, &outs));
    }
}

fn term_menu() -> Vec<ByzMessage> {
    let root = InstanceTag::root(ProtocolKind::Term);
    let m = |kind, payload| ByzMessage { tag: root.clone(), kind, payload };
    vec![m(ECHO, 0u32.to_bytes()), m(ECHO, 1u32.to_bytes()), m(READY, vec![])]
}

/// Explorer steps are half a delay bound apart.
const CASCADE_STEPS: u32 = 4;

fn term_exhaustive(setup: &Setup) -> super::graded::Searched {
    let mut patterns = binary_patterns(0u32, 1);
    patterns.push(vec![Some(0), Some(0), None, None]);
    patterns.push(vec![Some(0), Some(1), None, None]);
    search_patterns(setup, &patterns, |_| Term::<u32>::new(()), &term_menu(), |inputs, honest, o: &Outcome<u32>| {
        let ins: Vec<u32> = inputs.iter().zip(honest).filter(|(_, h)| **h).filter_map(|(x, _)| *x).collect();
        let mut outs = Vec::new();
        let mut halted = 0;
        let mut live = 0;
        for (i, h) in honest.iter().enumerate() {
            if !h {
                continue;
            }
            live += 1;
            outs.extend(o.outputs[i]);
            if let Some(lag) = o.halt_lag[i] {
                halted += 1;
                if lag > CASCADE_STEPS {
                    return Err(format!("party {i} halted {lag} steps after the first"));
                }
            }
        }
        check_provenance(&ins, &outs).map_err(|e| e.to_string())?;
        let all_inputs = honest.iter().zip(inputs).all(|(h, x)| !h || x.is_some());
        if halted > 0 && halted < live {
            return Err(format!("{halted} of {live} honest parties halted"));
        }
        if all_inputs && halted < live {
            return Err("liveness: an honest party with input never halted".into());
        }
        Ok(())
    })
}

pub(super) fn term(setup: &Setup) -> Verdict {
    let mut by_t = Tally::default();
    let mut worst_by_t = VTime::from_integer(0);
    inputs_by_deadline(setup, &mut by_t, &mut worst_by_t);
    let mut cascade = Tally::default();
    let mut cascades = 0;
    let mut worst_cascade = VTime::from_integer(0);
    single_terminator(setup, &mut cascade, &mut cascades, &mut worst_cascade);
    let mut rushed = Tally::default();
    let mut worst_rushed = VTime::from_integer(0);
    rushed_cascade(setup, &mut rushed, &mut worst_rushed);
    let s = term_exhaustive(setup);
    verdict(
        by_t.violations == 0 && cascade.violations == 0 && rushed.violations == 0 && s.violation.is_none(),
        format!(
            "inputs by T: {}, latest halt T + {}Δ; cascade: {} runs with a terminator, {} violations, widest spread {}Δ{}; \
             rushed cascade: {} runs, {} violations, widest spread {}Δ{}; exhaustive: {}",
            by_t.summary(),
            fmt_time(&worst_by_t),
            cascades,
            cascade.violations,
            fmt_time(&worst_cascade),
            cascade.first.as_ref().map(|f| format!(" (first: {f})")).unwrap_or_default(),
            rushed.runs,
            rushed.violations,
            fmt_time(&worst_rushed),
            rushed.first.as_ref().map(|f| format!(" (first: {f})")).unwrap_or_default(),
            s.summary()
        ),
        "every halt by T + 3Δ; after a first halt all honest halt within 2Δ; 0 provenance violations in exhaustive n = 4",
    )
}

pub(super) fn composed(setup: &Setup) -> Verdict {
    let mut gc = Tally::default();
    for k in 1..=3u32 {
        for seed in 0..200 {
            let n = party_count(seed);
            let inputs = bit_inputs(n, 2, seed);
            let out = match simulate(n, seed, setup, |_| WithTerm::new(Gc2k::new(k, 2), 2), inputs.clone()) {
                Ok(o) => o,
                Err(e) => {
                    gc.fail(e);
                    continue;
                }
            };
            let ctx = format!("k={k} seed={seed}");
            gc.rounds(&ctx, &out, VTime::from_integer(i64::from(3 * k + 3 + 3)));
            let (ins, outs): (_, Vec<GradedOutput>) = honest_io(&inputs, &out);
            gc.check(&ctx, check_graded(&ins, &outs, 1 << k));
        }
    }
    let mut tc = Tally::default();
    let mut star = Tally::default();
    for j in 1..=3u32 {
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed << 8 | u64::from(j));
            let max_degree = rng.gen_range(2..=4);
            let tree: Arc<Tree> = Arc::new(random_halving_tree(j, max_degree, &mut rng));
            let n = party_count(seed);
            let vs = tree.vertices();
            let pool: Vec<u32> = (0..rng.gen_range(1..=3)).map(|_| vs[rng.gen_range(0..vs.len())]).collect();
            let picks: Vec<u32> = (0..n).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
            let inputs: Vec<Option<TcInput<Arc<Tree>>>> =
                picks.iter().map(|&v| Some(TcInput::with_domain(v, tree.clone(), 0, None))).collect();
            let vin: Vec<Option<u32>> = picks.iter().copied().map(Some).collect();
            let bound = VTime::from_integer(6 * i64::from(j) + 3);
            let ctx = format!("j={j} seed={seed}");
            match simulate(n, seed, setup, |_| WithTerm::new(TreeTc::new(j, max_degree), ()), inputs.clone()) {
                Ok(out) => {
                    tc.rounds(&ctx, &out, bound);
                    let (ins, outs) = honest_io(&vin, &out);
                    tc.check(&ctx, check_edge_tree(&tree, &ins, &outs));
                }
                Err(e) => tc.fail(e),
            }
            match simulate(n, seed, setup, |_| TcStar::new(j, max_degree), inputs) {
                Ok(out) => {
                    star.rounds(&ctx, &out, bound);
                    let (ins, outs) = honest_io(&vin, &out);
                    star.check(&ctx, check_edge_tree(&tree, &ins, &outs));
                }
                Err(e) => star.fail(e),
            }
        }
    }
    verdict(
        gc.violations + tc.violations + star.violations == 0,
        format!("GC2^k+Term: {}; TC_j+Term: {}; TC_j*: {}", gc.summary(), tc.summary(), star.summary()),
        "Π+Term rounds ≤ the rounds bound of Π + 3 (3k+3 for GC2^k, 6j for TC_j); TC_j* rounds ≤ 6j+3",
    )
}
