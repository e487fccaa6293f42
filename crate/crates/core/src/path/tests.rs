use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::adversary::{RandomAdversary, RandomParams, Silent};
use crate::check::check_edge_int;
use crate::sim::{
    measure_rounds, run_simulation, Adversary, Automaton, Context, Incoming, ProtocolKind, SimConfig, SimOutcome,
    VTime,
};

fn big(xs: &[i64]) -> Vec<BigInt> {
    xs.iter().map(|&x| BigInt::from(x)).collect()
}

fn run<A, F>(make: F, inputs: &[BigInt], adv: &mut dyn Adversary, trace: bool) -> SimOutcome<BigInt>
where
    A: Automaton<Input = BigInt, Output = BigInt>,
    F: Fn() -> A,
{
    let n = inputs.len();
    let mut cfg = SimConfig::new(n, (n - 1) / 3, 0);
    cfg.record_trace = trace;
    run_simulation(&cfg, |_| make(), inputs.iter().cloned().map(Some).collect(), adv).unwrap()
}

fn random(seed: u64) -> RandomAdversary {
    RandomAdversary::new(seed, RandomParams::default())
}

/// Honest inputs and outputs; panics if an honest party never output.
fn honest(out: &SimOutcome<BigInt>, inputs: &[BigInt]) -> (Vec<BigInt>, Vec<BigInt>) {
    assert!(out.faults.is_empty(), "{:?}", out.faults);
    let ys = out.require_outputs().unwrap();
    let xs = ys.iter().map(|(p, _)| inputs[p.index()].clone()).collect();
    (xs, ys.into_iter().map(|(_, y)| y.clone()).collect())
}

fn q_of(m: u64) -> i64 {
    63 - i64::from(m.max(1).leading_zeros())
}

fn random_inputs(rng: &mut ChaCha8Rng, n: usize, lo: i64, hi: i64) -> Vec<BigInt> {
    (0..n).map(|_| BigInt::from(rng.gen_range(lo..=hi))).collect()
}

#[test]
fn log_and_decode_examples() {
    assert_eq!(floor_log2_plus1(&BigInt::from(0)), 0);
    assert_eq!(floor_log2_plus1(&BigInt::from(7)), 3);
    assert_eq!(floor_log2_plus1(&BigInt::from(8)), 3);
    for (z, k, r) in [(0, 0, 0), (11, 2, 1), (14, 2, 4), (7, 1, 2)] {
        let d = decode_two_step(&BigInt::from(z));
        assert_eq!((d.k, d.r), (BigInt::from(k), r));
    }
}

#[test]
fn exp0_common_inputs_are_kept() {
    for v in [0, 1, 5, 64] {
        let inputs = big(&[v; 4]);
        let out = run(exp0, &inputs, &mut Silent::new(VTime::from_integer(1)), false);
        let (_, ys) = honest(&out, &inputs);
        assert!(ys.iter().all(|y| *y == BigInt::from(v)), "{v}: {ys:?}");
    }
}

#[test]
fn exp0_is_safe_and_within_its_round_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for m in [1u64, 7, 100] {
        for seed in 0..25 {
            let n = if seed % 2 == 0 { 4 } else { 7 };
            let inputs = random_inputs(&mut rng, n, 0, m as i64);
            let out = run(exp0, &inputs, &mut random(seed), false);
            let (xs, ys) = honest(&out, &inputs);
            check_edge_int(&xs, &ys).unwrap();
            let bound = 12 * q_of(m) + 19;
            assert!(measure_rounds(&out).unwrap() <= VTime::from_integer(bound));
        }
    }
}

type Senders = BTreeMap<String, BTreeSet<u32>>;
type Received = BTreeMap<(String, u32), BTreeSet<u32>>;

/// Honest CENTER senders per receiver and Exp instance.
fn center_tallies(out: &SimOutcome<BigInt>) -> (Senders, Received) {
    let mut honest_senders = Senders::new();
    let mut received = Received::new();
    for e in out.sent.as_ref().unwrap() {
        let last = e.tag.components().last().unwrap();
        if last.kind != ProtocolKind::Exp || e.kind != CENTER {
            continue;
        }
        let tag = e.tag.to_string();
        if e.honest {
            honest_senders.entry(tag.clone()).or_default().insert(e.sender.0);
        }
        if e.deliver_time.is_some() {
            received.entry((tag, e.receiver.0)).or_default().insert(e.sender.0);
        }
    }
    (honest_senders, received)
}

#[test]
fn center_quorums_always_include_an_honest_sender() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut saw_center = false;
    for seed in 0..60 {
        let inputs = random_inputs(&mut rng, 4, 1, 7);
        let out = run(|| Exp::new(1), &inputs, &mut random(seed), true);
        let (xs, ys) = honest(&out, &inputs);
        check_edge_int(&xs, &ys).unwrap();
        let (senders, received) = center_tallies(&out);
        for ((tag, _), from) in &received {
            if from.len() >= 2 {
                assert!(senders.get(tag).is_some_and(|s| !s.is_empty()), "seed {seed}: {tag}");
            }
        }
        saw_center |= !senders.is_empty();
    }
    assert!(saw_center, "no run exercised the CENTER path");
}

#[test]
fn one_sided_inputs_never_send_center() {
    for seed in 0..30 {
        let inputs = big(&[0, 1, 1, 0]);
        let out = run(exp0, &inputs, &mut random(seed), true);
        let (senders, _) = center_tallies(&out);
        assert!(senders.is_empty(), "seed {seed}: {senders:?}");
    }
}

#[test]
fn two_step_common_zero() {
    let inputs = big(&[0; 4]);
    let out = run(two_step_exp0, &inputs, &mut random(3), false);
    let (_, ys) = honest(&out, &inputs);
    assert!(ys.iter().all(|y| *y == BigInt::from(0)));
}

#[test]
fn two_step_is_safe() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for seed in 0..40 {
        let inputs = if seed < 10 {
            (0..4).map(|i| BigInt::from(if (seed + i) % 2 == 0 { 6 } else { 9 })).collect()
        } else {
            random_inputs(&mut rng, 4, 0, 1000)
        };
        let out = run(two_step_exp0, &inputs, &mut random(seed), false);
        let (xs, ys) = honest(&out, &inputs);
        check_edge_int(&xs, &ys).unwrap();
    }
}

/// Outputs a fixed value as soon as it has an input.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Fixed(i64);

impl Automaton for Fixed {
    type Input = BigInt;
    type Output = BigInt;
    const KIND: ProtocolKind = ProtocolKind::Exp;

    fn on_input(&mut self, _: BigInt, cx: &mut Context<'_, BigInt>) {
        cx.output(BigInt::from(self.0));
    }

    fn on_message(&mut self, _: Incoming<'_>, cx: &mut Context<'_, BigInt>) {
        cx.malformed();
    }
}

#[test]
fn remainder_two_outputs_directly_and_runs_the_lower_path() {
    let inputs = big(&[5; 4]);
    let out = run(|| TwoStep::new(Fixed(7)), &inputs, &mut Silent::new(VTime::from_integer(1)), true);
    for p in out.honest_parties() {
        assert_eq!(out.outputs[p.index()], Some((VTime::from_integer(0), BigInt::from(3))));
    }
    let levels: BTreeSet<u64> = out
        .sent
        .as_ref()
        .unwrap()
        .iter()
        .filter_map(|e| e.tag.components().get(1).filter(|c| c.kind == ProtocolKind::Tc).map(|c| c.index))
        .collect();
    assert_eq!(levels, BTreeSet::from([1]));
}

#[test]
fn agr_z_is_safe_across_signs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..40 {
        let (lo, hi) = match seed % 3 {
            0 => (0, 1000),
            1 => (-1000, -1),
            _ => (-20, 20),
        };
        let inputs = random_inputs(&mut rng, 4, lo, hi);
        let out = run(agr_z, &inputs, &mut random(seed), false);
        let (xs, ys) = honest(&out, &inputs);
        check_edge_int(&xs, &ys).unwrap();
    }
}

#[test]
fn agr_z_mirrors() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for seed in 0..10 {
        let inputs: Vec<BigInt> =
            (0..4).map(|_| BigInt::from(rng.gen_range(1..=50i64) * if rng.gen() { 1 } else { -1 })).collect();
        let mirrored: Vec<BigInt> = inputs.iter().map(|x| -x).collect();
        let a = run(agr_z, &inputs, &mut random(seed), false);
        let b = run(agr_z, &mirrored, &mut random(seed), false);
        assert_eq!(a.honest, b.honest);
        let ya: Vec<Option<BigInt>> = a.outputs.iter().map(|o| o.as_ref().map(|(_, y)| -y)).collect();
        let yb: Vec<Option<BigInt>> = b.outputs.iter().map(|o| o.as_ref().map(|(_, y)| y.clone())).collect();
        assert_eq!(ya, yb, "seed {seed}");
    }
}
