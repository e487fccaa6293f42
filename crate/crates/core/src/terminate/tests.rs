use std::sync::Arc;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::adversary::{Late, RandomAdversary, RandomParams, Silent};
use crate::check::{check_edge_tree, check_provenance};
use crate::graded::{Gc2k, GradedOutput};
use crate::sim::{measure_rounds, run_simulation, Adversary, Automaton, PartyId, SimConfig, SimOutcome, VTime};
use crate::tree::{PathTc, Segment, TcInput, Tree};
use crate::wire::BitString;

fn one() -> VTime {
    VTime::from_integer(1)
}

fn run<A: Automaton>(
    cfg: &SimConfig,
    make: impl Fn() -> A,
    inputs: Vec<Option<A::Input>>,
    adv: &mut dyn Adversary,
) -> SimOutcome<A::Output>
where
    A::Output: Clone + std::fmt::Debug,
{
    let out = run_simulation(cfg, |_| make(), inputs, adv).unwrap();
    assert!(out.faults.is_empty(), "{:?}", out.faults);
    out
}

fn random(seed: u64) -> RandomAdversary {
    RandomAdversary::new(seed, RandomParams::default())
}

fn all_halted<O>(out: &SimOutcome<O>) -> bool {
    out.honest_parties().all(|p| out.halt_times[p.index()].is_some())
}

#[test]
fn common_term_input_terminates_in_three_rounds() {
    let cfg = SimConfig::new(4, 1, 0);
    let out = run(&cfg, || Term::<u32>::new(()), vec![Some(5); 4], &mut Silent::new(one()));
    assert!(all_halted(&out));
    for (_, y) in out.require_outputs().unwrap() {
        assert_eq!(*y, 5);
    }
    assert!(measure_rounds(&out).unwrap() <= VTime::from_integer(3));
}

#[test]
fn split_term_inputs_keep_provenance() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..100 {
        let n = if seed % 2 == 0 { 4 } else { 7 };
        let cfg = SimConfig::new(n, (n - 1) / 3, seed);
        let inputs: Vec<u32> = (0..n).map(|_| rng.gen_range(3..=4)).collect();
        let out = run(&cfg, || Term::<u32>::new(()), inputs.iter().copied().map(Some).collect(), &mut random(seed));
        assert!(all_halted(&out), "seed {seed}");
        let honest_in: Vec<u32> = out.honest_parties().map(|p| inputs[p.index()]).collect();
        let ys: Vec<u32> = out.require_outputs().unwrap().into_iter().map(|(_, y)| *y).collect();
        check_provenance(&honest_in, &ys).unwrap();
        assert!(measure_rounds(&out).unwrap() <= VTime::from_integer(3), "seed {seed}");
    }
}

#[test]
fn a_terminator_pulls_in_a_party_without_input() {
    let mut cfg = SimConfig::new(4, 1, 0);
    cfg.input_times[3] = None;
    let out = run(&cfg, || Term::<u32>::new(()), vec![Some(2), Some(2), Some(2), None], &mut Late::new(PartyId(3), one(), VTime::from_integer(2)));
    let halts: Vec<VTime> = out.halt_times.iter().map(|h| h.unwrap()).collect();
    let first = *halts.iter().min().unwrap();
    assert!(halts.iter().all(|h| *h <= first + VTime::from_integer(2) * out.metrics.delta_observed));
    assert_eq!(out.outputs[3].as_ref().map(|(_, y)| *y), Some(2));
}

#[test]
fn graded_consensus_with_term() {
    let cfg = SimConfig::new(4, 1, 0);
    let x = BitString::from_u64(1, 1);
    let out = run(&cfg, || WithTerm::new(Gc2k::two_graded(1), 1), vec![Some(x.clone()); 4], &mut Silent::new(one()));
    assert!(all_halted(&out));
    for (_, y) in out.require_outputs().unwrap() {
        assert_eq!(*y, GradedOutput::new(x.clone(), 2));
    }
    assert!(measure_rounds(&out).unwrap() <= VTime::from_integer(9));
}

#[test]
fn path_agreement_with_term_keeps_common_input() {
    for seed in 0..20 {
        let cfg = SimConfig::new(4, 1, seed);
        let seg = Segment::dyadic(3);
        let input = TcInput::with_domain(BigInt::from(11), seg.clone(), seg.lo.clone(), None);
        let out = run(&cfg, || WithTerm::new(PathTc::new(3, 2), ()), vec![Some(input.clone()); 4], &mut random(seed));
        assert!(all_halted(&out));
        for (_, y) in out.require_outputs().unwrap() {
            assert_eq!(*y, BigInt::from(11));
        }
    }
}

fn star_inputs(tree: &Arc<Tree>, a: u32, vs: &[u32]) -> Vec<Option<TcInput<Arc<Tree>>>> {
    vs.iter().map(|&v| Some(TcInput::with_domain(v, tree.clone(), a, None))).collect()
}

#[test]
fn star_common_input() {
    let tree = Arc::new(Tree::path(2));
    let cfg = SimConfig::new(4, 1, 0);
    let out = run(&cfg, || TcStar::new(1, 2), star_inputs(&tree, 0, &[1; 4]), &mut Silent::new(one()));
    assert!(all_halted(&out));
    assert!(out.require_outputs().unwrap().iter().all(|(_, y)| **y == 1));
    assert!(measure_rounds(&out).unwrap() <= VTime::from_integer(9));
}

#[test]
fn star_mixed_inputs_terminate_safely() {
    let tree = Arc::new(Tree::path(4));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for seed in 0..60 {
        let vs: Vec<u32> = (0..4).map(|_| rng.gen_range(0..=4)).collect();
        let cfg = SimConfig::new(4, 1, seed);
        let out = run(&cfg, || TcStar::new(2, 2), star_inputs(&tree, 0, &vs), &mut random(seed));
        assert!(all_halted(&out), "seed {seed}");
        let honest_in: Vec<u32> = out.honest_parties().map(|p| vs[p.index()]).collect();
        let ys: Vec<u32> = out.require_outputs().unwrap().into_iter().map(|(_, y)| *y).collect();
        check_edge_tree(&tree, &honest_in, &ys).unwrap();
        assert!(measure_rounds(&out).unwrap() <= VTime::from_integer(15), "seed {seed}");
    }
}

#[test]
fn star_late_party_follows_within_three_rounds() {
    let tree = Arc::new(Tree::path(8));
    let cfg = SimConfig::new(4, 1, 0);
    let slow = VTime::from_integer(3);
    let out = run(&cfg, || TcStar::new(3, 2), star_inputs(&tree, 0, &[0, 3, 8, 5]), &mut Late::new(PartyId(2), one(), slow));
    assert!(all_halted(&out));
    let halts: Vec<VTime> = out.halt_times.iter().map(|h| h.unwrap()).collect();
    let first = *halts.iter().min().unwrap();
    let last = *halts.iter().max().unwrap();
    assert!(last <= first + VTime::from_integer(3) * out.metrics.delta_observed);
}
