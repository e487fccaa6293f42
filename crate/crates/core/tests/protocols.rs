//! Protocol contracts under randomized adversaries, driven through the
//! public simulation interface.

use std::fmt::Debug;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use approxon::adversary::{RandomAdversary, RandomParams};
use approxon::check::{check_edge_int, check_edge_tree, check_epsilon, check_graded, check_provenance};
use approxon::graded::Gc2k;
use approxon::path::agr_z;
use approxon::real::EpsilonAgreement;
use approxon::sim::{measure_rounds, run_simulation, Automaton, PartyId, SimConfig, SimOutcome, VTime};
use approxon::terminate::{TcStar, Term, WithTerm};
use approxon::tree::{random_halving_tree, TcInput, Tree};
use approxon::wire::BitString;

fn execute<A, F>(n: usize, seed: u64, factory: F, inputs: Vec<Option<A::Input>>) -> SimOutcome<A::Output>
where
    A: Automaton,
    A::Output: Clone + Debug,
    F: FnMut(PartyId) -> A,
{
    let cfg = SimConfig::new(n, (n - 1) / 3, seed);
    let mut adv = RandomAdversary::new(seed, RandomParams::default());
    run_simulation(&cfg, factory, inputs, &mut adv).expect("valid configuration")
}

/// Honest inputs next to honest outputs; every honest party must have output.
fn honest_io<I: Clone, O: Clone + Debug>(inputs: &[I], out: &SimOutcome<O>) -> (Vec<I>, Vec<O>) {
    let outs = out.require_outputs().expect("every honest party outputs");
    let ins = out.honest_parties().map(|p| inputs[p.index()].clone()).collect();
    (ins, outs.into_iter().map(|(_, o)| o.clone()).collect())
}

fn parties() -> impl Strategy<Value = usize> {
    prop_oneof![Just(4usize), Just(7usize)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn graded_consensus_keeps_its_contract(n in parties(), k in 1u32..=3, seed in any::<u64>(), raw in prop::collection::vec(0u64..4, 7)) {
        let inputs: Vec<BitString> = raw[..n].iter().map(|&x| BitString::from_u64(x, 2)).collect();
        let out = execute(n, seed, |_| Gc2k::new(k, 2), inputs.iter().cloned().map(Some).collect());
        let (ins, outs) = honest_io(&inputs, &out);
        prop_assert!(check_graded(&ins, &outs, 1 << k).is_ok());
        prop_assert!(measure_rounds(&out).unwrap() <= VTime::from_integer(i64::from(3 * k + 3)));
    }

    #[test]
    fn integer_agreement_is_edge_agreement(n in parties(), seed in any::<u64>(), raw in prop::collection::vec(-1000i64..=1000, 7)) {
        let inputs: Vec<BigInt> = raw[..n].iter().map(|&x| BigInt::from(x)).collect();
        let out = execute(n, seed, |_| agr_z(), inputs.iter().cloned().map(Some).collect());
        let (ins, outs) = honest_io(&inputs, &out);
        prop_assert!(check_edge_int(&ins, &outs).is_ok(), "{:?} -> {:?}", ins, outs);
    }

    #[test]
    fn rational_outputs_are_eps_close(
        n in parties(),
        seed in any::<u64>(),
        eps_den in 1i64..=8,
        raw in prop::collection::vec((-400i64..=400, 1i64..=6), 7),
    ) {
        let eps = BigRational::new(1.into(), eps_den.into());
        let inputs: Vec<BigRational> = raw[..n].iter().map(|&(p, q)| BigRational::new(p.into(), q.into())).collect();
        let out = execute(n, seed, |_| EpsilonAgreement::standard(eps.clone()).unwrap(), inputs.iter().cloned().map(Some).collect());
        let (ins, outs) = honest_io(&inputs, &out);
        prop_assert!(check_epsilon(&ins, &outs, &eps).is_ok());
    }

    #[test]
    fn termination_outputs_an_honest_input(n in parties(), seed in any::<u64>(), base in 0u32..100, bits in prop::collection::vec(any::<bool>(), 7)) {
        let inputs: Vec<u32> = bits[..n].iter().map(|&b| base + u32::from(b)).collect();
        let out = execute(n, seed, |_| Term::<u32>::new(()), inputs.iter().copied().map(Some).collect());
        let (ins, outs) = honest_io(&inputs, &out);
        prop_assert!(check_provenance(&ins, &outs).is_ok());
        prop_assert!(out.honest_parties().all(|p| out.halt_times[p.index()].is_some()));
    }

    #[test]
    fn terminating_tree_agreement_halts_within_its_bound(
        n in parties(),
        j in 1u32..=3,
        max_degree in 2u32..=4,
        seed in any::<u64>(),
        picks in prop::collection::vec(any::<prop::sample::Index>(), 7),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree: Arc<Tree> = Arc::new(random_halving_tree(j, max_degree, &mut rng));
        let vs = tree.vertices();
        let chosen: Vec<u32> = picks[..n].iter().map(|i| vs[i.index(vs.len())]).collect();
        let inputs = chosen.iter().map(|&v| Some(TcInput::with_domain(v, tree.clone(), 0, None))).collect();
        let out = execute(n, seed, |_| TcStar::new(j, max_degree), inputs);
        let (ins, outs) = honest_io(&chosen, &out);
        prop_assert!(check_edge_tree(&tree, &ins, &outs).is_ok());
        prop_assert!(measure_rounds(&out).unwrap() <= VTime::from_integer(6 * i64::from(j) + 3));
    }
}

#[test]
fn wrapped_graded_consensus_terminates_with_the_inner_output() {
    for seed in 0..30 {
        let inputs: Vec<BitString> = (0..4).map(|i| BitString::from_u64(i % 2, 1)).collect();
        let out = execute(4, seed, |_| WithTerm::new(Gc2k::new(1, 1), 1), inputs.iter().cloned().map(Some).collect());
        let (ins, outs) = honest_io(&inputs, &out);
        assert!(check_graded(&ins, &outs, 2).is_ok(), "seed {seed}");
        assert!(out.honest_parties().all(|p| out.halt_times[p.index()].is_some()), "seed {seed}");
    }
}
