use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::adversary::{RandomAdversary, RandomParams, Silent};
use crate::check::check_epsilon;
use crate::sim::{run_simulation, SimConfig, VTime};

fn r(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

fn int(x: i64) -> BigInt {
    BigInt::from(x)
}

#[test]
fn rounding_examples() {
    assert_eq!(round_ties_toward_zero(&r(5, 2)), int(2));
    assert_eq!(round_ties_toward_zero(&r(-5, 2)), int(-2));
    assert_eq!(round_ties_toward_zero(&r(37, 10)), int(4));
    assert_eq!(round_ties_toward_zero(&r(-37, 10)), int(-4));
    assert_eq!(round_ties_toward_zero(&r(-2, 5)), int(0));
}

#[test]
fn unround_examples() {
    assert_eq!(unround(&int(5), &r(3, 1)), r(9, 2));
    assert_eq!(unround(&int(5), &r(26, 5)), r(26, 5));
    assert_eq!(unround(&int(7), &r(7, 1)), r(7, 1));
}

#[test]
fn input_bound_example() {
    assert_eq!(inner_input_bound(&r(8, 1), &r(1, 4)), int(64));
}

#[test]
fn parsing_and_formatting() {
    assert_eq!(parse_rational("2.5"), Ok(r(5, 2)));
    assert_eq!(parse_rational("-0.4"), Ok(r(-2, 5)));
    assert_eq!(parse_rational(" 3/12 "), Ok(r(1, 4)));
    assert_eq!(parse_rational("7"), Ok(r(7, 1)));
    assert_eq!(parse_rational(".5"), Ok(r(1, 2)));
    for bad in ["", "-", "1/0", "1.2.3", "abc", "1e3"] {
        assert!(parse_rational(bad).is_err(), "{bad}");
    }
    assert_eq!(format_decimal(&r(-2, 5), 3), "-0.400");
    assert_eq!(format_decimal(&r(1, 3), 2), "0.33");
    assert_eq!(format_decimal(&r(-1, 1000), 2), "0.00");
}

#[test]
fn rejects_non_positive_epsilon() {
    assert!(EpsilonAgreement::standard(r(0, 1)).is_err());
    assert!(EpsilonAgreement::standard(r(-1, 2)).is_err());
}

fn run_eps(eps: &BigRational, inputs: &[BigRational], seed: u64, silent: bool) -> (Vec<BigRational>, Vec<BigRational>) {
    let n = inputs.len();
    let cfg = SimConfig::new(n, (n - 1) / 3, seed);
    let mut adv: Box<dyn crate::sim::Adversary> = if silent {
        Box::new(Silent::new(VTime::from_integer(1)))
    } else {
        Box::new(RandomAdversary::new(seed, RandomParams::default()))
    };
    let out = run_simulation(
        &cfg,
        |_| EpsilonAgreement::standard(eps.clone()).unwrap(),
        inputs.iter().cloned().map(Some).collect(),
        adv.as_mut(),
    )
    .unwrap();
    assert!(out.faults.is_empty(), "{:?}", out.faults);
    let ys = out.require_outputs().unwrap();
    (ys.iter().map(|(p, _)| inputs[p.index()].clone()).collect(), ys.into_iter().map(|(_, y)| y.clone()).collect())
}

#[test]
fn common_input_is_kept() {
    for v in [r(7, 3), r(-5, 2), r(0, 1)] {
        let (_, ys) = run_eps(&r(1, 4), &vec![v.clone(); 4], 0, true);
        assert!(ys.iter().all(|y| *y == v));
    }
}

#[test]
fn mixed_inputs_reach_epsilon_agreement() {
    let inputs = vec![r(5, 2), r(-2, 5), r(7, 1), r(7, 1)];
    let expected: Vec<BigInt> = inputs.iter().map(|v| EpsilonAgreement::<Exp>::inner_input(&r(2, 1), v)).collect();
    assert_eq!(expected, vec![int(2), int(0), int(7), int(7)]);
    for seed in 0..20 {
        let (xs, ys) = run_eps(&r(2, 1), &inputs, seed, false);
        check_epsilon(&xs, &ys, &r(2, 1)).unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..20 {
        let inputs: Vec<BigRational> = (0..4).map(|_| r(rng.gen_range(-1000..=1000), rng.gen_range(1..=10))).collect();
        let (xs, ys) = run_eps(&r(1, 4), &inputs, seed, false);
        check_epsilon(&xs, &ys, &r(1, 4)).unwrap();
    }
}

proptest! {
    #[test]
    fn rounding_is_nearest(p in -10_000i64..10_000, q in 1i64..100) {
        let x = r(p, q);
        let y = BigRational::from_integer(round_ties_toward_zero(&x));
        let d = (&y - &x).abs();
        prop_assert!(d <= r(1, 2));
        if d == r(1, 2) {
            prop_assert!(y.abs() < x.abs());
        }
    }

    #[test]
    fn unround_moves_at_most_half(y in -1000i64..1000, p in -10_000i64..10_000, q in 1i64..50) {
        let v = r(p, q);
        let z = unround(&int(y), &v);
        prop_assert!((&z - BigRational::from_integer(int(y))).abs() <= r(1, 2));
        let (lo, hi) = if BigRational::from_integer(int(y)) <= v { (int(y).into(), v.clone()) } else { (v.clone(), int(y).into()) };
        prop_assert!(lo <= z && z <= hi);
    }

    #[test]
    fn inner_inputs_respect_the_bound(p in -10_000i64..10_000, q in 1i64..50, e in 1i64..20, f in 1i64..20) {
        let v = r(p, q);
        let eps = r(e, f);
        let x = EpsilonAgreement::<Exp>::inner_input(&eps, &v);
        prop_assert!(x.abs() <= inner_input_bound(&v.abs(), &eps));
    }
}
