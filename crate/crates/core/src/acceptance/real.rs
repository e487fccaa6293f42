use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{honest_io, simulate, verdict, Setup, Tally, Verdict};
use crate::check::check_epsilon;
use crate::path::{AgrZ, Exp, TwoStep};
use crate::real::{inner_input_bound, EpsilonAgreement};

type Standard = EpsilonAgreement<AgrZ<TwoStep<Exp>>>;

fn r(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

/// Rationals in `[−m, m]` with denominators up to 12; clustered, two-valued
/// or spread by seed.
fn rational_inputs(n: usize, m: i64, seed: u64) -> Vec<Option<BigRational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe95);
    let draw = |rng: &mut ChaCha8Rng| {
        let q = rng.gen_range(1..=12);
        r(rng.gen_range(-m * q..=m * q), q)
    };
    let pool: Vec<BigRational> = match seed % 3 {
        0 => vec![draw(&mut rng)],
        1 => vec![draw(&mut rng), draw(&mut rng)],
        _ => (0..n).map(|_| draw(&mut rng)).collect(),
    };
    (0..n).map(|_| Some(pool[rng.gen_range(0..pool.len())].clone())).collect()
}

pub(super) fn epsilon(setup: &Setup) -> Verdict {
    let mut tally = Tally::default();
    let mut widest = BigRational::zero();
    let mut peak_inner = BigInt::zero();
    for eps in [r(2, 1), r(1, 4)] {
        for seed in 0..300 {
            let n = if seed % 2 == 0 { 4 } else { 7 };
            let m = [100, 10, 1][(seed / 3 % 3) as usize];
            let inputs = rational_inputs(n, m, seed);
            let ctx = format!("eps={eps} seed={seed}");
            let out = match simulate(n, seed, setup, |_| EpsilonAgreement::standard(eps.clone()).expect("ε > 0"), inputs.clone())
            {
                Ok(o) => o,
                Err(e) => {
                    tally.fail(e);
                    continue;
                }
            };
            tally.runs += 1;
            if let Err(e) = out.require_outputs() {
                tally.fail(format!("{ctx}: liveness: {e}"));
            }
            let (ins, outs) = honest_io(&inputs, &out);
            tally.check(&ctx, check_epsilon(&ins, &outs, &eps));
            if let (Some(lo), Some(hi)) = (outs.iter().min(), outs.iter().max()) {
                widest = widest.max((hi - lo) / &eps);
            }
            let big_m = ins.iter().map(|x| x.abs()).max().unwrap_or_else(BigRational::zero);
            let cap = inner_input_bound(&big_m, &eps);
            for x in &ins {
                let z = Standard::inner_input(&eps, x).abs();
                if z > cap {
                    tally.fail(format!("{ctx}: inner input {z} over {cap}"));
                }
                peak_inner = peak_inner.max(z);
            }
        }
    }
    verdict(
        tally.violations == 0,
        format!(
            "{} runs, {} violations, widest output gap {}·ε, largest inner magnitude {peak_inner}{}",
            tally.runs,
            tally.violations,
            widest,
            tally.first.as_ref().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
        "output gap ≤ ε exactly, outputs within the honest input range, inner inputs ≤ ⌈2M/ε − ½⌉",
    )
}
