use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{honest_io, simulate, verdict, Setup, Tally, Verdict};
use crate::check::check_edge_int;
use crate::path::{agr_z, exp0, floor_log2_plus1, two_step_exp0};
use crate::sim::{Automaton, SimOutcome, VTime};

/// Honest messages of one exponential-search run stay below
/// `EXP_MESSAGE_FACTOR · n² · (q + 1)`.
pub const EXP_MESSAGE_FACTOR: u64 = 8;

const GRID: [i64; 4] = [1, 7, 100, 1000];
const SEEDS: u64 = 300;

/// Inputs in `[lo, hi]`: a common value, the two extremes, or uniform, by seed.
fn int_inputs(n: usize, lo: i64, hi: i64, seed: u64) -> Vec<Option<BigInt>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995);
    let common = rng.gen_range(lo..=hi);
    (0..n)
        .map(|_| {
            let x = match seed % 3 {
                0 => common,
                1 => {
                    if rng.gen() {
                        lo
                    } else {
                        hi
                    }
                }
                _ => rng.gen_range(lo..=hi),
            };
            Some(BigInt::from(x))
        })
        .collect()
}

fn party_count(seed: u64) -> usize {
    if seed.is_multiple_of(2) {
        4
    } else {
        7
    }
}

fn max_abs(xs: &[BigInt]) -> BigInt {
    xs.iter().map(|x| x.abs()).max().unwrap_or_else(BigInt::zero)
}

/// `⌊log₂ max(m, 1)⌋`.
fn floor_log2(m: &BigInt) -> u64 {
    m.bits().max(1) - 1
}

/// Round bound of the two-stage protocol for magnitude `m`:
/// `12·log₂(q + 1) + 19 + 6q` with `q = ⌊log₂(m + 1)⌋`.
fn two_step_bound(m: &BigInt) -> f64 {
    let q = floor_log2_plus1(m) as f64;
    12.0 * (q + 1.0).log2() + 19.0 + 6.0 * q
}

fn as_f64(t: &VTime) -> f64 {
    *t.numer() as f64 / *t.denom() as f64
}

/// Runs one seeded integer agreement and checks edge agreement and validity.
fn int_run<A, F>(
    tally: &mut Tally,
    setup: &Setup,
    ctx: &str,
    seed: u64,
    factory: F,
    inputs: Vec<Option<BigInt>>,
) -> Option<(SimOutcome<BigInt>, Vec<BigInt>)>
where
    A: Automaton<Input = BigInt, Output = BigInt>,
    F: FnMut(crate::sim::PartyId) -> A,
{
    let out = match simulate(inputs.len(), seed, setup, factory, inputs.clone()) {
        Ok(o) => o,
        Err(e) => {
            tally.fail(e);
            return None;
        }
    };
    let (ins, outs) = honest_io(&inputs, &out);
    tally.check(ctx, check_edge_int(&ins, &outs));
    Some((out, ins))
}

pub(super) fn exp0_criterion(setup: &Setup) -> Verdict {
    let mut tally = Tally::default();
    let mut peak_factor = 0f64;
    for m in GRID {
        for seed in 0..SEEDS {
            let n = party_count(seed);
            let ctx = format!("M={m} seed={seed}");
            let inputs = int_inputs(n, 0, m, seed);
            let Some((out, ins)) = int_run(&mut tally, setup, &ctx, seed, |_| exp0(), inputs) else { continue };
            let q = floor_log2(&max_abs(&ins));
            tally.rounds(&ctx, &out, VTime::from_integer(12 * q as i64 + 19));
            let scale = (n * n) as u64 * (q + 1);
            let msgs = out.metrics.messages_total;
            peak_factor = peak_factor.max(msgs as f64 / scale as f64);
            if msgs > EXP_MESSAGE_FACTOR * scale {
                tally.fail(format!("{ctx}: {msgs} messages over {EXP_MESSAGE_FACTOR}·{n}²·{}", q + 1));
            }
        }
    }
    verdict(
        tally.violations == 0,
        format!("{}, peak messages/(n²(q+1)) {peak_factor:.2}", tally.summary()),
        format!(
            "0 violations, rounds ≤ 12q+19 with q = ⌊log₂ max(M,1)⌋ of the largest honest input, \
             messages ≤ c·n²·(q+1) with c = {EXP_MESSAGE_FACTOR}"
        ),
    )
}

/// Tracks the largest ratio of measured rounds to a real-valued bound.
#[derive(Default)]
struct Slack {
    worst: f64,
}

impl Slack {
    fn check(&mut self, tally: &mut Tally, ctx: &str, out: &SimOutcome<BigInt>, bound: f64) {
        // the liveness side (and the rational maximum) goes through the tally
        let Some(r) = tally.rounds(ctx, out, VTime::from_integer(i64::MAX / 2)) else { return };
        let r = as_f64(&r);
        self.worst = self.worst.max(r / bound);
        if r > bound {
            tally.fail(format!("{ctx}: {r:.3} rounds over {bound:.3}"));
        }
    }
}

pub(super) fn two_step(setup: &Setup) -> Verdict {
    let mut tally = Tally::default();
    let mut slack = Slack::default();
    for m in GRID {
        for seed in 0..SEEDS {
            let n = party_count(seed);
            let ctx = format!("M={m} seed={seed}");
            let inputs = int_inputs(n, 0, m, seed);
            let Some((out, ins)) = int_run(&mut tally, setup, &ctx, seed, |_| two_step_exp0(), inputs) else {
                continue;
            };
            slack.check(&mut tally, &ctx, &out, two_step_bound(&max_abs(&ins)));
        }
    }
    verdict(
        tally.violations == 0,
        format!("{}, peak rounds/bound {:.3}", tally.summary(), slack.worst),
        "0 violations, rounds ≤ 12·log₂(q+1) + 19 + 6q with q = ⌊log₂(M+1)⌋ of the largest honest input",
    )
}

pub(super) fn agr_z_criterion(setup: &Setup) -> Verdict {
    let mut tally = Tally::default();
    let mut slack = Slack::default();
    for seed in 0..SEEDS {
        let n = party_count(seed);
        let ctx = format!("seed={seed}");
        let hi = [1000, 100, 7][(seed / 3 % 3) as usize];
        let inputs = int_inputs(n, -hi, hi, seed);
        let Some((out, ins)) = int_run(&mut tally, setup, &ctx, seed, |_| agr_z(), inputs) else { continue };
        slack.check(&mut tally, &ctx, &out, 6.0 + two_step_bound(&max_abs(&ins)));
    }
    let mut mirror_failures = 0;
    for seed in 0..50 {
        let n = party_count(seed);
        let inputs = int_inputs(n, -1000, 1000, seed + 1000);
        let mirrored: Vec<Option<BigInt>> = inputs.iter().map(|x| x.as_ref().map(|x| -x)).collect();
        let (a, b) = match (simulate(n, seed, setup, |_| agr_z(), inputs), simulate(n, seed, setup, |_| agr_z(), mirrored)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                tally.fail(e);
                continue;
            }
        };
        let negated: Vec<Option<BigInt>> = a.outputs.iter().map(|o| o.as_ref().map(|(_, y)| -y)).collect();
        let direct: Vec<Option<BigInt>> = b.outputs.iter().map(|o| o.as_ref().map(|(_, y)| y.clone())).collect();
        if a.honest != b.honest || negated != direct {
            mirror_failures += 1;
            tally.fail(format!("mirror seed={seed}: {negated:?} against {direct:?}"));
        }
    }
    verdict(
        tally.violations == 0,
        format!("{}, peak rounds/bound {:.3}, mirror mismatches {mirror_failures} of 50", tally.summary(), slack.worst),
        "0 violations, rounds ≤ 6 + the two-stage bound for the largest honest magnitude, mirrored inputs give mirrored outputs",
    )
}
