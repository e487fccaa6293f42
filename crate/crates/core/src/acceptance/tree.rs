use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{honest_io, simulate, verdict, Setup, Tally, Verdict};
use crate::check::{check_edge_tree, check_graded};
use crate::graded::GradedOutput;
use crate::sim::VTime;
use crate::tree::{build_spider_fixture, random_halving_tree, spider_grade, Tree, TcInput, TreeTc};
use crate::wire::BitString;

type Input = TcInput<Arc<Tree>>;

/// Anchors of the generated trees.
const A: u32 = 0;
const B: u32 = 1;

fn party_count(seed: u64) -> usize {
    if seed.is_multiple_of(2) {
        4
    } else {
        7
    }
}

/// Input vertices from a pool of one to three random vertices.
fn vertex_inputs(tree: &Tree, n: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let vs = tree.vertices();
    let pool: Vec<u32> = (0..rng.gen_range(1..=3)).map(|_| vs[rng.gen_range(0..vs.len())]).collect();
    (0..n).map(|_| pool[rng.gen_range(0..pool.len())]).collect()
}

pub(super) fn standard(setup: &Setup) -> Verdict {
    let mut tally = Tally::default();
    for j in 1..=4u32 {
        for seed in 0..300 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed << 8 | u64::from(j));
            let max_degree = rng.gen_range(2..=4);
            let tree = Arc::new(random_halving_tree(j, max_degree, &mut rng));
            let n = party_count(seed);
            let b = rng.gen_bool(0.5).then_some(B);
            let vs = vertex_inputs(&tree, n, &mut rng);
            let inputs: Vec<Option<Input>> =
                vs.iter().map(|&v| Some(TcInput::with_domain(v, tree.clone(), A, b))).collect();
            let out = match simulate(n, seed, setup, |_| TreeTc::new(j, max_degree), inputs) {
                Ok(o) => o,
                Err(e) => {
                    tally.fail(e);
                    continue;
                }
            };
            let ctx = format!("j={j} seed={seed}");
            tally.rounds(&ctx, &out, VTime::from_integer(6 * i64::from(j)));
            let vin: Vec<Option<u32>> = vs.iter().copied().map(Some).collect();
            let (ins, outs) = honest_io(&vin, &out);
            tally.check(&ctx, check_edge_tree(&tree, &ins, &outs));
        }
    }
    verdict(
        tally.violations == 0,
        tally.summary(),
        "0 violations of edge agreement or hull validity (path-union oracle), rounds ≤ 6j",
    )
}

pub(super) fn anchors(setup: &Setup) -> Verdict {
    let mut tally = Tally::default();
    for j in 1..=4u32 {
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed << 8 | u64::from(j));
            let max_degree = rng.gen_range(2..=4);
            let tree = Arc::new(random_halving_tree(j, max_degree, &mut rng));
            let n = party_count(seed);
            let b_star = rng.gen_bool(0.5).then_some(B);
            let with_tree: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let a_side: Vec<Option<Input>> = with_tree
                .iter()
                .map(|&t| Some(if t { TcInput::with_domain(A, tree.clone(), A, b_star) } else { TcInput::pinned_a(A) }))
                .collect();
            let b_side: Vec<Option<Input>> = with_tree
                .iter()
                .map(|&t| {
                    Some(if t {
                        TcInput::with_domain(B, tree.clone(), A, Some(B))
                    } else {
                        TcInput { v: B, domain: None, a: None, b: Some(B) }
                    })
                })
                .collect();
            for (side, want, inputs) in [("A", A, a_side), ("B", B, b_side)] {
                let ctx = format!("{side} j={j} seed={seed}");
                let out = match simulate(n, seed, setup, |_| TreeTc::new(j, max_degree), inputs) {
                    Ok(o) => o,
                    Err(e) => {
                        tally.fail(e);
                        continue;
                    }
                };
                tally.runs += 1;
                match out.require_outputs() {
                    Ok(outs) => {
                        if let Some((p, y)) = outs.iter().find(|(_, y)| **y != want) {
                            tally.fail(format!("{ctx}: party {p} output {y}, not the anchor {want}"));
                        }
                    }
                    Err(e) => tally.fail(format!("{ctx}: liveness: {e}")),
                }
            }
        }
    }
    verdict(tally.violations == 0, format!("{} runs, {} violations{}", tally.runs, tally.violations, first(&tally)), "every honest output equals the anchor")
}

fn first(t: &Tally) -> String {
    t.first.as_ref().map(|f| format!("; first: {f}")).unwrap_or_default()
}

pub(super) fn spider(setup: &Setup) -> Verdict {
    const VALUES: u32 = 3;
    const K: u32 = 2;
    let (tree, leaves) = build_spider_fixture(VALUES, K);
    let tree = Arc::new(tree);
    let j = (2 * K).trailing_zeros();
    let as_graded = |v: u32| match spider_grade(v, K) {
        Some((m, g)) => GradedOutput::new(BitString::from_u64(u64::from(m), 2), g),
        None => GradedOutput::bottom(),
    };
    let mut tally = Tally::default();
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = party_count(seed);
        let spread = rng.gen_range(1..=VALUES as usize);
        let picks: Vec<usize> = (0..n).map(|_| rng.gen_range(0..spread)).collect();
        let inputs: Vec<Option<Input>> =
            picks.iter().map(|&m| Some(TcInput::with_domain(leaves[m], tree.clone(), leaves[0], None))).collect();
        let out = match simulate(n, seed, setup, |_| TreeTc::new(j, VALUES), inputs) {
            Ok(o) => o,
            Err(e) => {
                tally.fail(e);
                continue;
            }
        };
        let ctx = format!("seed={seed}");
        tally.rounds(&ctx, &out, VTime::from_integer(6 * i64::from(j)));
        let values: Vec<Option<BitString>> = picks.iter().map(|&m| Some(BitString::from_u64(m as u64, 2))).collect();
        let (ins, outs) = honest_io(&values, &out);
        let graded: Vec<GradedOutput> = outs.into_iter().map(as_graded).collect();
        tally.check(&ctx, check_graded(&ins, &graded, K));
    }
    verdict(
        tally.violations == 0,
        tally.summary(),
        "outputs read as (value, grade) satisfy the 2-graded consensus contract",
    )
}
