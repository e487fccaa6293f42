use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn set(xs: impl IntoIterator<Item = u32>) -> BTreeSet<u32> {
    xs.into_iter().collect()
}

/// Center 0 with three limbs of two vertices: 1–2, 3–4, 5–6.
fn three_limbs() -> Tree {
    Tree::spider(3, 2)
}

fn random_tree(n: u32, seed: u64) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<_> = (1..n).map(|i| (rng.gen_range(0..i), i)).collect();
    Tree::from_edges(n, &edges).unwrap()
}

/// Builds a halving tree of order `j` in which `sigma` is an anchor leaf
/// and `far` is another leaf at distance `2^j` from it.
fn halving_branch(j: u32, sigma: u32, far: u32, next: &mut u32, rng: &mut ChaCha8Rng, edges: &mut Vec<(u32, u32)>) {
    if j == 0 {
        edges.push((sigma, far));
        return;
    }
    let center = *next;
    *next += 1;
    halving_branch(j - 1, center, sigma, next, rng, edges);
    halving_branch(j - 1, center, far, next, rng, edges);
    for _ in 0..rng.gen_range(0..=1) {
        let leaf = *next;
        *next += 1;
        halving_branch(j - 1, center, leaf, next, rng, edges);
    }
}

fn random_halving(j: u32, seed: u64) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    let mut next = 2;
    halving_branch(j, 0, 1, &mut next, &mut rng, &mut edges);
    Tree::from_edges(next, &edges).unwrap()
}

/// Union of all pairwise paths.
fn hull_oracle(t: &Tree, z: &BTreeSet<u32>) -> BTreeSet<u32> {
    let mut out = z.clone();
    for &x in z {
        for &y in z {
            out.extend(t.path_between(x, y).unwrap());
        }
    }
    out
}

#[test]
fn diameters() {
    assert_eq!(Tree::path(1).diameter(), 1);
    assert_eq!(Tree::path(8).diameter(), 8);
    assert_eq!(three_limbs().diameter(), 4);
}

#[test]
fn centers() {
    assert_eq!(Tree::path(8).center(), Ok(4));
    assert_eq!(Tree::spider(3, 1).center(), Ok(0));
    assert_eq!(three_limbs().center(), Ok(0));
    assert_eq!(Tree::path(3).center(), Err(TreeError::OddDiameter(3)));
    assert_eq!(Tree::single(0).center(), Err(TreeError::OddDiameter(0)));
}

#[test]
fn path_decomposition_follows_anchors() {
    let p = Tree::path(8);
    let dec = p.central_decomposition(Some(0), None).unwrap();
    assert_eq!(dec.sigma, 4);
    assert_eq!(dec.neighbors, vec![3, 5]);
    assert_eq!(set(dec.subtrees[0].vertices().iter().copied()), set(0..=4));
    assert_eq!(set(dec.subtrees[1].vertices().iter().copied()), set(4..=8));
    let dec = p.central_decomposition(Some(8), Some(0)).unwrap();
    assert_eq!(dec.neighbors, vec![5, 3]);
}

#[test]
fn three_limb_decomposition() {
    let t = three_limbs();
    let dec = t.central_decomposition(Some(4), Some(6)).unwrap();
    assert_eq!(dec.neighbors, vec![3, 5, 1]);
    let hs: Vec<BTreeSet<u32>> = dec.subtrees.iter().map(|h| set(h.vertices().iter().copied())).collect();
    assert_eq!(hs, vec![set([0, 3, 4]), set([0, 5, 6]), set([0, 1, 2])]);
}

#[test]
fn bad_anchors_are_rejected() {
    let p = Tree::path(8);
    assert!(matches!(p.central_decomposition(Some(2), None), Err(TreeError::BadAnchor(_))));
    assert!(matches!(p.central_decomposition(Some(0), Some(0)), Err(TreeError::BadAnchor(_))));
    assert!(matches!(p.central_decomposition(Some(9), None), Err(TreeError::BadAnchor(_))));
}

#[test]
fn gc_indices() {
    let p = Tree::path(8);
    let dec = p.central_decomposition(Some(0), None).unwrap();
    assert_eq!(p.gc_input_index(4, &dec), Ok(1));
    assert_eq!(p.gc_input_index(7, &dec), Ok(2));
    assert_eq!(p.gc_input_index(0, &dec), Ok(1));
}

#[test]
fn hull_examples() {
    let p = Tree::path(8);
    assert_eq!(p.convex_hull(&set([3])), Ok(set([3])));
    assert_eq!(p.convex_hull(&set([1, 6])), Ok(set(1..=6)));
    let t = three_limbs();
    assert_eq!(t.convex_hull(&set([2, 4])), Ok(set([0, 1, 2, 3, 4])));
}

#[test]
fn growth_pads_paths() {
    let (g, a) = Tree::path(5).grow_to_power_of_two().unwrap();
    assert_eq!(g, Tree::path(8));
    assert!(a == 0 || a == 8);
    let (g, a) = Tree::path(8).grow_to_power_of_two().unwrap();
    assert_eq!(g, Tree::path(8));
    assert!(a == 0 || a == 8);
    let (g, a) = three_limbs().grow_to_power_of_two().unwrap();
    assert_eq!(g, three_limbs());
    assert!(g.is_leaf(a) && g.distance(0, a) == Ok(2));
}

#[test]
fn spider_fixtures() {
    let (t, leaves) = build_spider_fixture(3, 2);
    assert_eq!(t.vertex_count(), 7);
    assert_eq!(leaves, vec![2, 4, 6]);
    assert_eq!(spider_grade(4, 2), Some((1, 2)));
    assert_eq!(spider_grade(0, 2), None);
    let (t, leaves) = build_spider_fixture(1, 1);
    assert_eq!(t, Tree::path(1));
    assert_eq!(leaves, vec![1]);
}

#[test]
fn invalid_edge_lists() {
    assert!(Tree::from_edges(3, &[(0, 1)]).is_err());
    assert!(Tree::from_edges(4, &[(0, 1), (1, 0), (2, 3)]).is_err());
    assert!(Tree::from_edges(3, &[(0, 1), (1, 5)]).is_err());
}

#[test]
fn halving_classification() {
    assert!(Tree::path(8).is_halving(3));
    assert!(three_limbs().is_halving(2));
    // a fork below the center makes a central subtree too wide
    let forked = Tree::from_edges(12, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 5), (5, 6), (6, 7), (7, 8), (5, 9), (9, 10), (10, 11)]).unwrap();
    assert_eq!(forked.diameter(), 8);
    assert!(!forked.is_halving(3));
}

#[test]
fn serde_roundtrip() {
    let t = three_limbs();
    let json = serde_json::to_string(&t).unwrap();
    assert_eq!(serde_json::from_str::<Tree>(&json).unwrap(), t);
    assert!(serde_json::from_str::<Tree>(r#"{"vertices":[0,1,2],"edges":[[0,1]]}"#).is_err());
}

proptest! {
    #[test]
    fn hull_matches_oracle_and_is_monotone(n in 1u32..40, seed in any::<u64>(), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..6), sub in prop::collection::vec(any::<prop::sample::Index>(), 1..6)) {
        let t = random_tree(n, seed);
        let z: BTreeSet<u32> = picks.iter().map(|i| i.index(n as usize) as u32).collect();
        let hull = t.convex_hull(&z).unwrap();
        prop_assert_eq!(&hull, &hull_oracle(&t, &z));
        let members: Vec<u32> = hull.iter().copied().collect();
        let y: BTreeSet<u32> = sub.iter().map(|i| *i.get(&members)).collect();
        prop_assert!(t.convex_hull(&y).unwrap().is_subset(&hull));
    }

    #[test]
    fn central_subtrees_partition_halving_trees(j in 1u32..=5, seed in any::<u64>()) {
        let t = random_halving(j, seed);
        prop_assert_eq!(t.diameter(), 1 << j);
        prop_assert!(t.is_halving(j));
        let dec = t.central_decomposition(None, None).unwrap();
        let mut union = BTreeSet::new();
        for (k, h) in dec.subtrees.iter().enumerate() {
            prop_assert!(h.contains(dec.sigma) && h.contains(dec.neighbors[k]));
            prop_assert_eq!(h.diameter(), 1 << (j - 1));
            for h2 in &dec.subtrees[k + 1..] {
                let common: Vec<u32> = h.vertices().iter().copied().filter(|&v| h2.contains(v)).collect();
                prop_assert_eq!(common, vec![dec.sigma]);
            }
            union.extend(h.vertices().iter().copied());
        }
        prop_assert_eq!(union, set(t.vertices().iter().copied()));
    }

    #[test]
    fn generated_halving_trees_respect_degree(j in 0u32..=5, d in 2u32..=5, seed in any::<u64>()) {
        let t = random_halving_tree(j, d, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(t.is_halving(j));
        prop_assert!(t.max_degree() <= d as usize);
        prop_assert!(t.is_leaf(0) && t.is_leaf(1));
        prop_assert_eq!(t.distance(0, 1).unwrap(), 1 << j);
    }

    #[test]
    fn growth_reaches_power_of_two(n in 3u32..40, seed in any::<u64>()) {
        let t = random_tree(n, seed);
        prop_assume!(t.diameter() >= 2);
        let (g, a) = t.grow_to_power_of_two().unwrap();
        let d = g.diameter();
        prop_assert!(d.is_power_of_two() && d >= t.diameter() && d < 2 * t.diameter());
        prop_assert!(g.max_degree() <= t.max_degree().max(2));
        prop_assert!(g.is_leaf(a));
        prop_assert_eq!(g.distance(g.center().unwrap(), a).unwrap(), d / 2);
        for (u, v) in t.edges() {
            prop_assert!(g.edges().contains(&(u, v)));
        }
    }
}
