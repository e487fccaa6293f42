//! Per-run property checkers over honest inputs and outputs.
//!
//! Each checker takes only honest values and names the first violated
//! property.

use std::collections::BTreeSet;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;

use crate::graded::GradedOutput;
use crate::tree::Tree;
use crate::wire::BitString;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{property}: {detail}")]
pub struct Violation {
    pub property: &'static str,
    pub detail: String,
}

fn fail<T>(property: &'static str, detail: String) -> Result<T, Violation> {
    Err(Violation { property, detail })
}

/// k-graded consensus with maximum grade `max_grade`.
pub fn check_graded(inputs: &[BitString], outputs: &[GradedOutput], max_grade: u32) -> Result<(), Violation> {
    for y in outputs {
        if y.grade > max_grade || y.is_bottom() != (y.grade == 0) {
            return fail("shape", format!("{y:?} with maximum grade {max_grade}"));
        }
        if let Some(v) = &y.value {
            if !inputs.contains(v) {
                return fail("intrusion tolerance", format!("{v:?} is no honest input"));
            }
        }
    }
    for (i, a) in outputs.iter().enumerate() {
        for b in &outputs[i + 1..] {
            if a.grade.abs_diff(b.grade) > 1 {
                return fail("agreement", format!("grades of {a:?} and {b:?} differ by more than 1"));
            }
            if a.grade > 0 && b.grade > 0 && a.value != b.value {
                return fail("agreement", format!("{a:?} and {b:?} disagree on the value"));
            }
        }
    }
    if let Some(v) = common(inputs) {
        let want = GradedOutput::new(v.clone(), max_grade);
        if let Some(y) = outputs.iter().find(|y| **y != want) {
            return fail("validity", format!("common input {v:?} but output {y:?}"));
        }
    }
    Ok(())
}

/// Proposal sets: pairwise intersecting, made of honest inputs, and equal to
/// `{v}` when every honest input is `v`.
pub fn check_prop<V: Ord + Clone + Debug>(inputs: &[V], outputs: &[Vec<V>]) -> Result<(), Violation> {
    for y in outputs {
        if y.is_empty() {
            return fail("shape", "empty output set".into());
        }
        if let Some(x) = y.iter().find(|x| !inputs.contains(x)) {
            return fail("provenance", format!("{x:?} is no honest input"));
        }
    }
    for (i, a) in outputs.iter().enumerate() {
        for b in &outputs[i + 1..] {
            if !a.iter().any(|x| b.contains(x)) {
                return fail("intersection", format!("{a:?} and {b:?} are disjoint"));
            }
        }
    }
    if let Some(v) = common(inputs) {
        if let Some(y) = outputs.iter().find(|y| y.as_slice() != [v.clone()]) {
            return fail("validity", format!("common input {v:?} but output {y:?}"));
        }
    }
    Ok(())
}

fn common<V: PartialEq>(xs: &[V]) -> Option<&V> {
    let first = xs.first()?;
    xs.iter().all(|x| x == first).then_some(first)
}

/// Union of the paths between every pair of `z`, computed independently of
/// the leaf-stripping hull.
pub fn hull_by_paths(tree: &Tree, z: &BTreeSet<u32>) -> BTreeSet<u32> {
    let mut out = z.clone();
    let zs: Vec<u32> = z.iter().copied().collect();
    for (i, &x) in zs.iter().enumerate() {
        for &y in &zs[i + 1..] {
            out.extend(tree.path_between(x, y).expect("vertices of the tree"));
        }
    }
    out
}

/// Edge agreement in a tree: equal or adjacent outputs inside the hull.
pub fn check_edge_tree(tree: &Tree, inputs: &[u32], outputs: &[u32]) -> Result<(), Violation> {
    let hull = hull_by_paths(tree, &inputs.iter().copied().collect());
    if let Some(y) = outputs.iter().find(|y| !hull.contains(y)) {
        return fail("validity", format!("{y} is outside the hull {hull:?}"));
    }
    for (i, &a) in outputs.iter().enumerate() {
        for &b in &outputs[i + 1..] {
            if tree.distance(a, b).expect("vertices of the tree") > 1 {
                return fail("agreement", format!("{a} and {b} are not adjacent"));
            }
        }
    }
    Ok(())
}

/// Edge agreement on integers: outputs within 1 of each other and inside
/// `[min input, max input]`.
pub fn check_edge_int(inputs: &[BigInt], outputs: &[BigInt]) -> Result<(), Violation> {
    let (Some(lo), Some(hi)) = (inputs.iter().min(), inputs.iter().max()) else {
        return Ok(());
    };
    if let Some(y) = outputs.iter().find(|y| *y < lo || *y > hi) {
        return fail("validity", format!("{y} is outside [{lo}, {hi}]"));
    }
    if let (Some(a), Some(b)) = (outputs.iter().min(), outputs.iter().max()) {
        if b - a > BigInt::from(1) {
            return fail("agreement", format!("{a} and {b} are more than 1 apart"));
        }
    }
    Ok(())
}

/// ε-agreement on rationals: outputs within `eps` and inside the input range.
pub fn check_epsilon(inputs: &[BigRational], outputs: &[BigRational], eps: &BigRational) -> Result<(), Violation> {
    let (Some(lo), Some(hi)) = (inputs.iter().min(), inputs.iter().max()) else {
        return Ok(());
    };
    if let Some(y) = outputs.iter().find(|y| *y < lo || *y > hi) {
        return fail("validity", format!("{y} is outside [{lo}, {hi}]"));
    }
    if let (Some(a), Some(b)) = (outputs.iter().min(), outputs.iter().max()) {
        if (b - a).abs() > *eps {
            return fail("agreement", format!("{a} and {b} are more than {eps} apart"));
        }
    }
    Ok(())
}

/// Every output is some honest input.
pub fn check_provenance<V: PartialEq + Debug>(inputs: &[V], outputs: &[V]) -> Result<(), Violation> {
    match outputs.iter().find(|y| !inputs.contains(y)) {
        Some(y) => fail("provenance", format!("{y:?} is no honest input")),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x: u64) -> BitString {
        BitString::from_u64(x, 1)
    }

    fn ints(xs: &[i64]) -> Vec<BigInt> {
        xs.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn graded_checks() {
        let ins = [b(0), b(1)];
        assert!(check_graded(&ins, &[GradedOutput::new(b(0), 1), GradedOutput::bottom()], 1).is_ok());
        assert!(check_graded(&ins, &[GradedOutput::new(b(0), 2), GradedOutput::bottom()], 2).is_err());
        assert!(check_graded(&ins, &[GradedOutput::new(b(0), 1), GradedOutput::new(b(1), 1)], 1).is_err());
        assert!(check_graded(&[b(0)], &[GradedOutput::new(b(1), 1)], 1).is_err());
        assert!(check_graded(&[b(0), b(0)], &[GradedOutput::bottom()], 1).is_err());
    }

    #[test]
    fn prop_checks() {
        assert!(check_prop(&[0, 1], &[vec![0], vec![0, 1]]).is_ok());
        assert!(check_prop(&[0, 1], &[vec![0], vec![1]]).is_err());
        assert!(check_prop(&[0, 0], &[vec![0, 1]]).is_err());
    }

    #[test]
    fn tree_checks() {
        let p = Tree::path(4);
        assert!(check_edge_tree(&p, &[0, 3], &[1, 2]).is_ok());
        assert!(check_edge_tree(&p, &[0, 3], &[1, 3]).is_err());
        assert!(check_edge_tree(&p, &[0, 2], &[3]).is_err());
        assert_eq!(hull_by_paths(&p, &[1, 3].into()), [1, 2, 3].into());
    }

    #[test]
    fn integer_checks() {
        assert!(check_edge_int(&ints(&[-3, 5]), &ints(&[1, 2, 2])).is_ok());
        assert!(check_edge_int(&ints(&[-3, 5]), &ints(&[1, 3])).is_err());
        assert!(check_edge_int(&ints(&[-3, 5]), &ints(&[6])).is_err());
    }

    #[test]
    fn epsilon_checks() {
        let r = |p: i64, q: i64| BigRational::new(p.into(), q.into());
        let eps = r(1, 4);
        assert!(check_epsilon(&[r(0, 1), r(1, 1)], &[r(1, 2), r(3, 4)], &eps).is_ok());
        assert!(check_epsilon(&[r(0, 1), r(1, 1)], &[r(1, 2), r(4, 5)], &eps).is_err());
    }
}
