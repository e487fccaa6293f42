use std::fmt::Debug;
use std::hash::Hash;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::One;

use super::Tree;
use crate::graded::{index_bits, Gc2k, GradedOutput};
use crate::sim::{drive, Automaton, Context, Incoming, Latch, ProtocolKind, TagComponent};
use crate::terminate::Term;
use crate::wire::BitString;

/// A center and its central subtrees, with the subtree holding the `a`
/// anchor first and the one holding `b` second.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Split<D: Domain> {
    pub sigma: D::Vertex,
    pub parts: Vec<D>,
}

/// A domain of diameter `2^j` that can be cut at its center.
pub trait Domain: Clone + Debug + Eq + Hash + Sized {
    type Vertex: Clone + Debug + Eq + Ord + Hash;

    fn contains(&self, v: &Self::Vertex) -> bool;

    fn split(&self, a: &Self::Vertex, b: Option<&Self::Vertex>) -> Result<Split<Self>, String>;
}

impl Domain for Arc<Tree> {
    type Vertex = u32;

    fn contains(&self, v: &u32) -> bool {
        Tree::contains(self, *v)
    }

    fn split(&self, a: &u32, b: Option<&u32>) -> Result<Split<Self>, String> {
        let dec = self.central_decomposition(Some(*a), b.copied()).map_err(|e| e.to_string())?;
        Ok(Split { sigma: dec.sigma, parts: dec.subtrees.into_iter().map(Arc::new).collect() })
    }
}

/// The integer path `lo, lo+1, …, hi` with `hi − lo` a power of two.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Segment {
    pub lo: BigInt,
    pub hi: BigInt,
}

impl Segment {
    /// `(2^j − 1, …, 2^{j+1} − 1)`.
    pub fn dyadic(j: u32) -> Self {
        let lo = (BigInt::one() << j) - 1;
        let hi = (BigInt::one() << (j + 1)) - 1;
        Segment { lo, hi }
    }

    pub fn clamp(&self, v: &BigInt) -> BigInt {
        v.clone().max(self.lo.clone()).min(self.hi.clone())
    }
}

impl Domain for Segment {
    type Vertex = BigInt;

    fn contains(&self, v: &BigInt) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    fn split(&self, a: &BigInt, b: Option<&BigInt>) -> Result<Split<Self>, String> {
        let width = &self.hi - &self.lo;
        if width < BigInt::from(2) || (&width & (&width - 1u32)) != BigInt::default() {
            return Err(format!("segment width {width} is not a power of two ≥ 2"));
        }
        let sigma: BigInt = (&self.lo + &self.hi) >> 1u32;
        let left = Segment { lo: self.lo.clone(), hi: sigma.clone() };
        let right = Segment { lo: sigma.clone(), hi: self.hi.clone() };
        let (first, second, other) = if *a == self.lo {
            (left, right, &self.hi)
        } else if *a == self.hi {
            (right, left, &self.lo)
        } else {
            return Err(format!("anchor {a} is not an endpoint"));
        };
        if b.is_some_and(|b| b != other) {
            return Err("second anchor is not the opposite endpoint".into());
        }
        Ok(Split { sigma, parts: vec![first, second] })
    }
}

/// Input `(v, T, a, b)`. Either `T` and `a` are both present, or `T` is
/// absent and exactly one of `a`, `b` is.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TcInput<D: Domain> {
    pub v: D::Vertex,
    pub domain: Option<D>,
    pub a: Option<D::Vertex>,
    pub b: Option<D::Vertex>,
}

impl<D: Domain> TcInput<D> {
    /// A party that knows the domain.
    pub fn with_domain(v: D::Vertex, domain: D, a: D::Vertex, b: Option<D::Vertex>) -> Self {
        TcInput { v, domain: Some(domain), a: Some(a), b }
    }

    /// `(v, ⊥, v, ⊥)`: forces the output `v`.
    pub fn pinned_a(v: D::Vertex) -> Self {
        TcInput { v: v.clone(), domain: None, a: Some(v), b: None }
    }
}

/// Edge agreement in a domain of diameter `2^j` by `j` rounds of 2-graded
/// consensus on a central subtree.
///
/// Child slot 0 is the 2-graded consensus on subtree indices, slot 1 the
/// recursive instance for `j − 1`, created on first use.
///
/// In terminating mode each level also runs `Term` on its graded output in
/// slot 2, takes whichever of the two outputs comes first, and keeps the
/// graded instance running after its `Term` finishes. A level reports
/// termination once its own `Term` and every level below have.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tc<D: Domain> {
    j: u32,
    max_degree: u32,
    star: bool,
    term: Option<Term<GradedOutput>>,
    term_done: bool,
    sub_done: bool,
    halted: Latch,
    input: Option<TcInput<D>>,
    split: Option<Split<D>>,
    gc: Option<Gc2k>,
    gc_done: bool,
    /// A graded output that arrived before this party's input.
    early: Option<GradedOutput>,
    sub: Option<Box<Tc<D>>>,
    out: Latch,
}

/// Tree agreement on explicit trees.
pub type TreeTc = Tc<Arc<Tree>>;
/// Edge agreement on integer paths.
pub type PathTc = Tc<Segment>;

const GC_SLOT: TagComponent = TagComponent::new(ProtocolKind::Gc2k, 0);
const SUB_SLOT: TagComponent = TagComponent::new(ProtocolKind::Tc, 1);
const TERM_SLOT: TagComponent = TagComponent::new(ProtocolKind::Term, 2);

impl<D: Domain> Tc<D> {
    /// `max_degree` bounds the number of central subtrees at every level.
    pub fn new(j: u32, max_degree: u32) -> Self {
        assert!(max_degree >= 1, "a tree of diameter ≥ 1 has degree ≥ 1");
        Tc {
            j,
            max_degree,
            star: false,
            term: None,
            term_done: false,
            sub_done: false,
            halted: Latch::default(),
            input: None,
            split: None,
            gc: (j > 0).then(|| Gc2k::two_graded(index_bits(max_degree))),
            gc_done: false,
            early: None,
            sub: None,
            out: Latch::default(),
        }
    }

    /// The terminating variant.
    pub fn new_star(j: u32, max_degree: u32) -> Self {
        let mut tc = Tc::new(j, max_degree);
        tc.star = true;
        tc.term = (j > 0).then(|| Term::new(index_bits(max_degree)));
        tc
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    fn emit(&mut self, y: D::Vertex, cx: &mut Context<'_, D::Vertex>) {
        if self.out.fire() {
            cx.output(y);
        }
    }

    fn ell(&self) -> u32 {
        index_bits(self.max_degree)
    }

    fn sub(&mut self) -> &mut Tc<D> {
        let (j, d, star) = (self.j - 1, self.max_degree, self.star);
        self.sub.get_or_insert_with(|| Box::new(if star { Tc::new_star(j, d) } else { Tc::new(j, d) }))
    }

    fn sub_input(&mut self, x: TcInput<D>, cx: &mut Context<'_, D::Vertex>) {
        let sub = self.sub();
        let rep = drive(cx, SUB_SLOT, |c| sub.on_input(x, c));
        self.sub_report(rep.outputs, rep.terminated, cx);
    }

    fn sub_report(&mut self, ys: Vec<D::Vertex>, terminated: bool, cx: &mut Context<'_, D::Vertex>) {
        for y in ys {
            self.emit(y, cx);
        }
        if terminated {
            self.sub_done = true;
            self.check_done(cx);
        }
    }

    fn check_done(&mut self, cx: &mut Context<'_, D::Vertex>) {
        let done = if self.j == 0 { self.input.is_some() } else { self.term_done && self.sub_done };
        if self.star && done && self.halted.fire() {
            cx.terminate();
        }
    }

    fn term_report(&mut self, ys: Vec<GradedOutput>, terminated: bool, cx: &mut Context<'_, D::Vertex>) {
        self.gc_outputs(ys, cx);
        if terminated {
            self.term_done = true;
            self.check_done(cx);
        }
    }

    /// Hands a graded output to this level's `Term`.
    fn feed_term(&mut self, y: &GradedOutput, cx: &mut Context<'_, D::Vertex>) {
        let Some(term) = self.term.as_mut() else { return };
        let y = y.clone();
        let rep = drive(cx, TERM_SLOT, |c| term.on_input(y, c));
        self.term_report(rep.outputs, rep.terminated, cx);
    }

    fn gc_input(&mut self, k: u32, cx: &mut Context<'_, D::Vertex>) {
        let x = BitString::from_u64(u64::from(k - 1), self.ell());
        let gc = self.gc.as_mut().expect("j ≥ 1");
        let rep = drive(cx, GC_SLOT, |c| gc.on_input(x, c));
        self.on_graded(rep.outputs, cx);
        let early = self.early.take();
        self.gc_outputs(early.into_iter().collect(), cx);
    }

    /// Outputs of the graded instance itself, as opposed to its `Term`.
    fn on_graded(&mut self, ys: Vec<GradedOutput>, cx: &mut Context<'_, D::Vertex>) {
        for y in ys {
            self.feed_term(&y, cx);
            self.on_gc_output(y, cx);
        }
    }

    fn gc_outputs(&mut self, ys: Vec<GradedOutput>, cx: &mut Context<'_, D::Vertex>) {
        for y in ys {
            self.on_gc_output(y, cx);
        }
    }

    fn on_gc_output(&mut self, y: GradedOutput, cx: &mut Context<'_, D::Vertex>) {
        if self.gc_done {
            return;
        }
        let Some(input) = self.input.clone() else {
            self.early.get_or_insert(y);
            return;
        };
        self.gc_done = true;
        let Some(split) = self.split.clone() else {
            // parties without the domain ignore the graded output
            return;
        };
        let sigma = split.sigma;
        // An index outside 1..=d can only come from mixed honest inputs, so
        // it is treated as grade 0: σ is then in the hull.
        let k = y.value.as_ref().and_then(BitString::to_u64).map(|x| x as usize + 1);
        let chosen = k.filter(|&k| y.grade > 0 && k <= split.parts.len());
        let Some(k) = chosen else {
            // output first: the recursive instance may answer at once
            self.emit(sigma.clone(), cx);
            self.sub_input(TcInput::pinned_a(sigma), cx);
            return;
        };
        let h = split.parts[k - 1].clone();
        let b_next = match k {
            1 => input.a,
            2 => input.b,
            _ => None,
        };
        let v_next = if y.grade == 2 && h.contains(&input.v) { input.v } else { sigma.clone() };
        self.sub_input(TcInput { v: v_next, domain: Some(h), a: Some(sigma), b: b_next }, cx);
    }
}

impl<D: Domain> Automaton for Tc<D> {
    type Input = TcInput<D>;
    type Output = D::Vertex;
    const KIND: ProtocolKind = ProtocolKind::Tc;

    fn on_input(&mut self, input: TcInput<D>, cx: &mut Context<'_, D::Vertex>) {
        if self.input.is_some() {
            return;
        }
        self.input = Some(input.clone());
        if self.j == 0 {
            self.emit(input.v, cx);
            self.check_done(cx);
            return;
        }
        match (input.domain, input.a, input.b) {
            (None, Some(a), None) => {
                self.emit(a.clone(), cx);
                self.gc_input(1, cx);
                self.sub_input(TcInput { v: input.v, domain: None, a: None, b: Some(a) }, cx);
            }
            (None, None, Some(b)) => {
                self.emit(b.clone(), cx);
                self.gc_input(2, cx);
                self.sub_input(TcInput { v: input.v, domain: None, a: None, b: Some(b) }, cx);
            }
            (Some(domain), Some(a), b) => {
                let split = match domain.split(&a, b.as_ref()) {
                    Ok(s) if s.parts.len() <= self.max_degree as usize => s,
                    Ok(s) => {
                        cx.fault(format!("center has {} neighbors, over {}", s.parts.len(), self.max_degree));
                        return;
                    }
                    Err(e) => {
                        cx.fault(e);
                        return;
                    }
                };
                let Some(k) = split.parts.iter().position(|h| h.contains(&input.v)) else {
                    cx.fault(format!("{:?} is outside the domain", input.v));
                    return;
                };
                self.split = Some(split);
                self.gc_input(k as u32 + 1, cx);
            }
            _ => cx.fault("input violates the (v, T, a, b) discipline"),
        }
    }

    fn on_message(&mut self, msg: Incoming<'_>, cx: &mut Context<'_, D::Vertex>) {
        let Some((comp, sub_msg)) = msg.for_child() else {
            cx.malformed();
            return;
        };
        if comp == GC_SLOT {
            if let Some(gc) = self.gc.as_mut() {
                let rep = drive(cx, comp, |c| gc.on_message(sub_msg, c));
                self.on_graded(rep.outputs, cx);
                return;
            }
        } else if comp == SUB_SLOT && self.j > 0 {
            let sub = self.sub();
            let rep = drive(cx, comp, |c| sub.on_message(sub_msg, c));
            self.sub_report(rep.outputs, rep.terminated, cx);
            return;
        } else if comp == TERM_SLOT {
            if let Some(term) = self.term.as_mut() {
                let rep = drive(cx, comp, |c| term.on_message(sub_msg, c));
                self.term_report(rep.outputs, rep.terminated, cx);
                return;
            }
        }
        cx.malformed();
    }
}
