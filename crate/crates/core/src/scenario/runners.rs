use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};

use super::ScenarioSpec;
use crate::adversary::SpecError;
use crate::check::{check_edge_int, check_edge_tree, check_epsilon, check_graded, check_prop, check_provenance, Violation};
use crate::graded::{Gc1, Gc2k, GradedOutput, Prop};
use crate::path::{agr_z, exp0, two_step_exp0};
use crate::real::{format_decimal, parse_rational, EpsilonAgreement};
use crate::sim::{measure_rounds, run_simulation, Adversary, Automaton, SimConfig, SimError};
use crate::terminate::{TcStar, Term, WithTerm};
use crate::tree::{TcInput, Tree, TreeTc};
use crate::wire::BitString;

/// What one run exposes to the property checks.
#[derive(Clone, Debug)]
pub struct Observed {
    pub honest: Vec<bool>,
    pub outputs: Vec<Value>,
    /// Measured rounds; `None` if an honest party never completed.
    pub rounds: Option<crate::sim::VTime>,
    /// Every honest party halted.
    pub halted: bool,
    pub messages_total: u64,
    pub bits_total: u64,
    pub safety: Result<(), String>,
    pub trace: Option<Vec<Value>>,
}

/// A protocol bound to its parameters and inputs, ready to run per seed.
pub trait Runner: Send + Sync {
    fn terminating(&self) -> bool;
    fn run(&self, cfg: &SimConfig, adversary: &mut dyn Adversary) -> Result<Observed, SimError>;
}

pub type RunnerCtor = fn(&ScenarioSpec) -> Result<Box<dyn Runner>, SpecError>;

type Check<A> = Box<dyn Fn(&[<A as Automaton>::Input], &[<A as Automaton>::Output]) -> Result<(), Violation> + Send + Sync>;
type Render<O> = Box<dyn Fn(&O) -> Value + Send + Sync>;

struct Sim<A: Automaton, F> {
    make: F,
    inputs: Vec<Option<A::Input>>,
    check: Check<A>,
    render: Render<A::Output>,
}

impl<A, F> Runner for Sim<A, F>
where
    A: Automaton,
    A::Input: Clone + Send + Sync,
    A::Output: Clone + Debug,
    F: Fn() -> A + Send + Sync,
{
    fn terminating(&self) -> bool {
        A::TERMINATING
    }

    fn run(&self, cfg: &SimConfig, adversary: &mut dyn Adversary) -> Result<Observed, SimError> {
        let out = run_simulation(cfg, |_| (self.make)(), self.inputs.clone(), adversary)?;
        let ins: Vec<A::Input> = out.honest_parties().filter_map(|p| self.inputs[p.index()].clone()).collect();
        let outs: Vec<A::Output> = out.honest_outputs().into_iter().filter_map(|(_, y)| y.cloned()).collect();
        let safety = match out.faults.first() {
            Some(f) => Err(format!("fault: {f}")),
            None => (self.check)(&ins, &outs).map_err(|v| v.to_string()),
        };
        let halted = out.honest_parties().all(|p| out.halt_times[p.index()].is_some());
        let trace = out.trace.as_ref().map(|t| t.iter().map(|e| serde_json::to_value(e).expect("trace events serialize")).collect());
        Ok(Observed {
            honest: out.honest.clone(),
            outputs: out.outputs.iter().map(|o| o.as_ref().map_or(Value::Null, |(_, y)| (self.render)(y))).collect(),
            rounds: measure_rounds(&out).ok(),
            halted,
            messages_total: out.metrics.messages_total,
            bits_total: out.metrics.bits_total,
            safety,
            trace,
        })
    }
}

fn boxed<A, F>(
    make: F,
    inputs: Vec<Option<A::Input>>,
    check: Check<A>,
    render: impl Fn(&A::Output) -> Value + Send + Sync + 'static,
) -> Box<dyn Runner>
where
    A: Automaton + 'static,
    A::Input: Clone + Send + Sync,
    A::Output: Clone + Debug,
    F: Fn() -> A + Send + Sync + 'static,
{
    Box::new(Sim { make, inputs, check, render: Box::new(render) })
}

/// Every protocol a scenario can name.
pub fn registry() -> BTreeMap<&'static str, RunnerCtor> {
    let mut r: BTreeMap<&'static str, RunnerCtor> = BTreeMap::new();
    r.insert("gc1", gc1);
    r.insert("gc2k", gc2k);
    r.insert("prop", prop);
    r.insert("term", term);
    r.insert("tc", tc);
    r.insert("tc_star", tc_star);
    r.insert("exp0", |s| integer(s, "exp0"));
    r.insert("two_step", |s| integer(s, "two_step"));
    r.insert("agr_z", |s| integer(s, "agr_z"));
    r.insert("epsilon", epsilon);
    r
}

/// Parses `inputs`, with `null` for parties without input.
pub(super) fn parse_inputs<T>(
    spec: &ScenarioSpec,
    what: &str,
    parse: impl Fn(&Value) -> Option<T>,
) -> Result<Vec<Option<T>>, SpecError> {
    let raw = spec.inputs.as_ref().ok_or_else(|| SpecError::field("inputs", "required"))?;
    raw.iter()
        .enumerate()
        .map(|(i, v)| match v {
            Value::Null => Ok(None),
            _ => parse(v).map(Some).ok_or_else(|| SpecError::field(format!("inputs[{i}]"), format!("{v} is not {what}"))),
        })
        .collect()
}

pub(super) fn bits_input(ell: u32) -> impl Fn(&Value) -> Option<BitString> {
    move |v| v.as_str().and_then(BitString::parse).filter(|b| b.len() == ell)
}

pub(super) fn u32_input(v: &Value) -> Option<u32> {
    v.as_u64().and_then(|x| u32::try_from(x).ok())
}

fn int_input(v: &Value) -> Option<BigInt> {
    match v {
        Value::Number(x) => x.as_i64().map(BigInt::from),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn rational_input(v: &Value) -> Option<BigRational> {
    match v {
        Value::Number(x) => x.as_i64().map(|x| BigRational::from_integer(x.into())),
        Value::String(s) => parse_rational(s).ok(),
        _ => None,
    }
}

pub(super) fn render_graded(y: &GradedOutput) -> Value {
    json!({ "value": y.value.as_ref().map(|v| v.to_string()), "grade": y.grade })
}

pub(super) fn render_u32(y: &u32) -> Value {
    json!(y)
}

pub(super) fn render_set(y: &Vec<u32>) -> Value {
    json!(y)
}

/// Exact integers as JSON numbers while they fit, as strings beyond.
fn render_int(y: &BigInt) -> Value {
    match i64::try_from(y) {
        Ok(x) => json!(x),
        Err(_) => json!(y.to_string()),
    }
}

fn terminate(spec: &ScenarioSpec) -> bool {
    spec.params.terminate.unwrap_or(false)
}

fn ell(spec: &ScenarioSpec) -> Result<u32, SpecError> {
    match spec.params.ell.unwrap_or(1) {
        0 => Err(SpecError::field("params.ell", "must be positive")),
        l => Ok(l),
    }
}

fn gc1(spec: &ScenarioSpec) -> Result<Box<dyn Runner>, SpecError> {
    let ell = ell(spec)?;
    let inputs = parse_inputs(spec, &format!("a {ell}-bit string"), bits_input(ell))?;
    Ok(if terminate(spec) {
        boxed(move || WithTerm::new(Gc1::new(ell), ell), inputs, Box::new(|i, o| check_graded(i, o, 1)), render_graded)
    } else {
        boxed(move || Gc1::new(ell), inputs, Box::new(|i, o| check_graded(i, o, 1)), render_graded)
    })
}

fn gc2k(spec: &ScenarioSpec) -> Result<Box<dyn Runner>, SpecError> {
    let ell = ell(spec)?;
    let k = spec.params.k.ok_or_else(|| SpecError::field("params.k", "required"))?;
    if !(1..=16).contains(&k) {
        return Err(SpecError::field("params.k", "must be in 1..=16"));
    }
    let inputs = parse_inputs(spec, &format!("a {ell}-bit string"), bits_input(ell))?;
    let max = 1 << k;
    Ok(if terminate(spec) {
        boxed(move || WithTerm::new(Gc2k::new(k, ell), ell), inputs, Box::new(move |i, o| check_graded(i, o, max)), render_graded)
    } else {
        boxed(move || Gc2k::new(k, ell), inputs, Box::new(move |i, o| check_graded(i, o, max)), render_graded)
    })
}

fn prop(spec: &ScenarioSpec) -> Result<Box<dyn Runner>, SpecError> {
    let inputs = parse_inputs(spec, "a 32-bit unsigned integer", u32_input)?;
    Ok(boxed(|| Prop::<u32>::new(()), inputs, Box::new(check_prop), render_set))
}

fn term(spec: &ScenarioSpec) -> Result<Box<dyn Runner>, SpecError> {
    let inputs = parse_inputs(spec, "a 32-bit unsigned integer", u32_input)?;
    Ok(boxed(|| Term::<u32>::new(()), inputs, Box::new(check_provenance), render_u32))
}

/// A tree scenario after padding the tree to diameter `2^j`.
struct TreeSetup {
    tree: Arc<Tree>,
    j: u32,
    max_degree: u32,
    inputs: Vec<Option<TcInput<Arc<Tree>>>>,
}

fn tree_setup(spec: &ScenarioSpec) -> Result<TreeSetup, SpecError> {
    let file = spec.params.tree.as_ref().ok_or_else(|| SpecError::field("params.tree", "required"))?;
    let base = Tree::from_edges(file.vertices, &file.edges).map_err(|e| SpecError::field("params.tree", e.to_string()))?;
    let (tree, anchor) = if base.diameter() < 2 {
        (base.clone(), base.diametral_endpoints().1)
    } else {
        base.grow_to_power_of_two().map_err(|e| SpecError::field("params.tree", e.to_string()))?
    };
    let j = tree.diameter().max(1).trailing_zeros();
    if spec.params.j.is_some_and(|x| x != j) {
        return Err(SpecError::field("params.j", format!("the tree pads to diameter 2^{j}")));
    }
    if !tree.is_halving(j) {
        return Err(SpecError::field("params.tree", "central subtrees must halve the diameter at every level"));
    }
    let a = file.a.unwrap_or(anchor);
    if j > 0 {
        tree.central_decomposition(Some(a), file.b).map_err(|e| SpecError::field("params.tree.a", e.to_string()))?;
    }
    let needed = tree.max_degree().max(2) as u32;
    let max_degree = spec.params.max_degree.unwrap_or(needed);
    if max_degree < needed {
        return Err(SpecError::field("params.max_degree", format!("the tree has degree {needed}")));
    }
    let vertices: Vec<Option<u32>> = if spec.inputs.is_some() {
        parse_inputs(spec, "a vertex of the tree", |v| u32_input(v).filter(|&x| tree.contains(x)))?
    } else {
        let mut vs = vec![None; spec.n];
        for (party, &v) in &file.inputs {
            let i: usize = party
                .parse()
                .ok()
                .filter(|&i| i < spec.n)
                .ok_or_else(|| SpecError::field("params.tree.inputs", format!("{party:?} is not a party index")))?;
            if !tree.contains(v) {
                return Err(SpecError::field(format!("params.tree.inputs.{party}"), format!("{v} is not a vertex")));
            }
            vs[i] = Some(v);
        }
        vs
    };
    let tree = Arc::new(tree);
    let inputs = vertices.iter().map(|v| v.map(|v| TcInput::with_domain(v, tree.clone(), a, file.b))).collect();
    Ok(TreeSetup { tree, j, max_degree, inputs })
}

type TreeCheck = Box<dyn Fn(&[TcInput<Arc<Tree>>], &[u32]) -> Result<(), Violation> + Send + Sync>;

fn tree_check(tree: Arc<Tree>) -> TreeCheck {
    Box::new(move |i, o| {
        let vs: Vec<u32> = i.iter().map(|x| x.v).collect();
        check_edge_tree(&tree, &vs, o)
    })
}

fn tc(spec: &ScenarioSpec) -> Result<Box<dyn Runner>, SpecError> {
    let TreeSetup { tree, j, max_degree, inputs } = tree_setup(spec)?;
    Ok(if terminate(spec) {
        boxed(move || WithTerm::new(TreeTc::new(j, max_degree), ()), inputs, tree_check(tree), render_u32)
    } else {
        boxed(move || TreeTc::new(j, max_degree), inputs, tree_check(tree), render_u32)
    })
}

fn tc_star(spec: &ScenarioSpec) -> Result<Box<dyn Runner>, SpecError> {
    let TreeSetup { tree, j, max_degree, inputs } = tree_setup(spec)?;
    Ok(boxed(move || TcStar::new(j, max_degree), inputs, tree_check(tree), render_u32))
}

type IntCheck = Box<dyn Fn(&[BigInt], &[BigInt]) -> Result<(), Violation> + Send + Sync>;

fn integer(spec: &ScenarioSpec, which: &str) -> Result<Box<dyn Runner>, SpecError> {
    let inputs = parse_inputs(spec, "an integer", int_input)?;
    let natural = which != "agr_z";
    if natural {
        if let Some(i) = inputs.iter().position(|x| x.as_ref().is_some_and(|x| x.sign() == num_bigint::Sign::Minus)) {
            return Err(SpecError::field(format!("inputs[{i}]"), format!("{which} needs non-negative inputs")));
        }
    }
    let check = || -> IntCheck { Box::new(check_edge_int) };
    let t = terminate(spec);
    Ok(match (which, t) {
        ("exp0", false) => boxed(exp0, inputs, check(), render_int),
        ("exp0", true) => boxed(|| WithTerm::new(exp0(), ()), inputs, check(), render_int),
        ("two_step", false) => boxed(two_step_exp0, inputs, check(), render_int),
        ("two_step", true) => boxed(|| WithTerm::new(two_step_exp0(), ()), inputs, check(), render_int),
        ("agr_z", false) => boxed(agr_z, inputs, check(), render_int),
        _ => boxed(|| WithTerm::new(agr_z(), ()), inputs, check(), render_int),
    })
}

fn epsilon(spec: &ScenarioSpec) -> Result<Box<dyn Runner>, SpecError> {
    let raw = spec.params.eps.as_ref().ok_or_else(|| SpecError::field("params.eps", "required"))?;
    let eps = rational_input(raw)
        .filter(|e| e > &BigRational::from_integer(0.into()))
        .ok_or_else(|| SpecError::field("params.eps", format!("{raw} is not a positive rational")))?;
    let inputs = parse_inputs(spec, "a decimal or p/q rational", rational_input)?;
    let digits = spec.params.digits.unwrap_or(6);
    if digits > 64 {
        return Err(SpecError::field("params.digits", "at most 64"));
    }
    let check_eps = eps.clone();
    Ok(boxed(
        move || EpsilonAgreement::standard(eps.clone()).expect("ε > 0"),
        inputs,
        Box::new(move |i, o| check_epsilon(i, o, &check_eps)),
        move |y| render_rational(y, digits),
    ))
}

/// Rational outputs as exact strings plus a decimal rendering.
fn render_rational(y: &BigRational, digits: u32) -> Value {
    json!({ "exact": y.to_string(), "decimal": format_decimal(y, digits) })
}
