use std::collections::BTreeMap;
use std::fmt::Debug;
use std::hash::Hash;

use serde_json::Value;

use super::runners::{bits_input, parse_inputs, render_graded, render_set, render_u32, u32_input};
use super::{RunRecord, ScenarioSpec};
use crate::adversary::explore::{exhaustive_explore, ByzMessage, ExploreConfig, Outcome};
use crate::adversary::SpecError;
use crate::check::{check_graded, check_prop, check_provenance, Violation};
use crate::graded::{Gc1, Prop};
use crate::sim::{Automaton, InstanceTag, ProtocolKind};
use crate::terminate::Term;
use crate::wire::WireValue;

/// Menu kinds: name, wire kind, and whether the message carries a value.
type Kinds = &'static [(&'static str, u8, bool)];

const GC1_KINDS: Kinds = &[("echo", 1, true), ("echo_bot", 2, false), ("prop", 3, true)];
const PROP_KINDS: Kinds = &[("echo", 1, true), ("prop", 2, true)];
const TERM_KINDS: Kinds = &[("echo", crate::terminate::ECHO, true), ("ready", crate::terminate::READY, false)];

/// Menu entries look like `{"kind": "echo", "value": "01"}`.
fn parse_menu<V: WireValue>(
    spec: &ScenarioSpec,
    kind: ProtocolKind,
    kinds: Kinds,
    value: impl Fn(&Value) -> Option<V>,
) -> Result<Vec<ByzMessage>, SpecError> {
    let root = InstanceTag::root(kind);
    let Some(raw) = &spec.adversary.menu else { return Ok(Vec::new()) };
    raw.iter()
        .enumerate()
        .map(|(i, entry)| {
            let field = format!("adversary.menu[{i}]");
            let name = entry.get("kind").and_then(Value::as_str).ok_or_else(|| SpecError::field(&field, "needs a kind"))?;
            let &(_, wire, valued) = kinds.iter().find(|k| k.0 == name).ok_or_else(|| {
                let known: Vec<&str> = kinds.iter().map(|k| k.0).collect();
                SpecError::field(&field, format!("kind {name:?} is not one of {known:?}"))
            })?;
            let payload = match (valued, entry.get("value")) {
                (true, Some(v)) => value(v).ok_or_else(|| SpecError::field(&field, format!("bad value {v}")))?.to_bytes(),
                (true, None) => return Err(SpecError::field(&field, format!("{name} needs a value"))),
                (false, None | Some(Value::Null)) => Vec::new(),
                (false, Some(_)) => return Err(SpecError::field(&field, format!("{name} carries no value"))),
            };
            Ok(ByzMessage { tag: root.clone(), kind: wire, payload })
        })
        .collect()
}

fn config(spec: &ScenarioSpec) -> Result<ExploreConfig, SpecError> {
    let mut cfg = ExploreConfig::new(spec.n, spec.t());
    if spec.adversary.delay_set.is_some() {
        cfg.delay_set = spec.adversary.delays()?;
    }
    if let Some(b) = spec.adversary.bounds {
        cfg.state_bound = b;
    }
    Ok(cfg)
}

/// Explores every schedule and checks each outcome; returns one record per
/// outcome and the number of states visited.
pub(super) fn run(spec: &ScenarioSpec, properties: &[String]) -> Result<(Vec<RunRecord>, u64), SpecError> {
    match spec.protocol.as_str() {
        "gc1" => {
            let ell = spec.params.ell.unwrap_or(1);
            let inputs = parse_inputs(spec, &format!("a {ell}-bit string"), bits_input(ell))?;
            let menu = parse_menu(spec, ProtocolKind::Gc1, GC1_KINDS, bits_input(ell))?;
            search(spec, properties, move |_| Gc1::new(ell), inputs, &menu, |i, o| check_graded(i, o, 1), render_graded)
        }
        "prop" => {
            let inputs = parse_inputs(spec, "a 32-bit unsigned integer", u32_input)?;
            let menu = parse_menu(spec, ProtocolKind::Prop, PROP_KINDS, u32_input)?;
            search(spec, properties, |_| Prop::<u32>::new(()), inputs, &menu, check_prop, render_set)
        }
        "term" => {
            let inputs = parse_inputs(spec, "a 32-bit unsigned integer", u32_input)?;
            let menu = parse_menu(spec, ProtocolKind::Term, TERM_KINDS, u32_input)?;
            search(spec, properties, |_| Term::<u32>::new(()), inputs, &menu, check_provenance, render_u32)
        }
        other => Err(SpecError::field("adversary.mode", format!("exhaustive mode covers gc1, prop and term, not {other}"))),
    }
}

fn search<A, F>(
    spec: &ScenarioSpec,
    properties: &[String],
    factory: F,
    inputs: Vec<Option<A::Input>>,
    menu: &[ByzMessage],
    check: impl Fn(&[A::Input], &[A::Output]) -> Result<(), Violation>,
    render: fn(&A::Output) -> Value,
) -> Result<(Vec<RunRecord>, u64), SpecError>
where
    A: Automaton + Clone + Hash + Eq,
    A::Input: Clone,
    A::Output: Clone + Hash + Ord + Debug,
    F: FnMut(crate::sim::PartyId) -> A,
{
    if properties.iter().any(|p| p == "rounds") {
        return Err(SpecError::field("properties", "exhaustive mode measures no rounds"));
    }
    if properties.iter().any(|p| p == "termination") && !A::TERMINATING {
        return Err(SpecError::field("properties", "termination needs a terminating protocol"));
    }
    let cfg = config(spec)?;
    let set = exhaustive_explore(&cfg, factory, inputs.clone(), menu)
        .map_err(|e| SpecError::field("adversary", e.to_string()))?;
    let ins: Vec<A::Input> = inputs.iter().zip(&set.honest).filter(|(_, h)| **h).filter_map(|(x, _)| x.clone()).collect();
    let runs = set
        .outcomes
        .keys()
        .enumerate()
        .map(|(index, o)| judge(index as u64, &set.honest, properties, &ins, o, &check, render))
        .collect();
    Ok((runs, set.states))
}

fn judge<I, O: Clone>(
    index: u64,
    honest: &[bool],
    properties: &[String],
    ins: &[I],
    o: &Outcome<O>,
    check: &impl Fn(&[I], &[O]) -> Result<(), Violation>,
    render: fn(&O) -> Value,
) -> RunRecord {
    let outs: Vec<O> = o.outputs.iter().zip(honest).filter(|(_, h)| **h).filter_map(|(y, _)| y.clone()).collect();
    let live = outs.len() == honest.iter().filter(|h| **h).count();
    let halted = o.halt_lag.iter().zip(honest).all(|(l, h)| !h || l.is_some());
    let mut violation = None;
    let mut props = BTreeMap::new();
    for p in properties {
        let verdict = match p.as_str() {
            "safety" => check(ins, &outs).map_err(|v| v.to_string()),
            "liveness" => if live { Ok(()) } else { Err("an honest party never output".to_string()) },
            _ => if halted { Ok(()) } else { Err("an honest party never halted".to_string()) },
        };
        if let Err(e) = &verdict {
            violation.get_or_insert_with(|| format!("{p}: {e}"));
        }
        props.insert(p.clone(), verdict.is_ok());
    }
    RunRecord {
        index,
        seed: None,
        honest: honest.to_vec(),
        outputs: o.outputs.iter().map(|y| y.as_ref().map_or(Value::Null, render)).collect(),
        rounds: None,
        messages_total: 0,
        bits_total: 0,
        properties: props,
        violation,
        trace: None,
    }
}
