//! Adversary strategies, a name-keyed registry for them, and the exhaustive
//! schedule explorer.

pub mod explore;
mod random;
mod scripted;
mod simple;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::sim::{Adversary, PartyId, VTime};

pub use random::{RandomAdversary, RandomParams};
pub use scripted::Scripted;
pub use simple::{Late, Silent, Splitter};

/// Declarative adversary description, as found in scenario files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySpec {
    pub mode: String,
    /// Delays as integers or `"p/q"` strings.
    #[serde(default)]
    pub delay_set: Option<Vec<serde_json::Value>>,
    #[serde(default)]
    pub byz_rate: Option<f64>,
    #[serde(default)]
    pub adaptive_rate: Option<f64>,
    /// Starved party for `late`.
    #[serde(default)]
    pub victim: Option<u32>,
    /// Byzantine value menu for exhaustive mode.
    #[serde(default)]
    pub menu: Option<Vec<serde_json::Value>>,
    /// State budget for exhaustive mode.
    #[serde(default)]
    pub bounds: Option<u64>,
}

impl AdversarySpec {
    pub fn named(mode: &str) -> Self {
        AdversarySpec {
            mode: mode.to_string(),
            delay_set: None,
            byz_rate: None,
            adaptive_rate: None,
            victim: None,
            menu: None,
            bounds: None,
        }
    }

    pub fn delays(&self) -> Result<Vec<VTime>, SpecError> {
        let Some(raw) = &self.delay_set else {
            return Ok(RandomParams::default().delays);
        };
        if raw.is_empty() {
            return Err(SpecError::field("adversary.delay_set", "must be non-empty"));
        }
        raw.iter()
            .map(|v| {
                let d = match v {
                    serde_json::Value::Number(x) => x.as_i64().map(VTime::from_integer),
                    serde_json::Value::String(s) => parse_vtime(s),
                    _ => None,
                };
                match d {
                    Some(d) if d > VTime::from_integer(0) => Ok(d),
                    _ => Err(SpecError::field("adversary.delay_set", format!("{v} is not a positive rational"))),
                }
            })
            .collect()
    }
}

/// A rejected scenario or adversary description, naming the offending field.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{field}: {reason}")]
pub struct SpecError {
    pub field: String,
    pub reason: String,
}

impl SpecError {
    pub fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        SpecError { field: field.into(), reason: reason.into() }
    }
}

/// Parses `"p"` or `"p/q"` into a time value.
pub fn parse_vtime(s: &str) -> Option<VTime> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let q: i64 = q.trim().parse().ok()?;
            let p: i64 = p.trim().parse().ok()?;
            (q != 0).then(|| VTime::new(p, q))
        }
        None => Some(VTime::from_integer(s.parse().ok()?)),
    }
}

/// Builds a strategy for one seeded run.
pub type StrategyCtor = fn(&AdversarySpec, u64) -> Result<Box<dyn Adversary>, SpecError>;

fn make_random(spec: &AdversarySpec, seed: u64) -> Result<Box<dyn Adversary>, SpecError> {
    let mut params = RandomParams { delays: spec.delays()?, ..RandomParams::default() };
    for (name, src, dst) in [
        ("adversary.byz_rate", spec.byz_rate, &mut params.byz_rate),
        ("adversary.adaptive_rate", spec.adaptive_rate, &mut params.adaptive_rate),
    ] {
        if let Some(x) = src {
            if !(0.0..=1.0).contains(&x) {
                return Err(SpecError::field(name, "must lie in [0, 1]"));
            }
            *dst = x;
        }
    }
    Ok(Box::new(RandomAdversary::new(seed, params)))
}

fn fast_slow(spec: &AdversarySpec) -> Result<(VTime, VTime), SpecError> {
    let d = spec.delays()?;
    Ok((*d.iter().min().expect("non-empty"), *d.iter().max().expect("non-empty")))
}

fn make_silent(spec: &AdversarySpec, _: u64) -> Result<Box<dyn Adversary>, SpecError> {
    Ok(Box::new(Silent::new(fast_slow(spec)?.0)))
}

fn make_splitter(spec: &AdversarySpec, _: u64) -> Result<Box<dyn Adversary>, SpecError> {
    let (fast, slow) = fast_slow(spec)?;
    Ok(Box::new(Splitter::new(fast, slow)))
}

fn make_late(spec: &AdversarySpec, _: u64) -> Result<Box<dyn Adversary>, SpecError> {
    let (fast, slow) = fast_slow(spec)?;
    let victim = spec.victim.ok_or_else(|| SpecError::field("adversary.victim", "required for mode late"))?;
    Ok(Box::new(Late::new(PartyId(victim), fast, slow)))
}

/// Every simulation strategy, by name. Exhaustive mode is not a strategy; it
/// replaces the simulator and is dispatched by the scenario runner.
pub fn registry() -> BTreeMap<&'static str, StrategyCtor> {
    let mut r: BTreeMap<&'static str, StrategyCtor> = BTreeMap::new();
    r.insert("random", make_random);
    r.insert("silent", make_silent);
    r.insert("splitter", make_splitter);
    r.insert("late", make_late);
    r
}

pub fn build(spec: &AdversarySpec, seed: u64) -> Result<Box<dyn Adversary>, SpecError> {
    let ctor = registry()
        .get(spec.mode.as_str())
        .copied()
        .ok_or_else(|| SpecError::field("adversary.mode", format!("unknown strategy {:?}", spec.mode)))?;
    ctor(spec, seed)
}
