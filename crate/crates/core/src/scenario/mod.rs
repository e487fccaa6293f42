//! Scenario files: a protocol with its parameters and inputs, an adversary,
//! and a seed matrix. Running one yields a deterministic report.

mod explore;
mod runners;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::adversary::{self, parse_vtime, AdversarySpec, SpecError};
use crate::sim::{fmt_time, SimConfig, VTime};

pub use runners::{registry, Observed, Runner, RunnerCtor};

/// Property names a scenario may request.
pub const PROPERTIES: [&str; 4] = ["safety", "liveness", "rounds", "termination"];

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub protocol: String,
    #[serde(default)]
    pub params: Params,
    pub n: usize,
    /// Defaults to `⌊(n − 1)/3⌋`.
    pub t: Option<usize>,
    /// One entry per party; `null` for a party that never gets an input.
    pub inputs: Option<Vec<Value>>,
    /// Arrival times as integers or `"p/q"`; `null` means never.
    pub input_times: Option<Vec<Value>>,
    pub adversary: AdversarySpec,
    /// Runs use seeds `base_seed .. base_seed + seeds`.
    pub seeds: Option<u64>,
    #[serde(default)]
    pub base_seed: u64,
    /// Defaults to safety and liveness, plus rounds when `max_rounds` is set.
    pub properties: Option<Vec<String>>,
    pub max_rounds: Option<Value>,
    pub event_budget: Option<u64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub k: Option<u32>,
    pub ell: Option<u32>,
    pub j: Option<u32>,
    pub max_degree: Option<u32>,
    /// Decimal or `"p/q"`.
    pub eps: Option<Value>,
    pub tree: Option<TreeFile>,
    /// Path of a tree file, relative to the scenario file.
    pub tree_file: Option<String>,
    /// Wrap the protocol with the termination procedure.
    pub terminate: Option<bool>,
    /// Decimal digits for rational outputs.
    pub digits: Option<u32>,
}

/// Vertices `0..vertices`, an edge list, optional party inputs and anchors.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TreeFile {
    pub vertices: u32,
    pub edges: Vec<(u32, u32)>,
    #[serde(default)]
    pub inputs: BTreeMap<String, u32>,
    pub a: Option<u32>,
    pub b: Option<u32>,
}

/// Command-line adjustments to a loaded scenario.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seeds: Option<u64>,
    pub trace: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub index: u64,
    /// `None` for outcomes of an exhaustive search.
    pub seed: Option<u64>,
    pub honest: Vec<bool>,
    pub outputs: Vec<Value>,
    pub rounds: Option<String>,
    pub messages_total: u64,
    pub bits_total: u64,
    pub properties: BTreeMap<String, bool>,
    /// First reason a property failed.
    pub violation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<Value>>,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.properties.values().all(|p| *p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub runs: u64,
    pub max_rounds: Option<String>,
    pub max_messages: u64,
    pub max_bits: u64,
    pub violations: u64,
    /// States visited by an exhaustive search.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub protocol: String,
    pub mode: String,
    pub n: usize,
    pub t: usize,
    pub properties: Vec<String>,
    pub runs: Vec<RunRecord>,
    pub aggregate: Aggregate,
}

impl RunReport {
    fn assemble(spec: &ScenarioSpec, properties: Vec<String>, runs: Vec<RunRecord>, states: Option<u64>) -> Self {
        let max_rounds = runs
            .iter()
            .filter_map(|r| r.rounds.as_deref().and_then(parse_vtime))
            .max()
            .map(|r| fmt_time(&r));
        let aggregate = Aggregate {
            runs: runs.len() as u64,
            max_rounds,
            max_messages: runs.iter().map(|r| r.messages_total).max().unwrap_or(0),
            max_bits: runs.iter().map(|r| r.bits_total).max().unwrap_or(0),
            violations: runs.iter().filter(|r| !r.passed()).count() as u64,
            states,
        };
        RunReport {
            protocol: spec.protocol.clone(),
            mode: spec.adversary.mode.clone(),
            n: spec.n,
            t: spec.t(),
            properties,
            runs,
            aggregate,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// One line per run: index, seed, rounds, messages, bits, then one
    /// column per property.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,seed,rounds,messages_total,bits_total,passed");
        for p in &self.properties {
            s.push(',');
            s.push_str(p);
        }
        s.push('\n');
        for r in &self.runs {
            let seed = r.seed.map(|x| x.to_string()).unwrap_or_default();
            let rounds = r.rounds.clone().unwrap_or_default();
            s.push_str(&format!("{},{seed},{rounds},{},{},{}", r.index, r.messages_total, r.bits_total, r.passed()));
            for p in &self.properties {
                s.push_str(&format!(",{}", r.properties[p]));
            }
            s.push('\n');
        }
        s
    }
}

/// Names the field a deserialization error is about, including the field
/// serde reports as missing or unknown.
fn field_of(err: &serde_path_to_error::Error<serde_json::Error>) -> String {
    let path = err.path().to_string();
    let msg = err.inner().to_string();
    let named = ["missing field `", "unknown field `"]
        .iter()
        .find_map(|p| msg.split_once(p).and_then(|(_, rest)| rest.split_once('`')).map(|(f, _)| f.to_string()));
    match named {
        Some(f) if path == "." => f,
        // unknown fields already end the path; missing ones belong below it
        Some(f) if !path.ends_with(&f) => format!("{path}.{f}"),
        _ if path == "." => "scenario".into(),
        _ => path,
    }
}

impl ScenarioSpec {
    /// Parses a scenario; a `params.tree_file` is read relative to `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self, SpecError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut spec: ScenarioSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            let reason = e.inner().to_string();
            SpecError::field(field_of(&e), reason)
        })?;
        if let Some(file) = spec.params.tree_file.clone() {
            if spec.params.tree.is_some() {
                return Err(SpecError::field("params.tree_file", "give either tree or tree_file"));
            }
            let path = base.map(|b| b.join(&file)).unwrap_or_else(|| file.clone().into());
            let text = std::fs::read_to_string(&path)
                .map_err(|e| SpecError::field("params.tree_file", format!("{}: {e}", path.display())))?;
            let tree = serde_json::from_str(&text).map_err(|e| SpecError::field("params.tree_file", e.to_string()))?;
            spec.params.tree = Some(tree);
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path).map_err(|e| SpecError::field("scenario", format!("{}: {e}", path.display())))?;
        ScenarioSpec::parse(&text, path.parent())
    }

    pub fn t(&self) -> usize {
        self.t.unwrap_or(self.n.saturating_sub(1) / 3)
    }

    pub fn is_exhaustive(&self) -> bool {
        self.adversary.mode == "exhaustive"
    }

    fn validate(&self) -> Result<(), SpecError> {
        if self.n == 0 || self.n > crate::sim::MAX_PARTIES {
            return Err(SpecError::field("n", format!("must be in 1..={}", crate::sim::MAX_PARTIES)));
        }
        if 3 * self.t() >= self.n {
            return Err(SpecError::field("t", format!("need t < n/3, got n = {}, t = {}", self.n, self.t())));
        }
        if let Some(inputs) = &self.inputs {
            if inputs.len() != self.n {
                return Err(SpecError::field("inputs", format!("{} entries for n = {}", inputs.len(), self.n)));
            }
        }
        self.input_times()?;
        if self.seeds == Some(0) {
            return Err(SpecError::field("seeds", "must be positive"));
        }
        self.max_rounds()?;
        self.properties()?;
        if !self.is_exhaustive() {
            adversary::build(&self.adversary, self.base_seed)?;
            if !registry().contains_key(self.protocol.as_str()) {
                return Err(SpecError::field("protocol", format!("unknown protocol {:?}", self.protocol)));
            }
        }
        Ok(())
    }

    fn input_times(&self) -> Result<Vec<Option<VTime>>, SpecError> {
        let Some(raw) = &self.input_times else {
            return Ok(vec![Some(VTime::from_integer(0)); self.n]);
        };
        if raw.len() != self.n {
            return Err(SpecError::field("input_times", format!("{} entries for n = {}", raw.len(), self.n)));
        }
        raw.iter()
            .enumerate()
            .map(|(i, v)| match v {
                Value::Null => Ok(None),
                _ => parse_time(v)
                    .filter(|t| *t >= VTime::from_integer(0))
                    .map(Some)
                    .ok_or_else(|| SpecError::field(format!("input_times[{i}]"), format!("{v} is not a time ≥ 0"))),
            })
            .collect()
    }

    fn max_rounds(&self) -> Result<Option<VTime>, SpecError> {
        match &self.max_rounds {
            None => Ok(None),
            Some(v) => parse_time(v).map(Some).ok_or_else(|| SpecError::field("max_rounds", format!("{v} is not a rational"))),
        }
    }

    fn properties(&self) -> Result<Vec<String>, SpecError> {
        let list = match &self.properties {
            Some(p) => p.clone(),
            None => {
                let mut p = vec!["safety".to_string(), "liveness".to_string()];
                if self.max_rounds.is_some() {
                    p.push("rounds".into());
                }
                p
            }
        };
        for (i, p) in list.iter().enumerate() {
            if !PROPERTIES.contains(&p.as_str()) {
                return Err(SpecError::field(format!("properties[{i}]"), format!("unknown property {p:?}")));
            }
            if p == "rounds" && self.max_rounds.is_none() {
                return Err(SpecError::field(format!("properties[{i}]"), "rounds needs max_rounds"));
            }
        }
        Ok(list)
    }
}

fn parse_time(v: &Value) -> Option<VTime> {
    match v {
        Value::Number(x) => x.as_i64().map(VTime::from_integer),
        Value::String(s) => parse_vtime(s),
        _ => None,
    }
}

/// Runs the scenario's matrix, or its exhaustive search.
pub fn run_scenario(spec: &ScenarioSpec, ov: &Overrides) -> Result<RunReport, SpecError> {
    let properties = spec.properties()?;
    if spec.is_exhaustive() {
        let (runs, states) = explore::run(spec, &properties)?;
        return Ok(RunReport::assemble(spec, properties, runs, Some(states)));
    }
    let ctor = registry()[spec.protocol.as_str()];
    let runner = ctor(spec)?;
    if properties.iter().any(|p| p == "termination") && !runner.terminating() {
        return Err(SpecError::field("properties", "termination needs a terminating protocol"));
    }
    let times = spec.input_times()?;
    let bound = spec.max_rounds()?;
    let seeds = ov.seeds.or(spec.seeds).unwrap_or(1);
    // validated above, so every seed builds
    adversary::build(&spec.adversary, spec.base_seed)?;
    let runs: Vec<RunRecord> = (0..seeds)
        .into_par_iter()
        .map(|index| {
            let seed = spec.base_seed.wrapping_add(index);
            let mut cfg = SimConfig::new(spec.n, spec.t(), seed);
            cfg.input_times = times.clone();
            cfg.record_trace = ov.trace;
            if let Some(b) = spec.event_budget {
                cfg.event_budget = b;
            }
            let mut adv = adversary::build(&spec.adversary, seed).expect("adversary validated");
            let observed = runner.run(&cfg, adv.as_mut());
            record(index, seed, spec.n, &properties, bound, observed)
        })
        .collect();
    Ok(RunReport::assemble(spec, properties, runs, None))
}

fn record(
    index: u64,
    seed: u64,
    n: usize,
    properties: &[String],
    bound: Option<VTime>,
    observed: Result<Observed, crate::sim::SimError>,
) -> RunRecord {
    let o = match observed {
        Ok(o) => o,
        Err(e) => {
            return RunRecord {
                index,
                seed: Some(seed),
                honest: vec![true; n],
                outputs: vec![Value::Null; n],
                rounds: None,
                messages_total: 0,
                bits_total: 0,
                properties: properties.iter().map(|p| (p.clone(), false)).collect(),
                violation: Some(format!("simulation error: {e}")),
                trace: None,
            }
        }
    };
    let mut violation = None;
    let mut props = BTreeMap::new();
    for p in properties {
        let verdict: Result<(), String> = match p.as_str() {
            "safety" => o.safety.clone(),
            "liveness" => o.rounds.map(|_| ()).ok_or_else(|| "an honest party never completed".to_string()),
            "rounds" => match (o.rounds, bound) {
                (Some(r), Some(b)) if r <= b => Ok(()),
                (Some(r), Some(b)) => Err(format!("{} rounds over {}", fmt_time(&r), fmt_time(&b))),
                _ => Err("no rounds measured: an honest party never completed".into()),
            },
            "termination" => if o.halted { Ok(()) } else { Err("an honest party never halted".into()) },
            _ => unreachable!("properties are validated"),
        };
        if let Err(e) = &verdict {
            violation.get_or_insert_with(|| format!("{p}: {e}"));
        }
        props.insert(p.clone(), verdict.is_ok());
    }
    RunRecord {
        index,
        seed: Some(seed),
        honest: o.honest,
        outputs: o.outputs,
        rounds: o.rounds.map(|r| fmt_time(&r)),
        messages_total: o.messages_total,
        bits_total: o.bits_total,
        properties: props,
        violation,
        trace: o.trace,
    }
}

#[cfg(test)]
mod tests;
