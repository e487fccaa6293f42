//! The acceptance suite: each criterion runs a seeded experiment matrix (or
//! an exhaustive search) and compares what it observed against a stated
//! bound and runtime budget.

mod graded;
mod mutation;
mod path;
mod real;
mod terminate;
mod tree;

use std::fmt::Display;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::adversary::{RandomAdversary, RandomParams};
use crate::sim::{fmt_time, measure_rounds, run_simulation, Adversary, Automaton, Quorum, SimConfig, SimOutcome, VTime};

pub use mutation::{detect, MUTABLE};
pub use path::EXP_MESSAGE_FACTOR;

/// What a criterion saw, next to what it requires.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub passed: bool,
    pub observed: String,
    pub bound: String,
}

pub struct Criterion {
    pub id: u32,
    /// Module the criterion exercises, for filtering.
    pub module: &'static str,
    pub title: &'static str,
    pub budget: Duration,
    pub run: fn(&Setup) -> Verdict,
}

/// Shared knobs for one pass over the suite.
#[derive(Clone, Copy, Debug, Default)]
pub struct Setup {
    /// A quorum threshold lowered by one everywhere it is used.
    pub mutation: Option<Quorum>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub module: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub observed: String,
    pub bound: String,
    pub elapsed_ms: u128,
    pub budget_ms: u128,
}

impl CriterionReport {
    /// One table line: status, id, title, observed versus bound.
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        format!(
            "{status} {:>2} {:<14} {} | observed: {} | bound: {} | {:.1}s of {}s",
            self.id,
            self.module,
            self.title,
            self.observed,
            self.bound,
            self.elapsed_ms as f64 / 1000.0,
            self.budget_ms / 1000
        )
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

pub fn criteria() -> Vec<Criterion> {
    let c = |id, module, title, budget, run| Criterion { id, module, title, budget: secs(budget), run };
    vec![
        c(1, "graded", "GC1 under random adversaries", 60, graded::gc1_random as fn(&Setup) -> Verdict),
        c(2, "graded", "GC1 exhaustive", 600, graded::gc1_exhaustive),
        c(3, "graded", "Prop random and exhaustive", 600, graded::prop),
        c(4, "graded", "GC2^k rounds and messages", 120, graded::gc2k),
        c(5, "tree-agree", "TC standard security", 300, tree::standard),
        c(6, "tree-agree", "TC anchor security", 60, tree::anchors),
        c(7, "tree-agree", "spider graded equivalence", 60, tree::spider),
        c(8, "path-agree", "Exp0 edge agreement", 300, path::exp0_criterion),
        c(9, "path-agree", "2-Step(Exp0) edge agreement", 300, path::two_step),
        c(10, "path-agree", "Agr_Z over signs", 300, path::agr_z_criterion),
        c(11, "terminate", "Term timing and provenance", 600, terminate::term),
        c(12, "terminate", "Pi+Term and TC*", 180, terminate::composed),
        c(13, "real-agree", "epsilon agreement", 300, real::epsilon),
        c(14, "cli", "mutation sanity", 600, mutation::sanity),
    ]
}

/// Runs one criterion; blowing the runtime budget fails it.
pub fn run_criterion(c: &Criterion, setup: &Setup) -> CriterionReport {
    let start = Instant::now();
    let v = (c.run)(setup);
    let elapsed = start.elapsed();
    CriterionReport {
        id: c.id,
        module: c.module,
        title: c.title,
        passed: v.passed && elapsed <= c.budget,
        observed: v.observed,
        bound: v.bound,
        elapsed_ms: elapsed.as_millis(),
        budget_ms: c.budget.as_millis(),
    }
}

/// Runs every criterion whose module matches `filter`, in order.
pub fn run_suite(filter: Option<&str>, setup: &Setup, mut each: impl FnMut(&CriterionReport)) -> Vec<CriterionReport> {
    let mut out = Vec::new();
    for c in criteria().iter().filter(|c| filter.is_none_or(|f| c.module == f)) {
        let r = run_criterion(c, setup);
        each(&r);
        out.push(r);
    }
    out
}

/// Module names accepted by the filter.
pub fn modules() -> Vec<&'static str> {
    let mut m: Vec<&'static str> = criteria().iter().map(|c| c.module).collect();
    m.dedup();
    m
}

/// Accumulates violations and maxima over a matrix of runs.
#[derive(Debug)]
struct Tally {
    runs: u64,
    violations: u64,
    first: Option<String>,
    max_rounds: VTime,
}

impl Default for Tally {
    fn default() -> Self {
        Tally { runs: 0, violations: 0, first: None, max_rounds: VTime::from_integer(0) }
    }
}

impl Tally {
    fn fail(&mut self, what: impl Display) {
        self.violations += 1;
        if self.first.is_none() {
            self.first = Some(what.to_string());
        }
    }

    fn check<E: Display>(&mut self, ctx: impl Display, r: Result<(), E>) {
        if let Err(e) = r {
            self.fail(format!("{ctx}: {e}"));
        }
    }

    /// Records the run's rounds; a missing completion is a liveness failure.
    fn rounds<O>(&mut self, ctx: impl Display, out: &SimOutcome<O>, bound: VTime) -> Option<VTime> {
        self.runs += 1;
        if let Some(f) = out.faults.first() {
            self.fail(format!("{ctx}: fault: {f}"));
        }
        match measure_rounds(out) {
            Ok(r) => {
                self.max_rounds = self.max_rounds.max(r);
                if r > bound {
                    self.fail(format!("{ctx}: {} rounds over {}", fmt_time(&r), fmt_time(&bound)));
                }
                Some(r)
            }
            Err(e) => {
                self.fail(format!("{ctx}: liveness: {e}"));
                None
            }
        }
    }

    fn summary(&self) -> String {
        let mut s = format!("{} runs, {} violations, max rounds {}", self.runs, self.violations, fmt_time(&self.max_rounds));
        if let Some(f) = &self.first {
            s.push_str(&format!("; first: {f}"));
        }
        s
    }
}

fn verdict(passed: bool, observed: String, bound: impl Into<String>) -> Verdict {
    Verdict { passed, observed, bound: bound.into() }
}

/// One run under the default random adversary.
fn simulate<A, F>(
    n: usize,
    seed: u64,
    setup: &Setup,
    factory: F,
    inputs: Vec<Option<A::Input>>,
) -> Result<SimOutcome<A::Output>, String>
where
    A: Automaton,
    A::Output: Clone + std::fmt::Debug,
    F: FnMut(crate::sim::PartyId) -> A,
{
    let mut adv = RandomAdversary::new(seed, RandomParams::default());
    simulate_with(n, seed, setup, factory, inputs, None, &mut adv)
}

fn simulate_with<A, F>(
    n: usize,
    seed: u64,
    setup: &Setup,
    factory: F,
    inputs: Vec<Option<A::Input>>,
    input_times: Option<Vec<Option<VTime>>>,
    adv: &mut dyn Adversary,
) -> Result<SimOutcome<A::Output>, String>
where
    A: Automaton,
    A::Output: Clone + std::fmt::Debug,
    F: FnMut(crate::sim::PartyId) -> A,
{
    let mut cfg = SimConfig::new(n, (n - 1) / 3, seed);
    cfg.mutation = setup.mutation;
    if let Some(times) = input_times {
        cfg.input_times = times;
    }
    run_simulation(&cfg, factory, inputs, adv).map_err(|e| format!("seed {seed}: {e}"))
}

/// Inputs and outputs of the parties that stayed honest; `None` outputs are
/// dropped (liveness is checked separately).
fn honest_io<I: Clone, O: Clone>(inputs: &[Option<I>], out: &SimOutcome<O>) -> (Vec<I>, Vec<O>) {
    let ins = out.honest_parties().filter_map(|p| inputs[p.index()].clone()).collect();
    let outs = out.honest_outputs().into_iter().filter_map(|(_, o)| o.cloned()).collect();
    (ins, outs)
}
