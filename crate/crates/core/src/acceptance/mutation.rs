use std::time::Instant;

use super::{criteria, verdict, Setup, Verdict};
use crate::sim::Quorum;

/// The `t + 1` and `2t + 1` thresholds of the 1-graded consensus and of
/// `Term`; each is lowered by one in turn.
pub const MUTABLE: [Quorum; 7] = [
    Quorum::Gc1OtherEcho,
    Quorum::Gc1VSet,
    Quorum::Gc1WSet,
    Quorum::TermEchoAmplify,
    Quorum::TermReadyAmplify,
    Quorum::TermReadyFromEcho,
    Quorum::TermDecide,
];

/// Criteria that exercise the mutated protocol directly, tried first.
fn first_tries(q: Quorum) -> &'static [u32] {
    match q {
        Quorum::Gc1OtherEcho | Quorum::Gc1VSet | Quorum::Gc1WSet => &[1, 4, 2],
        _ => &[11, 12],
    }
}

/// Runs criteria under the mutation until one fails; returns its id.
pub fn detect(q: Quorum) -> Option<u32> {
    let all = criteria();
    let setup = Setup { mutation: Some(q) };
    let first = first_tries(q);
    let order = first.iter().copied().chain(all.iter().map(|c| c.id).filter(|id| *id != 14 && !first.contains(id)));
    for id in order {
        let c = all.iter().find(|c| c.id == id).expect("criterion ids are contiguous");
        if !(c.run)(&setup).passed {
            return Some(id);
        }
    }
    None
}

pub(super) fn sanity(setup: &Setup) -> Verdict {
    if setup.mutation.is_some() {
        return verdict(true, "skipped under a mutation".into(), "not applicable");
    }
    let mut caught = Vec::new();
    let mut missed = Vec::new();
    for q in MUTABLE {
        let start = Instant::now();
        match detect(q) {
            Some(id) => caught.push(format!("{q:?}→{id} ({:.0}s)", start.elapsed().as_secs_f64())),
            None => missed.push(format!("{q:?}")),
        }
    }
    let mut observed = format!("caught {} of {}: {}", caught.len(), MUTABLE.len(), caught.join(", "));
    if !missed.is_empty() {
        observed.push_str(&format!("; survived: {}", missed.join(", ")));
    }
    verdict(missed.is_empty(), observed, "every lowered GC1 or Term threshold fails some criterion")
}
