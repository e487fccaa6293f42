use super::{Gc1, GradedOutput, Prop};
use crate::sim::{drive, Automaton, Context, Incoming, Latch, ProtocolKind, TagComponent};
use crate::wire::BitString;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("proposal output {0:?} is neither {{(y, j)}} nor {{(y, j), (y', j + 1)}}")]
pub struct MalformedPropOutput(pub Vec<GradedOutput>);

/// Maps a proposal output over graded pairs to a pair with doubled grade.
pub fn double_grade(ys: &[GradedOutput]) -> Result<GradedOutput, MalformedPropOutput> {
    let bad = || MalformedPropOutput(ys.to_vec());
    let well_formed = |y: &GradedOutput| (y.grade == 0) == y.value.is_none();
    if !ys.iter().all(well_formed) {
        return Err(bad());
    }
    match ys {
        [y] => Ok(GradedOutput { value: y.value.clone(), grade: 2 * y.grade }),
        [a, b] => {
            let (lo, hi) = if a.grade <= b.grade { (a, b) } else { (b, a) };
            if hi.grade != lo.grade + 1 {
                return Err(bad());
            }
            Ok(GradedOutput { value: hi.value.clone(), grade: 2 * lo.grade + 1 })
        }
        _ => Err(bad()),
    }
}

/// `2^k`-graded consensus: GC1 followed by `k` grade-doubling proposal stages.
///
/// Child index 0 is the GC1 instance, indices `1..=k` the proposal stages.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Gc2k {
    k: u32,
    gc1: Gc1,
    stages: Vec<Prop<GradedOutput>>,
    out: Latch,
}

const GC1_SLOT: TagComponent = TagComponent::new(ProtocolKind::Gc1, 0);

impl Gc2k {
    pub fn new(k: u32, ell: u32) -> Self {
        Gc2k { k, gc1: Gc1::new(ell), stages: (0..k).map(|_| Prop::new(ell)).collect(), out: Latch::default() }
    }

    /// The 2-graded instance used by the tree and path protocols.
    pub fn two_graded(ell: u32) -> Self {
        Gc2k::new(1, ell)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn max_grade(&self) -> u32 {
        1 << self.k
    }

    fn stage_slot(s: usize) -> TagComponent {
        TagComponent::new(ProtocolKind::Prop, s as u64 + 1)
    }

    /// Feeds stage outputs forward until nothing new is produced.
    fn advance(&mut self, mut pending: Vec<(usize, GradedOutput)>, cx: &mut Context<'_, GradedOutput>) {
        while let Some((s, input)) = pending.pop() {
            if s == self.stages.len() {
                if self.out.fire() {
                    cx.output(input);
                }
                continue;
            }
            let stage = &mut self.stages[s];
            let rep = drive(cx, Self::stage_slot(s), |sub| stage.on_input(input, sub));
            self.collect(s, rep.outputs, &mut pending, cx);
        }
    }

    fn collect(
        &self,
        s: usize,
        outputs: Vec<Vec<GradedOutput>>,
        pending: &mut Vec<(usize, GradedOutput)>,
        cx: &mut Context<'_, GradedOutput>,
    ) {
        for ys in outputs {
            match double_grade(&ys) {
                Ok(y) => pending.push((s + 1, y)),
                Err(e) => cx.fault(e.to_string()),
            }
        }
    }
}

impl Automaton for Gc2k {
    type Input = BitString;
    type Output = GradedOutput;
    const KIND: ProtocolKind = ProtocolKind::Gc2k;

    fn on_input(&mut self, input: BitString, cx: &mut Context<'_, GradedOutput>) {
        let gc1 = &mut self.gc1;
        let rep = drive(cx, GC1_SLOT, |sub| gc1.on_input(input, sub));
        self.advance(rep.outputs.into_iter().map(|y| (0, y)).collect(), cx);
    }

    fn on_message(&mut self, msg: Incoming<'_>, cx: &mut Context<'_, GradedOutput>) {
        let Some((comp, sub_msg)) = msg.for_child() else {
            cx.malformed();
            return;
        };
        if comp == GC1_SLOT {
            let gc1 = &mut self.gc1;
            let rep = drive(cx, comp, |sub| gc1.on_message(sub_msg, sub));
            self.advance(rep.outputs.into_iter().map(|y| (0, y)).collect(), cx);
            return;
        }
        let s = comp.index.wrapping_sub(1) as usize;
        if comp.kind != ProtocolKind::Prop || s >= self.stages.len() {
            cx.malformed();
            return;
        }
        let stage = &mut self.stages[s];
        let rep = drive(cx, comp, |sub| stage.on_message(sub_msg, sub));
        let mut pending = Vec::new();
        self.collect(s, rep.outputs, &mut pending, cx);
        self.advance(pending, cx);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: u64) -> BitString {
        BitString::from_u64(x, 8)
    }

    #[test]
    fn doubles_single_pairs() {
        assert_eq!(double_grade(&[GradedOutput::new(v(3), 1)]), Ok(GradedOutput::new(v(3), 2)));
        assert_eq!(double_grade(&[GradedOutput::bottom()]), Ok(GradedOutput::bottom()));
    }

    #[test]
    fn doubles_adjacent_pairs() {
        let ys = [GradedOutput::bottom(), GradedOutput::new(v(3), 1)];
        assert_eq!(double_grade(&ys), Ok(GradedOutput::new(v(3), 1)));
        let ys = [GradedOutput::new(v(3), 2), GradedOutput::new(v(3), 1)];
        assert_eq!(double_grade(&ys), Ok(GradedOutput::new(v(3), 3)));
    }

    #[test]
    fn rejects_other_shapes() {
        let ys = [GradedOutput::bottom(), GradedOutput::new(v(3), 2)];
        assert!(double_grade(&ys).is_err());
        assert!(double_grade(&[]).is_err());
        let same = [GradedOutput::new(v(1), 1), GradedOutput::new(v(2), 1)];
        assert!(double_grade(&same).is_err());
    }
}
