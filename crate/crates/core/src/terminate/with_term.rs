use crate::sim::{drive, Automaton, Context, Incoming, Latch, ProtocolKind, TagComponent};
use crate::wire::WireValue;

use super::Term;

const TERM_SLOT: TagComponent = TagComponent::new(ProtocolKind::Term, 1);

/// Runs a live edge agreement protocol and hands its output to [`Term`];
/// terminates, dropping the inner protocol, once `Term` does.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WithTerm<P: Automaton>
where
    P::Output: WireValue,
{
    pi: P,
    term: Term<P::Output>,
    out: Latch,
    done: bool,
}

impl<P: Automaton> WithTerm<P>
where
    P::Output: WireValue,
{
    pub fn new(pi: P, shape: <P::Output as WireValue>::Shape) -> Self {
        WithTerm { pi, term: Term::new(shape), out: Latch::default(), done: false }
    }

    fn pi_slot() -> TagComponent {
        TagComponent::new(P::KIND, 0)
    }

    fn emit(&mut self, y: P::Output, cx: &mut Context<'_, P::Output>) {
        if self.out.fire() {
            cx.output(y);
        }
    }

    fn pi_outputs(&mut self, ys: Vec<P::Output>, cx: &mut Context<'_, P::Output>) {
        for y in ys {
            if self.done {
                return;
            }
            self.emit(y.clone(), cx);
            let term = &mut self.term;
            let rep = drive(cx, TERM_SLOT, |c| term.on_input(y, c));
            self.term_report(rep.outputs, rep.terminated, cx);
        }
    }

    fn term_report(&mut self, ys: Vec<P::Output>, terminated: bool, cx: &mut Context<'_, P::Output>) {
        for y in ys {
            self.emit(y, cx);
        }
        if terminated && !self.done {
            self.done = true;
            cx.terminate();
        }
    }
}

impl<P: Automaton> Automaton for WithTerm<P>
where
    P::Output: WireValue,
{
    type Input = P::Input;
    type Output = P::Output;
    const KIND: ProtocolKind = ProtocolKind::WithTerm;
    const TERMINATING: bool = true;

    fn on_input(&mut self, x: P::Input, cx: &mut Context<'_, P::Output>) {
        if self.done {
            return;
        }
        let pi = &mut self.pi;
        let rep = drive(cx, Self::pi_slot(), |c| pi.on_input(x, c));
        self.pi_outputs(rep.outputs, cx);
    }

    fn on_message(&mut self, msg: Incoming<'_>, cx: &mut Context<'_, P::Output>) {
        if self.done {
            return;
        }
        let Some((comp, sub_msg)) = msg.for_child() else {
            cx.malformed();
            return;
        };
        if comp == Self::pi_slot() {
            let pi = &mut self.pi;
            let rep = drive(cx, comp, |c| pi.on_message(sub_msg, c));
            self.pi_outputs(rep.outputs, cx);
        } else if comp == TERM_SLOT {
            let term = &mut self.term;
            let rep = drive(cx, comp, |c| term.on_message(sub_msg, c));
            self.term_report(rep.outputs, rep.terminated, cx);
        } else {
            cx.malformed();
        }
    }

    fn is_inert(&self) -> bool {
        self.done
    }
}
