use crate::sim::{Automaton, Context, Incoming, ProtocolKind};
use crate::tree::{Domain, Tc, TcInput};

/// Terminating tree agreement: tree agreement whose every level runs its
/// graded output through `Term`, halting once all `j` of them have
/// terminated.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TcStar<D: Domain>(Tc<D>);

impl<D: Domain> TcStar<D> {
    pub fn new(j: u32, max_degree: u32) -> Self {
        TcStar(Tc::new_star(j, max_degree))
    }
}

impl<D: Domain> Automaton for TcStar<D> {
    type Input = TcInput<D>;
    type Output = D::Vertex;
    const KIND: ProtocolKind = ProtocolKind::TcStar;
    const TERMINATING: bool = true;

    fn on_input(&mut self, input: TcInput<D>, cx: &mut Context<'_, D::Vertex>) {
        self.0.on_input(input, cx);
    }

    fn on_message(&mut self, msg: Incoming<'_>, cx: &mut Context<'_, D::Vertex>) {
        self.0.on_message(msg, cx);
    }
}
