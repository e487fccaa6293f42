//! Termination: the three-round `Term` procedure, its composition with a
//! live protocol, and the pipelined terminating tree protocol.

mod star;
mod term;
mod with_term;

pub use star::TcStar;
pub use term::{Term, ECHO, READY};
pub use with_term::WithTerm;

#[cfg(test)]
mod tests;
