//! Asynchronous byzantine approximate agreement protocols with quadratic
//! communication, and a deterministic adversarial network simulator that
//! measures them.
//!
//! Protocols are pure per-party state machines ([`sim::Automaton`]). They are
//! composed by nesting, routed by hierarchical instance tags, and executed by
//! [`sim::run_simulation`] against a pluggable [`sim::Adversary`].

pub mod sim;
pub mod graded;
pub mod wire;
pub mod adversary;
pub mod tree;
pub mod path;
pub mod check;
pub mod terminate;
pub mod real;
pub mod acceptance;
pub mod scenario;
