//! Computation histories: the memory graph, structural consistency,
//! causal-consistent rollback, traces and their causal equivalence.

mod consistency;
mod equivalence;
mod graph;
mod origin;
mod rollback;
mod trace;

#[cfg(test)]
mod tests;

pub use consistency::{check_consistent, ConsistencyReport, Violation, ViolationKind};
pub use equivalence::{
    causally_equivalent, causally_equivalent_bounded, cofinal, Classifier, Equivalence, EquivalenceError, DEFAULT_LENGTH_BOUND,
    DEFAULT_STATE_CAP,
};
pub use graph::{build_graph, Edge, GraphParseError, MemoryGraph, Node, NodeKind};
pub use origin::{backward_normal_forms, has_unique_origin, origin};
pub use rollback::{rollback, rollback_set, RollbackError, RollbackTarget};
pub use trace::{Trace, TraceError};
