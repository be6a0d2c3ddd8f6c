//! Reversible session-based π-calculus: syntax, a forward/backward
//! reduction engine, memory histories with causal-consistent rollback, and a
//! binary session type checker.

pub mod config;
pub mod congruence;
pub mod eval;
pub mod generate;
pub mod history;
pub mod host;
pub mod nameless;
pub mod parser;
pub mod props;
pub mod reduction;
pub mod scenarios;
pub mod subst;
pub mod syntax;
pub mod types;

pub use config::{forgetful_map, ConfigTerm, Configuration};
pub use congruence::{alpha_tag_equal, process_congruent, struct_congruent};
pub use history::{
    build_graph, causally_equivalent, check_consistent, cofinal, rollback, ConsistencyReport, Equivalence, MemoryGraph,
    RollbackTarget, Trace,
};
pub use eval::{eval, EvalError, Substitution};
pub use subst::substitute;
pub use syntax::*;
pub use parser::{parse_configuration, parse_process, print_configuration, print_process, ParseError, SourceSpan};
pub use reduction::{
    concurrent, enumerate, enumerate_backward, enumerate_forward, Direction, Engine, Mutation, RedexId, Step, StepError,
};
