//! Bundled example programs and their type declarations.

use crate::config::Configuration;
use crate::parser::{parse_program, parse_type_env};
use crate::types::TypeEnv;

pub const PROVIDERS: &str = include_str!("../scenarios/providers.respi");
pub const PROVIDERS_TYPES: &str = include_str!("../scenarios/providers.styp");
pub const TWO_SESSIONS: &str = include_str!("../scenarios/two_sessions.respi");
pub const TWO_SESSIONS_TYPES: &str = include_str!("../scenarios/two_sessions.styp");
pub const PARALLEL_REQUESTS: &str = include_str!("../scenarios/parallel_requests.respi");
pub const DELTA_DELTA: &str = include_str!("../scenarios/delta_delta.respi");

fn program(src: &str) -> Configuration {
    parse_program(src, None).expect("bundled scenario parses").config
}

fn env(src: &str) -> TypeEnv {
    parse_type_env(src, None).expect("bundled declarations parse")
}

/// `t1 : P_client | t2 : P_provider1 | t3 : P_provider2`.
pub fn providers() -> Configuration {
    program(PROVIDERS)
}

pub fn providers_env() -> TypeEnv {
    env(PROVIDERS_TYPES)
}

pub fn two_sessions() -> Configuration {
    program(TWO_SESSIONS)
}

pub fn two_sessions_env() -> TypeEnv {
    env(TWO_SESSIONS_TYPES)
}

pub fn parallel_requests() -> Configuration {
    program(PARALLEL_REQUESTS)
}

pub fn delta_delta() -> Configuration {
    program(DELTA_DELTA)
}
