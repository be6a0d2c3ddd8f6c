//! Binary session types and the type checker.

mod check;
mod oracle;
mod syntax;

pub use check::{
    naive_memory_check, typecheck_config, typecheck_process, ConfigVerdict, Location, TypeError, TypeErrorKind, Typing,
};
pub use oracle::typing_oracle;
pub use syntax::{SessionType, Sort, TypeEnv};

#[cfg(test)]
mod tests;
