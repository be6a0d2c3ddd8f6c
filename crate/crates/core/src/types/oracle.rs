use crate::config::{forgetful_map, Configuration};
use crate::history::origin;
use crate::types::{typecheck_process, ConfigVerdict, TypeEnv};

/// Types the host process that `m` rolls back to. Independent of how
/// memories are typed, so it serves as a reference for configuration
/// typing on reachable configurations.
pub fn typing_oracle(m: &Configuration, env: &TypeEnv) -> ConfigVerdict {
    match typecheck_process(&forgetful_map(&origin(m)), env) {
        Ok(typing) => ConfigVerdict::WellTyped { typing },
        Err(error) => ConfigVerdict::IllTyped { error },
    }
}
