use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::Configuration;
use crate::history::consistency::check_consistent;
use crate::history::graph::build_graph;
use crate::history::trace::Trace;
use crate::reduction::{enumerate_backward, Engine, StepError};
use crate::syntax::{MemoryId, Tag};

/// What to undo: a memory, or whatever consumed a tag so that the thread
/// carrying it is live again.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RollbackTarget {
    Memory(MemoryId),
    Tag(Tag),
}

impl fmt::Display for RollbackTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RollbackTarget::Memory(m) => m.fmt(f),
            RollbackTarget::Tag(t) => t.fmt(f),
        }
    }
}

impl FromStr for RollbackTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        MemoryId::parse(s)
            .map(RollbackTarget::Memory)
            .or_else(|| Tag::parse(s).map(RollbackTarget::Tag))
            .ok_or_else(|| format!("`{s}` is neither a memory id (m<n>) nor a tag (t<n>)"))
    }
}

impl Serialize for RollbackTarget {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RollbackTarget {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RollbackError {
    #[error("no memory or tag {0} in the configuration")]
    NotFound(RollbackTarget),
    #[error("configuration is not consistent: {0}")]
    Inconsistent(String),
    #[error("rollback stuck with {0} memories left to undo")]
    Stuck(usize),
    #[error(transparent)]
    Step(#[from] StepError),
}

/// The memories a rollback to `target` undoes: the target and all of its
/// causal descendants.
pub fn rollback_set(m: &Configuration, target: RollbackTarget) -> Result<BTreeSet<MemoryId>, RollbackError> {
    let root = match target {
        RollbackTarget::Memory(id) => m.memory(id).ok_or(RollbackError::NotFound(target))?.id(),
        RollbackTarget::Tag(t) => match m.consumer_of(t) {
            Some(mem) => mem.id(),
            None if m.thread(t).is_some() => return Ok(BTreeSet::new()),
            None => return Err(RollbackError::NotFound(target)),
        },
    };
    let mut set = build_graph(m).descendants(root);
    set.insert(root);
    Ok(set)
}

/// Undoes `target` and its causal descendants, latest memories first. The
/// returned trace starts at `m` and lists the backward steps taken.
pub fn rollback(
    engine: &mut Engine,
    m: &Configuration,
    target: RollbackTarget,
) -> Result<(Configuration, Trace), RollbackError> {
    let report = check_consistent(m);
    if !report.ok {
        let details: Vec<String> = report.violations.iter().map(|v| format!("{}: {}", v.kind, v.detail)).collect();
        return Err(RollbackError::Inconsistent(details.join("; ")));
    }
    let mut pending = rollback_set(m, target)?;
    let mut trace = Trace::new(m.clone());
    let mut current = m.clone();
    while !pending.is_empty() {
        let redex = enumerate_backward(&current)
            .into_iter()
            .filter(|r| r.memory.is_some_and(|id| pending.contains(&id)))
            .max_by_key(|r| r.memory)
            .ok_or(RollbackError::Stuck(pending.len()))?;
        let (next, step) = engine.apply_backward(&current, &redex)?;
        pending.remove(&redex.memory.expect("backward redexes name a memory"));
        trace.push(step);
        current = next;
    }
    Ok((current, trace))
}
