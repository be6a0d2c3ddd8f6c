use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::Configuration;
use crate::history::graph::build_graph;
use crate::syntax::{ActionEvent, Memory, Name, Tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    DuplicateTag,
    BrokenConnection,
    Cycle,
    UnboundName,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::DuplicateTag => "duplicate-tag",
            ViolationKind::BrokenConnection => "broken-connection",
            ViolationKind::Cycle => "cycle",
            ViolationKind::UnboundName => "unbound-name",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ConsistencyReport {
    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

/// Necessary conditions for a configuration to be reachable: unique tags,
/// unbroken links between memories and threads, an acyclic history, and
/// bound history names.
pub fn check_consistent(m: &Configuration) -> ConsistencyReport {
    let mut violations = Vec::new();
    let mut push = |kind, detail: String| violations.push(Violation { kind, detail });

    let mut thread_count: BTreeMap<Tag, usize> = BTreeMap::new();
    for t in &m.threads {
        *thread_count.entry(t.tag).or_default() += 1;
    }
    let mut producers: BTreeMap<Tag, Vec<&Memory>> = BTreeMap::new();
    let mut consumers: BTreeMap<Tag, Vec<&Memory>> = BTreeMap::new();
    for mem in &m.memories {
        for t in mem.produced() {
            producers.entry(t).or_default().push(mem);
        }
        for t in mem.consumed() {
            consumers.entry(t).or_default().push(mem);
        }
    }

    for (t, n) in &thread_count {
        if *n > 1 {
            push(ViolationKind::DuplicateTag, format!("{n} threads are tagged {t}"));
        }
    }
    for (t, ms) in &producers {
        if ms.len() > 1 {
            push(ViolationKind::DuplicateTag, format!("tag {t} is produced by {} memories", ms.len()));
        }
    }
    for (t, ms) in &consumers {
        if ms.len() > 1 {
            push(ViolationKind::DuplicateTag, format!("tag {t} is consumed by {} memories", ms.len()));
        }
        if thread_count.contains_key(t) {
            push(ViolationKind::DuplicateTag, format!("tag {t} is both a live thread and consumed by {}", ms[0].id()));
        }
    }

    for mem in &m.memories {
        let consumed = mem.consumed();
        let produced = mem.produced();
        if consumed.iter().any(|t| produced.contains(t)) {
            push(ViolationKind::Cycle, format!("memory {} consumes a tag it produces", mem.id()));
        }
        let mut all = consumed.clone();
        all.extend(&produced);
        all.sort();
        if all.windows(2).any(|w| w[0] == w[1]) {
            push(ViolationKind::DuplicateTag, format!("memory {} repeats a tag", mem.id()));
        }
        for t in &produced {
            if !thread_count.contains_key(t) && !consumers.contains_key(t) {
                push(
                    ViolationKind::BrokenConnection,
                    format!("tag {t} produced by {} is neither a live thread nor consumed by a memory", mem.id()),
                );
            }
            if !m.restricted.contains(&Name::Tag(*t)) {
                push(ViolationKind::UnboundName, format!("tag {t} produced by {} is not restricted", mem.id()));
            }
        }
        if let Memory::Action { event: ActionEvent::Init { session, .. }, .. } = mem {
            if !m.restricted.contains(&Name::Session(session.clone())) {
                push(ViolationKind::UnboundName, format!("session {session} created by {} is not restricted", mem.id()));
            }
        }
    }

    if let Some(node) = build_graph(m).find_cycle() {
        push(ViolationKind::Cycle, format!("the memory graph has a cycle through {node}"));
    }

    ConsistencyReport { ok: violations.is_empty(), violations }
}
