//! Causal equivalence of coinitial traces.
//!
//! Steps are renamed to name-independent events: a tag is identified by
//! the event that produced it (or by itself when it is initial), and a
//! forward event by its rule and the identities of the tags it consumed.
//! Traces are then related by swapping adjacent independent steps and by
//! cancelling adjacent inverse pairs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::config::Configuration;
use crate::congruence::alpha_tag_equal;
use crate::history::trace::{Trace, TraceError};
use crate::reduction::{Direction, Step};
use crate::syntax::{Rule, Tag};

/// Default bound on the length of compared traces.
pub const DEFAULT_LENGTH_BOUND: usize = 12;
/// Default bound on the number of traces explored per side.
pub const DEFAULT_STATE_CAP: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equivalence {
    Equivalent,
    NotEquivalent,
    /// A length or search bound was exceeded before a verdict.
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum TagKey {
    Initial(Tag),
    Produced(u32, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct EventKey {
    rule: Rule,
    consumed: Vec<TagKey>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Event {
    forward: bool,
    id: u32,
}

#[derive(Default)]
struct Interner {
    ids: BTreeMap<EventKey, u32>,
    keys: Vec<EventKey>,
    arity: Vec<usize>,
}

impl Interner {
    fn intern(&mut self, key: EventKey, produced: usize) -> u32 {
        if let Some(id) = self.ids.get(&key) {
            return *id;
        }
        let id = self.keys.len() as u32;
        self.ids.insert(key.clone(), id);
        self.keys.push(key);
        self.arity.push(produced);
        id
    }

    fn consumed(&self, e: Event) -> Vec<TagKey> {
        if e.forward {
            self.keys[e.id as usize].consumed.clone()
        } else {
            self.produced(e.id)
        }
    }

    fn produced_by(&self, e: Event) -> Vec<TagKey> {
        if e.forward {
            self.produced(e.id)
        } else {
            self.keys[e.id as usize].consumed.clone()
        }
    }

    fn produced(&self, id: u32) -> Vec<TagKey> {
        (0..self.arity[id as usize]).map(|i| TagKey::Produced(id, i)).collect()
    }

    fn independent(&self, a: Event, b: Event) -> bool {
        let ca: BTreeSet<TagKey> = self.consumed(a).into_iter().collect();
        let pa: BTreeSet<TagKey> = self.produced_by(a).into_iter().collect();
        let cb = self.consumed(b);
        let pb = self.produced_by(b);
        cb.iter().all(|t| !ca.contains(t) && !pa.contains(t)) && pb.iter().all(|t| !ca.contains(t))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EquivalenceError {
    #[error("traces do not start from the same configuration")]
    NotCoinitial,
    #[error("step {index} refers to tag {tag}, which is not live at that point")]
    UnknownTag { index: usize, tag: Tag },
    #[error("step {index} undoes a memory that no earlier step or the initial configuration explains")]
    UnknownMemory { index: usize },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

fn symbolic(trace: &Trace, interner: &mut Interner) -> Result<Vec<Event>, EquivalenceError> {
    let mut keys: BTreeMap<Tag, TagKey> = BTreeMap::new();
    let key_of = |keys: &BTreeMap<Tag, TagKey>, t: Tag| keys.get(&t).copied().unwrap_or(TagKey::Initial(t));
    let mut out = Vec::with_capacity(trace.steps.len());
    for (index, step) in trace.steps.iter().enumerate() {
        out.push(symbolic_step(step, index, &mut keys, interner, &key_of)?);
    }
    Ok(out)
}

fn symbolic_step(
    step: &Step,
    index: usize,
    keys: &mut BTreeMap<Tag, TagKey>,
    interner: &mut Interner,
    key_of: &dyn Fn(&BTreeMap<Tag, TagKey>, Tag) -> TagKey,
) -> Result<Event, EquivalenceError> {
    match step.direction() {
        Direction::Forward => {
            let consumed = step.consumed.tags.iter().map(|t| key_of(keys, *t)).collect();
            let id = interner.intern(EventKey { rule: step.rule(), consumed }, step.produced.tags.len());
            for (i, t) in step.produced.tags.iter().enumerate() {
                keys.insert(*t, TagKey::Produced(id, i));
            }
            Ok(Event { forward: true, id })
        }
        Direction::Backward => {
            let memory = step.consumed.memory.as_ref().ok_or(EquivalenceError::UnknownMemory { index })?;
            let produced = memory.produced();
            let first = key_of(keys, produced[0]);
            let id = match first {
                TagKey::Produced(id, 0) => id,
                // A memory present in the initial configuration: intern it
                // from its own consumed tags.
                TagKey::Initial(_) => {
                    let consumed = memory.consumed().into_iter().map(|t| key_of(keys, t)).collect();
                    let id = interner.intern(EventKey { rule: memory.rule(), consumed }, produced.len());
                    for (i, t) in produced.iter().enumerate() {
                        keys.insert(*t, TagKey::Produced(id, i));
                    }
                    id
                }
                TagKey::Produced(..) => return Err(EquivalenceError::UnknownTag { index, tag: produced[0] }),
            };
            Ok(Event { forward: false, id })
        }
    }
}

/// Every trace reachable by swaps and cancellations, up to `cap` traces.
fn reducts(start: Vec<Event>, interner: &Interner, cap: usize) -> Option<BTreeSet<Vec<Event>>> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back(start);
    while let Some(t) = queue.pop_front() {
        for i in 0..t.len().saturating_sub(1) {
            let (a, b) = (t[i], t[i + 1]);
            let next = if a.id == b.id && a.forward != b.forward {
                let mut n = t.clone();
                n.drain(i..i + 2);
                n
            } else if interner.independent(a, b) {
                let mut n = t.clone();
                n.swap(i, i + 1);
                n
            } else {
                continue;
            };
            if seen.insert(next.clone()) {
                if seen.len() > cap {
                    return None;
                }
                queue.push_back(next);
            }
        }
    }
    Some(seen)
}

fn shortest(set: BTreeSet<Vec<Event>>) -> BTreeSet<Vec<Event>> {
    let min = set.iter().map(Vec::len).min().unwrap_or(0);
    set.into_iter().filter(|t| t.len() == min).collect()
}

/// Shortest reducts of many coinitial traces, computed once per trace so
/// that pairs can be compared cheaply.
pub struct Classifier {
    initial: Configuration,
    interner: Interner,
    length_bound: usize,
    cap: usize,
    forms: Vec<Option<BTreeSet<Vec<Event>>>>,
}

impl Classifier {
    pub fn new(initial: Configuration, length_bound: usize, cap: usize) -> Self {
        Classifier { initial, interner: Interner::default(), length_bound, cap, forms: Vec::new() }
    }

    /// Registers a trace starting at the classifier's initial configuration.
    pub fn add(&mut self, trace: &Trace) -> Result<usize, EquivalenceError> {
        if trace.initial != self.initial {
            return Err(EquivalenceError::NotCoinitial);
        }
        let form = if trace.len() > self.length_bound {
            None
        } else {
            let events = symbolic(trace, &mut self.interner)?;
            reducts(events, &self.interner, self.cap).map(shortest)
        };
        self.forms.push(form);
        Ok(self.forms.len() - 1)
    }

    pub fn equivalence(&self, i: usize, j: usize) -> Equivalence {
        match (&self.forms[i], &self.forms[j]) {
            (Some(a), Some(b)) if a.intersection(b).next().is_some() => Equivalence::Equivalent,
            (Some(_), Some(_)) => Equivalence::NotEquivalent,
            _ => Equivalence::Indeterminate,
        }
    }
}

/// Decides `σ1 ≍ σ2` by comparing the shortest traces each side reduces
/// to under swaps of independent steps and cancellation of inverse pairs.
pub fn causally_equivalent_bounded(
    s1: &Trace,
    s2: &Trace,
    length_bound: usize,
    cap: usize,
) -> Result<Equivalence, EquivalenceError> {
    if s1.initial != s2.initial {
        return Err(EquivalenceError::NotCoinitial);
    }
    let mut c = Classifier::new(s1.initial.clone(), length_bound, cap);
    let a = c.add(s1)?;
    let b = c.add(s2)?;
    Ok(c.equivalence(a, b))
}

pub fn causally_equivalent(s1: &Trace, s2: &Trace) -> Result<Equivalence, EquivalenceError> {
    causally_equivalent_bounded(s1, s2, DEFAULT_LENGTH_BOUND, DEFAULT_STATE_CAP)
}

/// Whether two coinitial traces end in the same configuration up to the
/// renaming of restricted names.
pub fn cofinal(s1: &Trace, s2: &Trace) -> Result<bool, TraceError> {
    Ok(alpha_tag_equal(&s1.final_configuration()?, &s2.final_configuration()?))
}
