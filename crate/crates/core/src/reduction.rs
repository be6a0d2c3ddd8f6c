//! Forward and backward reduction.
//!
//! Forward steps consume one or two live threads and produce fresh-tagged
//! continuations together with a memory recording the full pre-state. A
//! backward step consumes a memory whose produced threads are all live and
//! restores the threads it recorded.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::Configuration;
use crate::eval::{eval_closed, EvalError};
use crate::subst::substitute_one;
use crate::syntax::{
    sym, ActionEvent, Atom, ChoiceEvent, Endpoint, Memory, MemoryId, Name, Polarity, Process, Rule, Symbol, Tag,
    Thread, Value,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// Identity of an enabled reduction. Forward redexes name their
/// participant threads, active party first; backward redexes name the
/// memory they undo.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RedexId {
    pub direction: Direction,
    pub rule: Rule,
    /// Forward: consumed threads. Backward: the memory's produced threads.
    pub tags: Vec<Tag>,
    pub memory: Option<MemoryId>,
    /// For a forward conditional: whether the guard selects `then`.
    pub branch: Option<bool>,
}

impl RedexId {
    pub fn forward(rule: Rule, tags: Vec<Tag>) -> Self {
        RedexId { direction: Direction::Forward, rule, tags, memory: None, branch: None }
    }

    pub fn backward(m: &Memory) -> Self {
        RedexId {
            direction: Direction::Backward,
            rule: m.rule(),
            tags: m.produced(),
            memory: Some(m.id()),
            branch: None,
        }
    }

    /// Threads consumed by the step.
    pub fn consumed_tags(&self) -> &[Tag] {
        &self.tags
    }
}

/// Textual form: `fwd:Com:t1,t2`, `fwd:If:t3:then`, `bwd:Init:m4`.
impl fmt::Display for RedexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.direction {
            Direction::Forward => {
                let tags: Vec<String> = self.tags.iter().map(|t| t.to_string()).collect();
                write!(f, "fwd:{}:{}", self.rule, tags.join(","))?;
                if let Some(b) = self.branch {
                    write!(f, ":{}", if b { "then" } else { "else" })?;
                }
                Ok(())
            }
            Direction::Backward => match self.memory {
                Some(m) => write!(f, "bwd:{}:{}", self.rule, m),
                None => write!(f, "bwd:{}:?", self.rule),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid redex id `{0}`")]
pub struct RedexParseError(pub String);

impl FromStr for RedexId {
    type Err = RedexParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RedexParseError(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let rule = |r: &str| match r {
            "Init" => Ok(Rule::Init),
            "Com" => Ok(Rule::Com),
            "Sel" => Ok(Rule::Sel),
            "If" => Ok(Rule::If),
            "Fork" => Ok(Rule::Fork),
            _ => Err(bad()),
        };
        match parts.as_slice() {
            ["fwd", r, tags, rest @ ..] => {
                let rule = rule(r)?;
                let tags = tags.split(',').map(|t| Tag::parse(t).ok_or_else(bad)).collect::<Result<Vec<_>, _>>()?;
                let branch = match rest {
                    [] => None,
                    ["then"] => Some(true),
                    ["else"] => Some(false),
                    _ => return Err(bad()),
                };
                if (rule == Rule::If) != branch.is_some() {
                    return Err(bad());
                }
                Ok(RedexId { direction: Direction::Forward, rule, tags, memory: None, branch })
            }
            ["bwd", r, m] => {
                let rule = rule(r)?;
                let memory = MemoryId::parse(m).ok_or_else(bad)?;
                // Produced tags are recovered from the configuration when applied.
                Ok(RedexId { direction: Direction::Backward, rule, tags: Vec::new(), memory: Some(memory), branch: None })
            }
            _ => Err(bad()),
        }
    }
}

impl Serialize for RedexId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RedexId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Threads and memory on one side of a step.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resources {
    pub tags: Vec<Tag>,
    pub threads: Vec<Thread>,
    pub memory: Option<Memory>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub redex: RedexId,
    pub consumed: Resources,
    pub produced: Resources,
    /// Names created by a forward step, or released by a backward one.
    pub fresh: Vec<Name>,
}

impl Step {
    pub fn direction(&self) -> Direction {
        self.redex.direction
    }

    pub fn rule(&self) -> Rule {
        self.redex.rule
    }

    /// The memory written or erased by the step.
    pub fn memory(&self) -> &Memory {
        self.produced.memory.as_ref().or(self.consumed.memory.as_ref()).expect("every step involves a memory")
    }

    /// The redex undoing this step in the resulting configuration.
    pub fn mirror(&self) -> RedexId {
        match self.redex.direction {
            Direction::Forward => RedexId::backward(self.memory()),
            Direction::Backward => {
                let m = self.memory();
                let branch = match m {
                    Memory::Choice { event, .. } => eval_closed(&event.guard).ok().and_then(|v| match v {
                        Value::Bool(b) => Some(b),
                        _ => None,
                    }),
                    _ => None,
                };
                RedexId { direction: Direction::Forward, rule: m.rule(), tags: m.consumed(), memory: None, branch }
            }
        }
    }

    /// Resources whose disjointness makes two steps concurrent: the threads
    /// consumed and, for backward steps, the memory erased.
    pub fn resources(&self) -> (BTreeSet<Tag>, Option<MemoryId>) {
        let tags = self.consumed.tags.iter().copied().collect();
        (tags, self.consumed.memory.as_ref().map(Memory::id))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StepError {
    #[error("stale redex {0}: it is not enabled in the current configuration")]
    Stale(RedexId),
    #[error("replaying {0} did not reproduce the recorded step")]
    Diverged(RedexId),
    #[error("cannot evaluate expression: {0}")]
    Eval(#[from] EvalError),
}

/// Deliberate engine faults used to check that the property suites detect
/// broken reversibility.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// Backward steps restore the passive party as `0`.
    BackwardForgetsPassive,
    /// Backward communication restores the payload as `0`.
    BackwardForgetsPayload,
}

impl FromStr for Mutation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "backward-forgets-passive" => Ok(Mutation::BackwardForgetsPassive),
            "backward-forgets-payload" => Ok(Mutation::BackwardForgetsPayload),
            _ => Err(format!("unknown mutation `{s}`")),
        }
    }
}

/// Fresh-name supply and step application. Tags and session names handed
/// out by one engine are never handed out again.
#[derive(Clone, Debug)]
pub struct Engine {
    next_tag: u64,
    next_session: u64,
    issued: BTreeSet<Symbol>,
    mutation: Option<Mutation>,
    forced: VecDeque<Name>,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new()
    }
}

/// Fresh counters for a seed start at a seed-dependent offset, so distinct
/// seeds draw distinct names and equal seeds draw equal names.
const SEED_STRIDE: u64 = 1000;

impl Engine {
    pub fn new() -> Self {
        Engine { next_tag: 1, next_session: 1, issued: BTreeSet::new(), mutation: None, forced: VecDeque::new() }
    }

    pub fn seeded(seed: u64) -> Self {
        let offset = (seed % 1_000_000) * SEED_STRIDE;
        Engine { next_tag: 1 + offset, next_session: 1 + offset, ..Engine::new() }
    }

    pub fn with_mutation(mut self, m: Option<Mutation>) -> Self {
        self.mutation = m;
        self
    }

    pub fn mutation(&self) -> Option<Mutation> {
        self.mutation
    }

    /// Moves the counters past every tag used in `m`.
    pub fn reserve(&mut self, m: &Configuration) {
        self.next_tag = self.next_tag.max(m.max_tag() + 1);
    }

    pub fn fresh_tag(&mut self) -> Tag {
        if let Some(Name::Tag(t)) = self.forced.front() {
            let t = *t;
            self.forced.pop_front();
            self.next_tag = self.next_tag.max(t.0 + 1);
            return t;
        }
        let t = Tag(self.next_tag);
        self.next_tag += 1;
        t
    }

    /// A session name not occurring in `avoid` and not issued before.
    pub fn fresh_session(&mut self, avoid: &BTreeSet<Symbol>) -> Symbol {
        if let Some(Name::Session(s)) = self.forced.front() {
            let s = s.clone();
            self.forced.pop_front();
            self.issued.insert(s.clone());
            return s;
        }
        loop {
            let s = sym(&format!("s{}", self.next_session));
            self.next_session += 1;
            if !avoid.contains(&s) && self.issued.insert(s.clone()) {
                return s;
            }
        }
    }

    fn fresh_tag_for(&mut self, m: &Configuration) -> Tag {
        self.reserve(m);
        self.fresh_tag()
    }

    /// Re-applies a recorded step, drawing its recorded fresh names instead
    /// of new ones. The result is checked against the record.
    pub fn replay(&mut self, m: &Configuration, recorded: &Step) -> Result<(Configuration, Step), StepError> {
        let r = &recorded.redex;
        if r.direction == Direction::Forward {
            self.forced = recorded.fresh.iter().cloned().collect();
        }
        let out = self.apply(m, r);
        self.forced.clear();
        let (next, step) = out?;
        // Parsed backward ids carry no tags; the record's consumed side does.
        let same_redex = step.redex == *r || (r.tags.is_empty() && RedexId { tags: Vec::new(), ..step.redex.clone() } == *r);
        if !same_redex || step.consumed != recorded.consumed || step.produced != recorded.produced || step.fresh != recorded.fresh {
            return Err(StepError::Diverged(r.clone()));
        }
        Ok((next, step))
    }

    pub fn apply(&mut self, m: &Configuration, r: &RedexId) -> Result<(Configuration, Step), StepError> {
        match r.direction {
            Direction::Forward => self.apply_forward(m, r),
            Direction::Backward => self.apply_backward(m, r),
        }
    }

    pub fn apply_forward(&mut self, m: &Configuration, r: &RedexId) -> Result<(Configuration, Step), StepError> {
        let stale = || StepError::Stale(r.clone());
        if r.direction != Direction::Forward {
            return Err(stale());
        }
        let threads: Vec<&Thread> = r.tags.iter().map(|t| m.thread(*t).ok_or_else(stale)).collect::<Result<_, _>>()?;
        let consumed = Resources { tags: r.tags.clone(), threads: threads.iter().map(|t| (*t).clone()).collect(), memory: None };
        let mut fresh = Vec::new();
        let (new_threads, memory) = match (r.rule, threads.as_slice()) {
            (Rule::Init, [t1, t2]) => {
                let (
                    Process::Request { chan: Atom::Val(Value::Shared(a)), var: x, body: p1 },
                    Process::Accept { chan: Atom::Val(Value::Shared(b)), var: y, body: p2 },
                ) = (&t1.body, &t2.body)
                else {
                    return Err(stale());
                };
                if a != b || t1.tag == t2.tag {
                    return Err(stale());
                }
                let s = self.fresh_session(&m.symbols());
                let (u1, u2) = (self.fresh_tag_for(m), self.fresh_tag_for(m));
                fresh.extend([Name::Session(s.clone()), Name::Tag(u1), Name::Tag(u2)]);
                let minus = Value::Endpoint(Endpoint { session: s.clone(), polarity: Polarity::Minus });
                let plus = Value::Endpoint(Endpoint { session: s.clone(), polarity: Polarity::Plus });
                let threads = vec![
                    Thread { tag: u1, body: substitute_one(p1, x, minus) },
                    Thread { tag: u2, body: substitute_one(p2, y, plus) },
                ];
                let event = ActionEvent::Init {
                    chan: a.clone(),
                    req_var: x.clone(),
                    acc_var: y.clone(),
                    requester: (**p1).clone(),
                    accepter: (**p2).clone(),
                    session: s,
                };
                (threads, Memory::Action { active: t1.tag, passive: t2.tag, event, active_out: u1, passive_out: u2 })
            }
            (Rule::Com, [t1, t2]) => {
                let (Process::Send { chan: Atom::Val(Value::Endpoint(k)), payload, body: p }, Process::Receive { chan: Atom::Val(Value::Endpoint(k2)), var: x, body: q }) =
                    (&t1.body, &t2.body)
                else {
                    return Err(stale());
                };
                if *k2 != k.dual() || t1.tag == t2.tag {
                    return Err(stale());
                }
                let v = eval_closed(payload)?;
                let (u1, u2) = (self.fresh_tag_for(m), self.fresh_tag_for(m));
                fresh.extend([Name::Tag(u1), Name::Tag(u2)]);
                let threads =
                    vec![Thread { tag: u1, body: (**p).clone() }, Thread { tag: u2, body: substitute_one(q, x, v) }];
                let event = ActionEvent::Com {
                    chan: k.clone(),
                    payload: payload.clone(),
                    var: x.clone(),
                    sender: (**p).clone(),
                    receiver: (**q).clone(),
                };
                (threads, Memory::Action { active: t1.tag, passive: t2.tag, event, active_out: u1, passive_out: u2 })
            }
            (Rule::Sel, [t1, t2]) => {
                let (Process::Select { chan: Atom::Val(Value::Endpoint(k)), label, body: p }, Process::Branch { chan: Atom::Val(Value::Endpoint(k2)), arms }) =
                    (&t1.body, &t2.body)
                else {
                    return Err(stale());
                };
                if *k2 != k.dual() || t1.tag == t2.tag {
                    return Err(stale());
                }
                let arm = arms.iter().find(|a| a.label == *label).ok_or_else(stale)?;
                let (u1, u2) = (self.fresh_tag_for(m), self.fresh_tag_for(m));
                fresh.extend([Name::Tag(u1), Name::Tag(u2)]);
                let threads = vec![Thread { tag: u1, body: (**p).clone() }, Thread { tag: u2, body: arm.body.clone() }];
                let event =
                    ActionEvent::Sel { chan: k.clone(), label: label.clone(), selector: (**p).clone(), arms: arms.clone() };
                (threads, Memory::Action { active: t1.tag, passive: t2.tag, event, active_out: u1, passive_out: u2 })
            }
            (Rule::If, [t]) => {
                let Process::If { guard, then_branch, else_branch } = &t.body else {
                    return Err(stale());
                };
                let b = match eval_closed(guard)? {
                    Value::Bool(b) => b,
                    _ => return Err(stale()),
                };
                if r.branch.is_some_and(|rb| rb != b) {
                    return Err(stale());
                }
                let u = self.fresh_tag_for(m);
                fresh.push(Name::Tag(u));
                let body = if b { (**then_branch).clone() } else { (**else_branch).clone() };
                let event = ChoiceEvent {
                    guard: guard.clone(),
                    then_branch: (**then_branch).clone(),
                    else_branch: (**else_branch).clone(),
                };
                (vec![Thread { tag: u, body }], Memory::Choice { tag: t.tag, event, out: u })
            }
            (Rule::Fork, [t]) => {
                let Process::Par { left, right } = &t.body else {
                    return Err(stale());
                };
                let (u1, u2) = (self.fresh_tag_for(m), self.fresh_tag_for(m));
                fresh.extend([Name::Tag(u1), Name::Tag(u2)]);
                let threads = vec![Thread { tag: u1, body: (**left).clone() }, Thread { tag: u2, body: (**right).clone() }];
                (threads, Memory::Fork { tag: t.tag, left: u1, right: u2 })
            }
            _ => return Err(stale()),
        };
        let consumed_tags: BTreeSet<Tag> = r.tags.iter().copied().collect();
        let mut threads: Vec<Thread> = m.threads.iter().filter(|t| !consumed_tags.contains(&t.tag)).cloned().collect();
        threads.extend(new_threads);
        let mut memories = m.memories.clone();
        memories.push(memory.clone());
        let restricted = m.restricted.iter().cloned().chain(fresh.iter().cloned());
        let next = Configuration::new(restricted, threads, memories);
        let produced_tags = memory.produced();
        let produced = Resources {
            threads: produced_tags.iter().filter_map(|t| next.thread(*t).cloned()).collect(),
            tags: produced_tags,
            memory: Some(memory),
        };
        Ok((next, Step { redex: normalized_forward(r), consumed, produced, fresh }))
    }

    pub fn apply_backward(&mut self, m: &Configuration, r: &RedexId) -> Result<(Configuration, Step), StepError> {
        let stale = || StepError::Stale(r.clone());
        if r.direction != Direction::Backward {
            return Err(stale());
        }
        let id = r.memory.ok_or_else(stale)?;
        let memory = m.memory(id).ok_or_else(stale)?.clone();
        if memory.rule() != r.rule {
            return Err(stale());
        }
        let produced_tags = memory.produced();
        if !r.tags.is_empty() && r.tags != produced_tags {
            return Err(stale());
        }
        let current: Vec<Thread> =
            produced_tags.iter().map(|t| m.thread(*t).cloned().ok_or_else(stale)).collect::<Result<_, _>>()?;
        let mut restored: Vec<Thread> = match memory.restored_threads() {
            Some(v) => v.into_iter().map(|(tag, body)| Thread { tag, body }).collect(),
            None => {
                let Memory::Fork { tag, .. } = &memory else { unreachable!() };
                vec![Thread { tag: *tag, body: Process::par(current[0].body.clone(), current[1].body.clone()) }]
            }
        };
        match self.mutation {
            Some(Mutation::BackwardForgetsPassive) if restored.len() == 2 => restored[1].body = Process::Nil,
            Some(Mutation::BackwardForgetsPayload) => {
                if let Process::Send { payload, .. } = &mut restored[0].body {
                    *payload = crate::syntax::Expr::nat(0);
                }
            }
            _ => {}
        }
        let produced_set: BTreeSet<Tag> = produced_tags.iter().copied().collect();
        let mut threads: Vec<Thread> = m.threads.iter().filter(|t| !produced_set.contains(&t.tag)).cloned().collect();
        threads.extend(restored.iter().cloned());
        let memories: Vec<Memory> = m.memories.iter().filter(|x| x.id() != id).cloned().collect();
        let mut released: Vec<Name> = produced_tags.iter().map(|t| Name::Tag(*t)).collect();
        if let Memory::Action { event: ActionEvent::Init { session, .. }, .. } = &memory {
            released.insert(0, Name::Session(session.clone()));
        }
        let restricted: Vec<Name> = m.restricted.iter().filter(|n| !matches!(n, Name::Tag(t) if produced_set.contains(t))).cloned().collect();
        let next = Configuration::new(restricted, threads, memories);
        let released = released.into_iter().filter(|n| m.restricted.contains(n) && !next.restricted.contains(n)).collect();
        let consumed_tags = memory.consumed();
        let step = Step {
            redex: RedexId::backward(&memory),
            consumed: Resources { tags: produced_tags, threads: current, memory: Some(memory) },
            produced: Resources {
                threads: consumed_tags.iter().filter_map(|t| next.thread(*t).cloned()).collect(),
                tags: consumed_tags,
                memory: None,
            },
            fresh: released,
        };
        Ok((next, step))
    }
}

fn normalized_forward(r: &RedexId) -> RedexId {
    RedexId { direction: Direction::Forward, rule: r.rule, tags: r.tags.clone(), memory: None, branch: r.branch }
}

/// Guard value of a conditional thread, if it is closed and boolean.
fn guard_value(p: &Process) -> Option<bool> {
    match p {
        Process::If { guard, .. } => match eval_closed(guard) {
            Ok(Value::Bool(b)) => Some(b),
            _ => None,
        },
        _ => None,
    }
}

/// All enabled forward redexes, in a deterministic order.
pub fn enumerate_forward(m: &Configuration) -> Vec<RedexId> {
    let mut out = Vec::new();
    for t1 in &m.threads {
        match &t1.body {
            Process::Request { chan: Atom::Val(Value::Shared(a)), .. } => {
                for t2 in &m.threads {
                    if t2.tag != t1.tag && matches!(&t2.body, Process::Accept { chan: Atom::Val(Value::Shared(b)), .. } if b == a) {
                        out.push(RedexId::forward(Rule::Init, vec![t1.tag, t2.tag]));
                    }
                }
            }
            Process::Send { chan: Atom::Val(Value::Endpoint(k)), payload, .. } => {
                if eval_closed(payload).is_err() {
                    continue;
                }
                for t2 in &m.threads {
                    if t2.tag != t1.tag
                        && matches!(&t2.body, Process::Receive { chan: Atom::Val(Value::Endpoint(k2)), .. } if *k2 == k.dual())
                    {
                        out.push(RedexId::forward(Rule::Com, vec![t1.tag, t2.tag]));
                    }
                }
            }
            Process::Select { chan: Atom::Val(Value::Endpoint(k)), label, .. } => {
                for t2 in &m.threads {
                    if t2.tag == t1.tag {
                        continue;
                    }
                    if let Process::Branch { chan: Atom::Val(Value::Endpoint(k2)), arms } = &t2.body {
                        if *k2 == k.dual() && arms.iter().any(|a| a.label == *label) {
                            out.push(RedexId::forward(Rule::Sel, vec![t1.tag, t2.tag]));
                        }
                    }
                }
            }
            Process::If { .. } => {
                if let Some(b) = guard_value(&t1.body) {
                    out.push(RedexId { branch: Some(b), ..RedexId::forward(Rule::If, vec![t1.tag]) });
                }
            }
            Process::Par { .. } => out.push(RedexId::forward(Rule::Fork, vec![t1.tag])),
            _ => {}
        }
    }
    out.sort();
    out
}

/// One backward redex per memory whose produced threads are all live.
pub fn enumerate_backward(m: &Configuration) -> Vec<RedexId> {
    let live = m.live_tags();
    m.memories.iter().filter(|x| x.produced().iter().all(|t| live.contains(t))).map(RedexId::backward).collect()
}

pub fn enumerate(m: &Configuration) -> Vec<RedexId> {
    let mut v = enumerate_forward(m);
    v.extend(enumerate_backward(m));
    v
}

/// Resource overlap test for two redexes enabled in the same configuration.
pub fn concurrent(r1: &RedexId, r2: &RedexId) -> bool {
    if r1 == r2 {
        return false;
    }
    let tags_overlap = r1.tags.iter().any(|t| r2.tags.contains(t));
    let memory_overlap = r1.memory.is_some() && r1.memory == r2.memory;
    !tags_overlap && !memory_overlap
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congruence::alpha_tag_equal;
    use crate::parser::parse_configuration;

    fn cfg(s: &str) -> Configuration {
        parse_configuration(s).unwrap()
    }

    #[test]
    fn init_forward_and_back() {
        let m = cfg("t1 : req a(x). x!<1>.0 | t2 : acc a(y). y?(z).0");
        let rs = enumerate_forward(&m);
        assert_eq!(rs, vec![RedexId::forward(Rule::Init, vec![Tag(1), Tag(2)])]);
        let mut e = Engine::new();
        let (n, step) = e.apply(&m, &rs[0]).unwrap();
        assert_eq!(n.memories.len(), 1);
        assert_eq!(step.fresh.len(), 3);
        let expected = cfg(
            "new s, t3, t4 in (t3 : ~s!<1>.0 | t4 : s?(z).0 | [act t1,t2 -> t3,t4 : init(a, x, y, x!<1>.0, y?(z).0, s)])",
        );
        assert!(alpha_tag_equal(&n, &expected), "{}", crate::parser::print_configuration(&n));
        let back = enumerate_backward(&n);
        assert_eq!(back.len(), 1);
        let (o, _) = e.apply(&n, &back[0]).unwrap();
        assert!(alpha_tag_equal(&o, &m));
    }

    #[test]
    fn enumeration_of_mixed_redexes() {
        let m = cfg("new s in (t1 : ~s!<1>.0 | t2 : s?(x).0 | t3 : if true then 0 else 0)");
        let rs = enumerate_forward(&m);
        assert_eq!(rs.len(), 2);
        assert_eq!(rs[0].rule, Rule::Com);
        assert_eq!(rs[1].rule, Rule::If);
        assert!(concurrent(&rs[0], &rs[1]));
    }

    #[test]
    fn chained_memories_disable_the_older() {
        let m = cfg("t1 : if true then (if false then 0 else 0) else 0");
        let mut e = Engine::new();
        let (n, _) = e.apply(&m, &enumerate_forward(&m)[0]).unwrap();
        let (n, _) = e.apply(&n, &enumerate_forward(&n)[0]).unwrap();
        let back = enumerate_backward(&n);
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].memory, Some(n.memories.iter().map(Memory::id).max().unwrap()));
    }

    #[test]
    fn fork_restores_live_bodies() {
        let m = cfg("t1 : (0 | 0)");
        let mut e = Engine::new();
        let (n, step) = e.apply(&m, &enumerate_forward(&m)[0]).unwrap();
        assert_eq!(n.threads.len(), 2);
        let (o, _) = e.apply(&n, &step.mirror()).unwrap();
        assert!(alpha_tag_equal(&o, &m));
    }

    #[test]
    fn stale_redex_is_rejected() {
        let m = cfg("t1 : (0 | 0)");
        let mut e = Engine::new();
        let r = enumerate_forward(&m)[0].clone();
        let (n, _) = e.apply(&m, &r).unwrap();
        assert!(matches!(e.apply(&n, &r), Err(StepError::Stale(_))));
    }

    #[test]
    fn redex_ids_round_trip() {
        for s in ["fwd:Com:t1,t2", "fwd:If:t3:then", "bwd:Init:m4"] {
            assert_eq!(s.parse::<RedexId>().unwrap().to_string(), s);
        }
        assert!("fwd:If:t3".parse::<RedexId>().is_err());
    }

    #[test]
    fn fresh_names_are_distinct() {
        let mut e = Engine::new();
        let tags: BTreeSet<Tag> = (0..100_000).map(|_| e.fresh_tag()).collect();
        assert_eq!(tags.len(), 100_000);
        let mut a = Engine::seeded(7);
        let mut b = Engine::seeded(7);
        assert_eq!(a.fresh_session(&BTreeSet::new()), b.fresh_session(&BTreeSet::new()));
    }
}
