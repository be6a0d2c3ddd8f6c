//! Configurations of the reversible calculus and their canonical form.
//!
//! A configuration is kept flattened as `(ν names)(threads | memories)`.
//! Threads are sorted by tag and memories by id. Thread heads are
//! normalized: a leading `rec` is unfolded and a leading `new` is extruded
//! to the configuration level, so every live thread exposes its first
//! action directly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::subst::{fresh_symbol, rename_channel, unfold};
use crate::syntax::{ActionEvent, Channel, Endpoint, Memory, MemoryId, Name, Process, Symbol, Tag, Thread};

/// Canonical flattened configuration.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    pub restricted: BTreeSet<Name>,
    pub threads: Vec<Thread>,
    pub memories: Vec<Memory>,
}

/// Unflattened configuration syntax, as written in source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConfigTerm {
    Nil,
    Thread(Thread),
    Memory(Memory),
    Par(Vec<ConfigTerm>),
    New(Vec<Name>, Box<ConfigTerm>),
}

const UNFOLD_LIMIT: usize = 64;

impl Configuration {
    /// Builds the canonical form of `(ν restricted)(threads | memories)`.
    pub fn new(restricted: impl IntoIterator<Item = Name>, threads: Vec<Thread>, memories: Vec<Memory>) -> Self {
        let mut restricted: BTreeSet<Name> = restricted.into_iter().collect();
        let mut shared = BTreeSet::new();
        for m in &memories {
            m.symbols(&mut shared);
        }
        let per_thread: Vec<BTreeSet<Symbol>> = threads
            .iter()
            .map(|t| {
                let mut s = BTreeSet::new();
                t.body.symbols(&mut s);
                s
            })
            .collect();
        let mut extruded = BTreeSet::new();
        let mut threads: Vec<Thread> = threads
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                if !matches!(t.body, Process::Rec { .. } | Process::New { .. }) {
                    return t;
                }
                let mut others = shared.clone();
                for (j, s) in per_thread.iter().enumerate() {
                    if j != i {
                        others.extend(s.iter().cloned());
                    }
                }
                others.extend(extruded.iter().cloned());
                let body = head_normalize(t.body, &mut restricted, &mut others);
                extruded.extend(others);
                Thread { tag: t.tag, body }
            })
            .collect();
        threads.sort();
        let mut memories = memories;
        memories.sort_by(|a, b| a.id().cmp(&b.id()).then_with(|| a.cmp(b)));
        let mut cfg = Configuration { restricted, threads, memories };
        cfg.drop_unused_restrictions();
        cfg
    }

    pub fn nil() -> Self {
        Configuration { restricted: BTreeSet::new(), threads: Vec::new(), memories: Vec::new() }
    }

    /// The initial configuration `t1 : P`.
    pub fn from_process(p: Process) -> Self {
        Configuration::new([], vec![Thread { tag: Tag(1), body: p }], Vec::new())
    }

    fn drop_unused_restrictions(&mut self) {
        let mut chans = BTreeSet::new();
        let mut tags = BTreeSet::new();
        for t in &self.threads {
            tags.insert(t.tag);
            chans.extend(t.body.free_channels());
        }
        for m in &self.memories {
            tags.extend(m.tags());
            chans.extend(m.free_channels());
        }
        self.restricted.retain(|n| match n {
            Name::Tag(t) => tags.contains(t),
            other => other.as_channel().is_some_and(|c| chans.contains(&c)),
        });
    }

    pub fn is_empty(&self) -> bool {
        self.threads.is_empty() && self.memories.is_empty()
    }

    pub fn thread(&self, tag: Tag) -> Option<&Thread> {
        self.threads.iter().find(|t| t.tag == tag)
    }

    pub fn memory(&self, id: MemoryId) -> Option<&Memory> {
        self.memories.iter().find(|m| m.id() == id)
    }

    /// The memory that consumed `tag`, if any.
    pub fn consumer_of(&self, tag: Tag) -> Option<&Memory> {
        self.memories.iter().find(|m| m.consumed().contains(&tag))
    }

    /// The memory that produced `tag`, if any.
    pub fn producer_of(&self, tag: Tag) -> Option<&Memory> {
        self.memories.iter().find(|m| m.produced().contains(&tag))
    }

    pub fn live_tags(&self) -> BTreeSet<Tag> {
        self.threads.iter().map(|t| t.tag).collect()
    }

    /// Largest tag number mentioned anywhere (restrictions included).
    pub fn max_tag(&self) -> u64 {
        let mut max = 0;
        for t in &self.threads {
            max = max.max(t.tag.0);
        }
        for m in &self.memories {
            for t in m.tags() {
                max = max.max(t.0);
            }
        }
        for n in &self.restricted {
            if let Name::Tag(t) = n {
                max = max.max(t.0);
            }
        }
        max
    }

    /// Every identifier mentioned anywhere, bound or free.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for t in &self.threads {
            t.body.symbols(&mut out);
        }
        for m in &self.memories {
            m.symbols(&mut out);
        }
        for n in &self.restricted {
            if let Some(c) = n.as_channel() {
                out.insert(c.symbol().clone());
            }
        }
        out
    }

    pub fn is_restricted(&self, n: &Name) -> bool {
        self.restricted.contains(n)
    }

    pub fn restricted_channels(&self) -> impl Iterator<Item = Channel> + '_ {
        self.restricted.iter().filter_map(Name::as_channel)
    }

    pub fn restricted_tags(&self) -> impl Iterator<Item = Tag> + '_ {
        self.restricted.iter().filter_map(|n| match n {
            Name::Tag(t) => Some(*t),
            _ => None,
        })
    }

    /// Free channel names of the whole configuration.
    pub fn free_channels(&self) -> BTreeSet<Channel> {
        let mut out = BTreeSet::new();
        for t in &self.threads {
            out.extend(t.body.free_channels());
        }
        for m in &self.memories {
            out.extend(m.free_channels());
        }
        out.retain(|c| !self.restricted.contains(&Name::from(c.clone())));
        out
    }

    /// Unflattened view, useful for printing and for tests of flattening.
    pub fn to_term(&self) -> ConfigTerm {
        let mut items: Vec<ConfigTerm> = self.threads.iter().cloned().map(ConfigTerm::Thread).collect();
        items.extend(self.memories.iter().cloned().map(ConfigTerm::Memory));
        let body = match items.len() {
            0 => ConfigTerm::Nil,
            1 => items.pop().unwrap(),
            _ => ConfigTerm::Par(items),
        };
        if self.restricted.is_empty() {
            body
        } else {
            ConfigTerm::New(self.restricted.iter().cloned().collect(), Box::new(body))
        }
    }
}

/// Unfolds a leading `rec` and extrudes leading restrictions. `used` holds
/// the symbols mentioned outside this thread; an extruded channel clashing
/// with one of them, or with a restricted name, is renamed.
fn head_normalize(mut p: Process, restricted: &mut BTreeSet<Name>, used: &mut BTreeSet<Symbol>) -> Process {
    let mut unfoldings = 0;
    loop {
        match p {
            Process::Rec { ref var, ref body } if unfoldings < UNFOLD_LIMIT => {
                let next = unfold(var, body);
                if next == p {
                    return p;
                }
                unfoldings += 1;
                p = next;
            }
            Process::New { chan, body } => {
                let taken = used.contains(chan.symbol())
                    || restricted.iter().any(|n| n.as_channel().is_some_and(|c| c.symbol() == chan.symbol()));
                if taken {
                    let mut avoid = used.clone();
                    body.symbols(&mut avoid);
                    let fresh = fresh_symbol(chan.symbol(), &avoid);
                    let renamed = rename_channel(&body, &chan, fresh.clone());
                    let chan = chan.with_symbol(fresh);
                    used.insert(chan.symbol().clone());
                    restricted.insert(chan.into());
                    p = renamed;
                } else {
                    used.insert(chan.symbol().clone());
                    restricted.insert(chan.into());
                    p = *body;
                }
            }
            other => return other,
        }
    }
}

/// Renaming of names in a configuration fragment.
#[derive(Clone, Debug, Default)]
pub struct NameMap {
    pub tags: BTreeMap<Tag, Tag>,
    pub chans: BTreeMap<Channel, Symbol>,
}

impl NameMap {
    pub fn is_empty(&self) -> bool {
        self.tags.is_empty() && self.chans.is_empty()
    }

    pub fn tag(&self, t: Tag) -> Tag {
        self.tags.get(&t).copied().unwrap_or(t)
    }

    pub fn process(&self, p: &Process) -> Process {
        let mut out = p.clone();
        if self.chans.is_empty() {
            return out;
        }
        // Rename through temporaries so that swaps like a<->b work.
        let mut avoid = BTreeSet::new();
        p.symbols(&mut avoid);
        avoid.extend(self.chans.values().cloned());
        let mut staged = Vec::new();
        for (from, to) in &self.chans {
            let tmp = fresh_symbol(&format!("{}#", from.symbol()), &avoid);
            avoid.insert(tmp.clone());
            out = rename_channel(&out, from, tmp.clone());
            staged.push((from.with_symbol(tmp), to.clone()));
        }
        for (tmp, to) in staged {
            out = rename_channel(&out, &tmp, to);
        }
        out
    }

    fn symbol(&self, c: Channel) -> Symbol {
        self.chans.get(&c).cloned().unwrap_or_else(|| c.symbol().clone())
    }

    fn endpoint(&self, e: &Endpoint) -> Endpoint {
        Endpoint { session: self.symbol(Channel::Session(e.session.clone())), polarity: e.polarity }
    }

    pub fn name(&self, n: &Name) -> Name {
        match n {
            Name::Tag(t) => Name::Tag(self.tag(*t)),
            Name::Shared(s) => Name::Shared(self.symbol(Channel::Shared(s.clone()))),
            Name::Session(s) => Name::Session(self.symbol(Channel::Session(s.clone()))),
        }
    }

    pub fn thread(&self, t: &Thread) -> Thread {
        Thread { tag: self.tag(t.tag), body: self.process(&t.body) }
    }

    pub fn memory(&self, m: &Memory) -> Memory {
        match m {
            Memory::Action { active, passive, event, active_out, passive_out } => {
                let event = match event {
                    ActionEvent::Init { chan, req_var, acc_var, requester, accepter, session } => {
                        ActionEvent::Init {
                            chan: self.symbol(Channel::Shared(chan.clone())),
                            req_var: req_var.clone(),
                            acc_var: acc_var.clone(),
                            requester: self.process(requester),
                            accepter: self.process(accepter),
                            session: self.symbol(Channel::Session(session.clone())),
                        }
                    }
                    ActionEvent::Com { chan, payload, var, sender, receiver } => {
                        // The payload travels with the sender prefix; rename it through it.
                        let pre = Process::Send {
                            chan: crate::syntax::Atom::Var(crate::syntax::sym("_")),
                            payload: payload.clone(),
                            body: Box::new(Process::Nil),
                        };
                        let payload = match self.process(&pre) {
                            Process::Send { payload, .. } => payload,
                            _ => unreachable!(),
                        };
                        ActionEvent::Com {
                            chan: self.endpoint(chan),
                            payload,
                            var: var.clone(),
                            sender: self.process(sender),
                            receiver: self.process(receiver),
                        }
                    }
                    ActionEvent::Sel { chan, label, selector, arms } => ActionEvent::Sel {
                        chan: self.endpoint(chan),
                        label: label.clone(),
                        selector: self.process(selector),
                        arms: arms
                            .iter()
                            .map(|a| crate::syntax::Arm { label: a.label.clone(), body: self.process(&a.body) })
                            .collect(),
                    },
                };
                Memory::Action {
                    active: self.tag(*active),
                    passive: self.tag(*passive),
                    event,
                    active_out: self.tag(*active_out),
                    passive_out: self.tag(*passive_out),
                }
            }
            Memory::Choice { tag, event, out } => {
                let restored = self.process(&Process::If {
                    guard: event.guard.clone(),
                    then_branch: Box::new(event.then_branch.clone()),
                    else_branch: Box::new(event.else_branch.clone()),
                });
                let event = match restored {
                    Process::If { guard, then_branch, else_branch } => crate::syntax::ChoiceEvent {
                        guard,
                        then_branch: *then_branch,
                        else_branch: *else_branch,
                    },
                    _ => unreachable!(),
                };
                Memory::Choice { tag: self.tag(*tag), event, out: self.tag(*out) }
            }
            Memory::Fork { tag, left, right } => {
                Memory::Fork { tag: self.tag(*tag), left: self.tag(*left), right: self.tag(*right) }
            }
        }
    }
}

impl ConfigTerm {
    /// Flattens nested restrictions and parallel compositions into canonical
    /// form. Restricted names that clash with names bound or free elsewhere
    /// are renamed apart.
    pub fn flatten(&self) -> Configuration {
        let mut claimed_syms = BTreeSet::new();
        let mut claimed_tags = BTreeSet::new();
        self.free_names(&mut Vec::new(), &mut claimed_syms, &mut claimed_tags);
        let mut all_syms = claimed_syms.clone();
        let mut all_tags = claimed_tags.clone();
        self.all_names(&mut all_syms, &mut all_tags);
        let mut st = FlattenState {
            claimed_syms,
            claimed_tags,
            all_syms,
            next_tag: all_tags.iter().map(|t| t.0).max().unwrap_or(0) + 1,
            restricted: BTreeSet::new(),
            threads: Vec::new(),
            memories: Vec::new(),
        };
        st.go(self, &NameMap::default());
        Configuration::new(st.restricted, st.threads, st.memories)
    }

    fn free_names(&self, bound: &mut Vec<Name>, syms: &mut BTreeSet<Symbol>, tags: &mut BTreeSet<Tag>) {
        let chan_free = |c: Channel, bound: &Vec<Name>, syms: &mut BTreeSet<Symbol>| {
            if !bound.contains(&Name::from(c.clone())) {
                syms.insert(c.symbol().clone());
            }
        };
        match self {
            ConfigTerm::Nil => {}
            ConfigTerm::Thread(t) => {
                if !bound.contains(&Name::Tag(t.tag)) {
                    tags.insert(t.tag);
                }
                for c in t.body.free_channels() {
                    chan_free(c, bound, syms);
                }
            }
            ConfigTerm::Memory(m) => {
                for t in m.tags() {
                    if !bound.contains(&Name::Tag(t)) {
                        tags.insert(t);
                    }
                }
                for c in m.free_channels() {
                    chan_free(c, bound, syms);
                }
            }
            ConfigTerm::Par(items) => items.iter().for_each(|i| i.free_names(bound, syms, tags)),
            ConfigTerm::New(names, body) => {
                let n = bound.len();
                bound.extend(names.iter().cloned());
                body.free_names(bound, syms, tags);
                bound.truncate(n);
            }
        }
    }

    fn all_names(&self, syms: &mut BTreeSet<Symbol>, tags: &mut BTreeSet<Tag>) {
        match self {
            ConfigTerm::Nil => {}
            ConfigTerm::Thread(t) => {
                tags.insert(t.tag);
                t.body.symbols(syms);
            }
            ConfigTerm::Memory(m) => {
                tags.extend(m.tags());
                m.symbols(syms);
            }
            ConfigTerm::Par(items) => items.iter().for_each(|i| i.all_names(syms, tags)),
            ConfigTerm::New(names, body) => {
                for n in names {
                    match n {
                        Name::Tag(t) => {
                            tags.insert(*t);
                        }
                        other => {
                            syms.insert(other.as_channel().unwrap().symbol().clone());
                        }
                    }
                }
                body.all_names(syms, tags);
            }
        }
    }

    /// Thread tags in source order, with repetitions.
    pub fn thread_tags(&self) -> Vec<Tag> {
        let mut out = Vec::new();
        fn go(t: &ConfigTerm, out: &mut Vec<Tag>) {
            match t {
                ConfigTerm::Thread(th) => out.push(th.tag),
                ConfigTerm::Par(items) => items.iter().for_each(|i| go(i, out)),
                ConfigTerm::New(_, b) => go(b, out),
                _ => {}
            }
        }
        go(self, &mut out);
        out
    }
}

struct FlattenState {
    claimed_syms: BTreeSet<Symbol>,
    claimed_tags: BTreeSet<Tag>,
    all_syms: BTreeSet<Symbol>,
    next_tag: u64,
    restricted: BTreeSet<Name>,
    threads: Vec<Thread>,
    memories: Vec<Memory>,
}

impl FlattenState {
    fn go(&mut self, term: &ConfigTerm, map: &NameMap) {
        match term {
            ConfigTerm::Nil => {}
            ConfigTerm::Thread(t) => self.threads.push(map.thread(t)),
            ConfigTerm::Memory(m) => self.memories.push(map.memory(m)),
            ConfigTerm::Par(items) => items.iter().for_each(|i| self.go(i, map)),
            ConfigTerm::New(names, body) => {
                let mut inner = map.clone();
                for n in names {
                    match n {
                        Name::Tag(t) => {
                            let t2 = if self.claimed_tags.contains(t) {
                                let fresh = Tag(self.next_tag);
                                self.next_tag += 1;
                                fresh
                            } else {
                                *t
                            };
                            self.claimed_tags.insert(t2);
                            if t2 != *t {
                                inner.tags.insert(*t, t2);
                            } else {
                                inner.tags.remove(t);
                            }
                            self.restricted.insert(Name::Tag(t2));
                        }
                        other => {
                            let c = other.as_channel().unwrap();
                            let s = c.symbol().clone();
                            let s2 = if self.claimed_syms.contains(&s) {
                                let f = fresh_symbol(&s, &self.all_syms);
                                self.all_syms.insert(f.clone());
                                f
                            } else {
                                s.clone()
                            };
                            self.claimed_syms.insert(s2.clone());
                            if s2 != s {
                                inner.chans.insert(c.clone(), s2.clone());
                            } else {
                                inner.chans.remove(&c);
                            }
                            self.restricted.insert(Name::from(c.with_symbol(s2)));
                        }
                    }
                }
                self.go(body, &inner);
            }
        }
    }
}

/// The forgetful map: erases memories, tags and tag restrictions, keeping
/// channel restrictions around the parallel composition of thread bodies.
pub fn forgetful_map(m: &Configuration) -> Process {
    let body = Process::par_all(m.threads.iter().map(|t| t.body.clone()));
    let chans: Vec<Channel> = m.restricted_channels().collect();
    chans.into_iter().rev().fold(body, |acc, c| Process::new_chan(c, acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{sym, Atom, Expr};

    fn send(chan: Atom, body: Process) -> Process {
        Process::Send { chan, payload: Expr::nat(1), body: Box::new(body) }
    }

    #[test]
    fn head_rec_is_unfolded() {
        let body = Process::Accept { chan: Atom::shared("a"), var: sym("x"), body: Box::new(Process::Var { name: sym("X") }) };
        let p = Process::Rec { var: sym("X"), body: Box::new(body) };
        let c = Configuration::from_process(p.clone());
        assert!(matches!(c.threads[0].body, Process::Accept { .. }));
    }

    #[test]
    fn head_new_is_extruded() {
        let p = Process::new_chan(Channel::Shared(sym("c")), send(Atom::shared("c"), Process::Nil));
        let c = Configuration::from_process(p);
        assert!(c.restricted.contains(&Name::Shared(sym("c"))));
        assert!(matches!(c.threads[0].body, Process::Send { .. }));
    }

    #[test]
    fn extrusion_renames_on_clash() {
        let inner = Process::new_chan(Channel::Shared(sym("c")), send(Atom::shared("c"), Process::Nil));
        let threads = vec![
            Thread { tag: Tag(1), body: inner },
            Thread { tag: Tag(2), body: send(Atom::shared("c"), Process::Nil) },
        ];
        let c = Configuration::new([], threads, vec![]);
        assert_eq!(c.restricted.len(), 1);
        let r = c.restricted.iter().next().unwrap().clone();
        assert_ne!(r, Name::Shared(sym("c")));
        assert!(c.threads[1].body.free_channels().contains(&Channel::Shared(sym("c"))));
    }

    #[test]
    fn unused_restrictions_dropped() {
        let c = Configuration::new([Name::Tag(Tag(4)), Name::Session(sym("s"))], vec![], vec![]);
        assert!(c.restricted.is_empty());
    }

    #[test]
    fn forgetful_map_examples() {
        assert_eq!(forgetful_map(&Configuration::nil()), Process::Nil);
        let p = send(Atom::shared("a"), Process::Nil);
        assert_eq!(forgetful_map(&Configuration::from_process(p.clone())), p);
    }

    #[test]
    fn flatten_renames_clashing_scopes() {
        let scoped = |tag| {
            ConfigTerm::New(
                vec![Name::Shared(sym("c"))],
                Box::new(ConfigTerm::Thread(Thread { tag: Tag(tag), body: send(Atom::shared("c"), Process::Nil) })),
            )
        };
        let term = ConfigTerm::Par(vec![scoped(1), scoped(2)]);
        let c = term.flatten();
        assert_eq!(c.restricted.len(), 2);
        let a = c.threads[0].body.free_channels();
        let b = c.threads[1].body.free_channels();
        assert!(a.is_disjoint(&b));
    }
}
