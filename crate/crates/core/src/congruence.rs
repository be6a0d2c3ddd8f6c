//! Structural congruence of processes and configurations.
//!
//! Processes are compared in nameless form up to associativity and
//! commutativity of `|`, neutrality of `0`, and unfolding of `rec`.
//! Configurations are compared up to a bijective renaming of their
//! restricted tags and channels, found by backtracking over the pairing of
//! threads and memories.

use std::collections::{BTreeMap, BTreeSet};

use crate::config::Configuration;
use crate::nameless::{to_nameless, unfold, NAtom, NExpr, NName, NProc, NVal};
use crate::subst::{fresh_symbol, rename_channel};
use crate::syntax::{Memory, Name, Process, Rule, Symbol, Tag};

/// Unfoldings allowed along one comparison path.
const FUEL: u32 = 12;

#[derive(Clone, Default)]
struct Bijection {
    fwd: BTreeMap<Name, Name>,
    bwd: BTreeMap<Name, Name>,
}

struct Scope<'a> {
    left: &'a BTreeSet<Name>,
    right: &'a BTreeSet<Name>,
}

impl Scope<'_> {
    fn name(&self, bij: &mut Bijection, a: Name, b: Name) -> bool {
        let ra = self.left.contains(&a);
        let rb = self.right.contains(&b);
        if ra != rb {
            return false;
        }
        if !ra {
            return a == b;
        }
        match (bij.fwd.get(&a), bij.bwd.get(&b)) {
            (Some(x), Some(y)) => *x == b && *y == a,
            (None, None) => {
                bij.fwd.insert(a.clone(), b.clone());
                bij.bwd.insert(b, a);
                true
            }
            _ => false,
        }
    }

    /// Whether the pair could still be mapped, without committing it.
    fn compatible(&self, bij: &Bijection, a: &Name, b: &Name) -> bool {
        let ra = self.left.contains(a);
        if ra != self.right.contains(b) {
            return false;
        }
        if !ra {
            return a == b;
        }
        match (bij.fwd.get(a), bij.bwd.get(b)) {
            (Some(x), Some(y)) => x == b && y == a,
            (None, None) => true,
            _ => false,
        }
    }

    fn nname(&self, bij: &mut Bijection, a: &NName, b: &NName, session: bool) -> bool {
        match (a, b) {
            (NName::Bound(i), NName::Bound(j)) => i == j,
            (NName::Free(x), NName::Free(y)) => {
                let (na, nb) = if session {
                    (Name::Session(x.clone()), Name::Session(y.clone()))
                } else {
                    (Name::Shared(x.clone()), Name::Shared(y.clone()))
                };
                self.name(bij, na, nb)
            }
            _ => false,
        }
    }

    fn val(&self, bij: &mut Bijection, a: &NVal, b: &NVal) -> bool {
        match (a, b) {
            (NVal::Shared(x), NVal::Shared(y)) => self.nname(bij, x, y, false),
            (NVal::Endpoint(x, p), NVal::Endpoint(y, q)) => p == q && self.nname(bij, x, y, true),
            _ => a == b,
        }
    }

    fn atom(&self, bij: &mut Bijection, a: &NAtom, b: &NAtom) -> bool {
        match (a, b) {
            (NAtom::Val(x), NAtom::Val(y)) => self.val(bij, x, y),
            _ => a == b,
        }
    }

    fn expr(&self, bij: &mut Bijection, a: &NExpr, b: &NExpr) -> bool {
        match (a, b) {
            (NExpr::Atom(x), NExpr::Atom(y)) => self.atom(bij, x, y),
            (NExpr::Op(o, xs), NExpr::Op(p, ys)) => {
                o == p && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.expr(bij, x, y))
            }
            _ => false,
        }
    }

    fn proc(&self, bij: &mut Bijection, a: &NProc, b: &NProc, fuel: u32) -> bool {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        components(a, &mut xs);
        components(b, &mut ys);
        let mut fuel = fuel;
        while xs.len() != ys.len() {
            if fuel == 0 || !(expand(&mut xs) | expand(&mut ys)) {
                return false;
            }
            fuel -= 1;
        }
        self.multiset(bij, &xs, &ys, fuel)
    }

    fn multiset(&self, bij: &mut Bijection, xs: &[NProc], ys: &[NProc], fuel: u32) -> bool {
        let Some((first, rest)) = xs.split_first() else {
            return ys.is_empty();
        };
        if ys.len() == 1 {
            return self.single(bij, first, &ys[0], fuel);
        }
        for (j, y) in ys.iter().enumerate() {
            let mut trial = bij.clone();
            if !self.single(&mut trial, first, y, fuel) {
                continue;
            }
            let mut remaining = ys.to_vec();
            remaining.remove(j);
            if self.multiset(&mut trial, rest, &remaining, fuel) {
                *bij = trial;
                return true;
            }
        }
        false
    }

    fn single(&self, bij: &mut Bijection, a: &NProc, b: &NProc, fuel: u32) -> bool {
        use NProc::*;
        match (a, b) {
            (Rec(x), Rec(y)) => {
                let mut trial = bij.clone();
                if self.proc(&mut trial, x, y, fuel) {
                    *bij = trial;
                    return true;
                }
                fuel > 0 && self.proc(bij, &unfold(x), &unfold(y), fuel - 1)
            }
            (Rec(x), _) => fuel > 0 && self.proc(bij, &unfold(x), b, fuel - 1),
            (_, Rec(y)) => fuel > 0 && self.proc(bij, a, &unfold(y), fuel - 1),
            (Req(c, p), Req(d, q)) | (Acc(c, p), Acc(d, q)) | (Recv(c, p), Recv(d, q)) => {
                self.atom(bij, c, d) && self.proc(bij, p, q, fuel)
            }
            (Send(c, e, p), Send(d, f, q)) => self.atom(bij, c, d) && self.expr(bij, e, f) && self.proc(bij, p, q, fuel),
            (Sel(c, l, p), Sel(d, m, q)) => l == m && self.atom(bij, c, d) && self.proc(bij, p, q, fuel),
            (Branch(c, xs), Branch(d, ys)) => {
                if xs.len() != ys.len() || !self.atom(bij, c, d) {
                    return false;
                }
                let mut xs: Vec<_> = xs.iter().collect();
                let mut ys: Vec<_> = ys.iter().collect();
                xs.sort_by(|a, b| a.0.cmp(&b.0));
                ys.sort_by(|a, b| a.0.cmp(&b.0));
                xs.iter().zip(&ys).all(|(x, y)| x.0 == y.0 && self.proc(bij, &x.1, &y.1, fuel))
            }
            (If(g, p1, p2), If(h, q1, q2)) => {
                self.expr(bij, g, h) && self.proc(bij, p1, q1, fuel) && self.proc(bij, p2, q2, fuel)
            }
            (New(k, p), New(l, q)) => k == l && self.proc(bij, p, q, fuel),
            (PVar(x), PVar(y)) => x == y,
            _ => false,
        }
    }
}

fn components(p: &NProc, out: &mut Vec<NProc>) {
    match p {
        NProc::Par(l, r) => {
            components(l, out);
            components(r, out);
        }
        NProc::Nil => {}
        other => out.push(other.clone()),
    }
}

/// Unfolds every recursion whose unfolding is not a single component.
fn expand(xs: &mut Vec<NProc>) -> bool {
    let mut changed = false;
    let mut out = Vec::with_capacity(xs.len());
    for x in xs.drain(..) {
        if let NProc::Rec(body) = &x {
            let mut parts = Vec::new();
            components(&unfold(body), &mut parts);
            if parts.len() != 1 {
                out.extend(parts);
                changed = true;
                continue;
            }
        }
        out.push(x);
    }
    *xs = out;
    changed
}

/// Top-level restrictions of `p` that are used, and the body under them.
fn open(p: &Process) -> (BTreeSet<Name>, Process) {
    let mut restricted = BTreeSet::new();
    let mut used = BTreeSet::new();
    p.symbols(&mut used);
    let body = extrude(p, &mut restricted, &mut used);
    let free = body.free_channels();
    restricted.retain(|n| n.as_channel().is_some_and(|c| free.contains(&c)));
    (restricted, body)
}

/// Processes equal up to α-renaming, `|` laws, scope extrusion at the top
/// level, garbage restrictions and `rec` unfolding.
pub fn process_congruent(p: &Process, q: &Process) -> bool {
    let (left, p) = open(p);
    let (right, q) = open(q);
    if left.len() != right.len() {
        return false;
    }
    let scope = Scope { left: &left, right: &right };
    scope.proc(&mut Bijection::default(), &to_nameless(&p), &to_nameless(&q), FUEL)
}

/// A configuration prepared for repeated comparisons.
#[derive(Clone, Debug)]
pub struct Canonical {
    restricted: BTreeSet<Name>,
    threads: Vec<(Tag, NProc)>,
    memories: Vec<CanonMemory>,
}

#[derive(Clone, Debug)]
struct CanonMemory {
    rule: Rule,
    consumed: Vec<Tag>,
    produced: Vec<Tag>,
    session: Option<Symbol>,
    stored: Vec<NProc>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Item {
    Thread(usize),
    Memory(usize),
}

impl Canonical {
    pub fn of(m: &Configuration) -> Canonical {
        let mut restricted = m.restricted.clone();
        let mut used = m.symbols();
        let threads = m
            .threads
            .iter()
            .map(|t| {
                let body = extrude(&t.body, &mut restricted, &mut used);
                (t.tag, to_nameless(&body))
            })
            .collect();
        let memories = m
            .memories
            .iter()
            .map(|mem| CanonMemory {
                rule: mem.rule(),
                consumed: mem.consumed(),
                produced: mem.produced(),
                session: match mem {
                    Memory::Action { event: crate::syntax::ActionEvent::Init { session, .. }, .. } => {
                        Some(session.clone())
                    }
                    _ => None,
                },
                stored: mem.stored_processes().iter().map(to_nameless).collect(),
            })
            .collect();
        Canonical { restricted, threads, memories }
    }

    /// Cheap invariant: equal for congruent configurations.
    pub fn signature(&self) -> (usize, usize, Vec<Rule>, Vec<Tag>) {
        let mut rules: Vec<Rule> = self.memories.iter().map(|m| m.rule).collect();
        rules.sort();
        let mut free_tags: Vec<Tag> =
            self.threads.iter().map(|t| t.0).filter(|t| !self.restricted.contains(&Name::Tag(*t))).collect();
        free_tags.sort();
        (self.restricted.len(), self.threads.len(), rules, free_tags)
    }

    pub fn equivalent(&self, other: &Canonical) -> bool {
        if self.threads.len() != other.threads.len()
            || self.memories.len() != other.memories.len()
            || self.restricted.len() != other.restricted.len()
            || self.signature() != other.signature()
        {
            return false;
        }
        let scope = Scope { left: &self.restricted, right: &other.restricted };
        let mut items: Vec<Item> = (0..self.threads.len()).map(Item::Thread).collect();
        items.extend((0..self.memories.len()).map(Item::Memory));
        let mut used_threads = vec![false; other.threads.len()];
        let mut used_mems = vec![false; other.memories.len()];
        let mut bij = Bijection::default();
        if !self.search(other, &scope, &mut items, &mut used_threads, &mut used_mems, &mut bij) {
            return false;
        }
        // Every restriction must have been matched with one on the other side.
        self.restricted.iter().all(|n| bij.fwd.contains_key(n))
    }

    fn candidates(&self, other: &Canonical, scope: &Scope, item: Item, used_t: &[bool], used_m: &[bool], bij: &Bijection) -> Vec<usize> {
        match item {
            Item::Thread(i) => {
                let ta = Name::Tag(self.threads[i].0);
                (0..other.threads.len())
                    .filter(|&j| !used_t[j] && scope.compatible(bij, &ta, &Name::Tag(other.threads[j].0)))
                    .collect()
            }
            Item::Memory(i) => {
                let a = &self.memories[i];
                (0..other.memories.len())
                    .filter(|&j| {
                        let b = &other.memories[j];
                        !used_m[j]
                            && a.rule == b.rule
                            && a.consumed.iter().chain(&a.produced).zip(b.consumed.iter().chain(&b.produced)).all(
                                |(x, y)| scope.compatible(bij, &Name::Tag(*x), &Name::Tag(*y)),
                            )
                    })
                    .collect()
            }
        }
    }

    fn search(
        &self,
        other: &Canonical,
        scope: &Scope,
        items: &mut Vec<Item>,
        used_t: &mut Vec<bool>,
        used_m: &mut Vec<bool>,
        bij: &mut Bijection,
    ) -> bool {
        if items.is_empty() {
            return true;
        }
        let mut best: Option<(usize, Vec<usize>)> = None;
        for (pos, &item) in items.iter().enumerate() {
            let c = self.candidates(other, scope, item, used_t, used_m, bij);
            if c.is_empty() {
                return false;
            }
            if best.as_ref().is_none_or(|(_, b)| c.len() < b.len()) {
                let single = c.len() == 1;
                best = Some((pos, c));
                if single {
                    break;
                }
            }
        }
        let (pos, cands) = best.unwrap();
        let item = items.swap_remove(pos);
        for j in cands {
            let mut trial = bij.clone();
            if !self.match_item(other, scope, &mut trial, item, j) {
                continue;
            }
            let used = match item {
                Item::Thread(_) => &mut used_t[j],
                Item::Memory(_) => &mut used_m[j],
            };
            *used = true;
            if self.search(other, scope, items, used_t, used_m, &mut trial) {
                *bij = trial;
                return true;
            }
            match item {
                Item::Thread(_) => used_t[j] = false,
                Item::Memory(_) => used_m[j] = false,
            }
        }
        items.push(item);
        let last = items.len() - 1;
        items.swap(pos, last);
        false
    }

    fn match_item(&self, other: &Canonical, scope: &Scope, bij: &mut Bijection, item: Item, j: usize) -> bool {
        match item {
            Item::Thread(i) => {
                let (ta, pa) = &self.threads[i];
                let (tb, pb) = &other.threads[j];
                scope.name(bij, Name::Tag(*ta), Name::Tag(*tb)) && scope.proc(bij, pa, pb, FUEL)
            }
            Item::Memory(i) => {
                let a = &self.memories[i];
                let b = &other.memories[j];
                let tags_ok = a
                    .consumed
                    .iter()
                    .chain(&a.produced)
                    .zip(b.consumed.iter().chain(&b.produced))
                    .all(|(x, y)| scope.name(bij, Name::Tag(*x), Name::Tag(*y)));
                if !tags_ok || a.stored.len() != b.stored.len() {
                    return false;
                }
                let session_ok = match (&a.session, &b.session) {
                    (Some(x), Some(y)) => scope.name(bij, Name::Session(x.clone()), Name::Session(y.clone())),
                    (None, None) => true,
                    _ => false,
                };
                session_ok && a.stored.iter().zip(&b.stored).all(|(p, q)| scope.proc(bij, p, q, FUEL))
            }
        }
    }
}

/// Pulls restrictions out of the parallel structure at the top of a thread
/// body, renaming apart when needed.
fn extrude(p: &Process, restricted: &mut BTreeSet<Name>, used: &mut BTreeSet<Symbol>) -> Process {
    match p {
        Process::Par { left, right } => {
            let l = extrude(left, restricted, used);
            let r = extrude(right, restricted, used);
            Process::par(l, r)
        }
        Process::New { chan, body } => {
            let clash = restricted.iter().any(|n| n.as_channel().is_some_and(|c| c.symbol() == chan.symbol()));
            let (chan, body) = if clash {
                let mut avoid = used.clone();
                body.symbols(&mut avoid);
                let fresh = fresh_symbol(chan.symbol(), &avoid);
                used.insert(fresh.clone());
                (chan.with_symbol(fresh.clone()), rename_channel(body, chan, fresh))
            } else {
                (chan.clone(), (**body).clone())
            };
            restricted.insert(chan.into());
            extrude(&body, restricted, used)
        }
        other => other.clone(),
    }
}

/// Equal up to a bijective renaming of restricted tags and channels, and
/// structural congruence of the thread bodies and stored processes.
pub fn alpha_tag_equal(m: &Configuration, n: &Configuration) -> bool {
    Canonical::of(m).equivalent(&Canonical::of(n))
}

/// Structural congruence of configurations. Restricted names are bound, so
/// this coincides with [`alpha_tag_equal`].
pub fn struct_congruent(m: &Configuration, n: &Configuration) -> bool {
    alpha_tag_equal(m, n)
}
