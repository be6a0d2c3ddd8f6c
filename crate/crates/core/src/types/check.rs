//! Type inference for processes and configurations.
//!
//! Endpoint types are inferred bottom-up from the process, then checked
//! against the declared shared channel types at `req`/`acc` binders and
//! against each other at session restrictions. Payload sorts of received
//! variables start as metavariables and are fixed by unification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::syntax::{SessionType, Sort, TypeEnv};
use crate::config::{forgetful_map, Configuration};
use crate::syntax::{ActionEvent, Atom, Endpoint, Expr, Memory, MemoryId, Name, Op, Polarity, Process, Symbol, Tag, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TypeErrorKind {
    LinearityViolation,
    DualityMismatch,
    LabelMissing,
    SortMismatch,
    Unbound,
    CompositionUndefined,
}

impl fmt::Display for TypeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TypeErrorKind::LinearityViolation => "linearity-violation",
            TypeErrorKind::DualityMismatch => "duality-mismatch",
            TypeErrorKind::LabelMissing => "label-missing",
            TypeErrorKind::SortMismatch => "sort-mismatch",
            TypeErrorKind::Unbound => "unbound",
            TypeErrorKind::CompositionUndefined => "composition-undefined",
        })
    }
}

/// Where in a configuration an error was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum Location {
    Thread(Tag),
    Memory(MemoryId),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Thread(t) => write!(f, "thread {t}"),
            Location::Memory(m) => write!(f, "memory {m}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub location: Option<Location>,
    pub message: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)?;
        if let Some(l) = &self.location {
            write!(f, " (in {l})")?;
        }
        Ok(())
    }
}

fn err(kind: TypeErrorKind, message: impl Into<String>) -> TypeError {
    TypeError { kind, location: None, message: message.into() }
}

/// A linear typing: session types of free endpoints.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Typing {
    pub delta: BTreeMap<Endpoint, SessionType>,
}

impl Typing {
    pub fn empty() -> Self {
        Typing::default()
    }

    pub fn singleton(e: Endpoint, t: SessionType) -> Self {
        Typing { delta: BTreeMap::from([(e, t)]) }
    }

    /// Every endpoint has reached `end`.
    pub fn is_completed(&self) -> bool {
        self.delta.values().all(SessionType::is_end)
    }

    /// `Δ1 · Δ2`, defined only on disjoint domains.
    pub fn compose(&self, other: &Typing) -> Result<Typing, TypeError> {
        let mut delta = self.delta.clone();
        for (e, t) in &other.delta {
            if delta.insert(e.clone(), t.clone()).is_some() {
                return Err(err(
                    TypeErrorKind::CompositionUndefined,
                    format!("endpoint `{}` is claimed by both typings", endpoint_name(e)),
                ));
            }
        }
        Ok(Typing { delta })
    }
}

fn endpoint_name(e: &Endpoint) -> String {
    match e.polarity {
        Polarity::Plus => e.session.to_string(),
        Polarity::Minus => format!("~{}", e.session),
    }
}

impl fmt::Display for Typing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.delta.is_empty() {
            return f.write_str("{}");
        }
        for (i, (e, t)) in self.delta.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}: {t}", endpoint_name(e))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum ConfigVerdict {
    WellTyped { typing: Typing },
    IllTyped { error: TypeError },
    OutOfClass { reason: String },
}

impl ConfigVerdict {
    pub fn is_well_typed(&self) -> bool {
        matches!(self, ConfigVerdict::WellTyped { .. })
    }
}

// ---- internal representation ---------------------------------------------

/// Metavariable sorts are data sorts whose name starts with `?`, which the
/// parser never produces.
const META: char = '?';
/// Type of an endpoint that was delegated away; compatible with anything.
const ANY: &str = "?";

fn any() -> SessionType {
    SessionType::Var { name: crate::syntax::sym(ANY) }
}

fn is_any(t: &SessionType) -> bool {
    matches!(t, SessionType::Var { name } if &**name == ANY)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Var(Symbol),
    End(Endpoint),
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Key::Var(x) => f.write_str(x),
            Key::End(e) => f.write_str(&endpoint_name(e)),
        }
    }
}

/// Inferred typing. Endpoints absent from `map` are at `end`, or at the
/// recursion variable `default` when the process loops back.
#[derive(Clone, Debug, Default)]
struct Delta {
    map: BTreeMap<Key, SessionType>,
    default: Option<Symbol>,
}

impl Delta {
    fn fallback(&self) -> SessionType {
        match &self.default {
            Some(x) => SessionType::Var { name: x.clone() },
            None => SessionType::End,
        }
    }

    fn get(&self, k: &Key) -> SessionType {
        self.map.get(k).cloned().unwrap_or_else(|| self.fallback())
    }

    fn take(&mut self, k: &Key) -> SessionType {
        self.map.remove(k).unwrap_or_else(|| self.fallback())
    }
}

#[derive(Clone)]
enum Binding {
    Endpoint,
    Value(Sort),
    LocalShared(usize),
}

#[derive(Default)]
struct Ctx {
    vars: Vec<(Symbol, Binding)>,
    pvars: Vec<Symbol>,
}

impl Ctx {
    fn lookup(&self, x: &Symbol) -> Option<&Binding> {
        self.vars.iter().rev().find(|(y, _)| y == x).map(|(_, b)| b)
    }

    fn shared(&self, a: &Symbol) -> Option<usize> {
        match self.lookup(a) {
            Some(Binding::LocalShared(i)) => Some(*i),
            _ => None,
        }
    }
}

fn mentions(t: &SessionType, x: &Symbol) -> bool {
    match t {
        SessionType::Send { sort, cont } | SessionType::Recv { sort, cont } => {
            sort_mentions(sort, x) || mentions(cont, x)
        }
        SessionType::Select { arms } | SessionType::Branch { arms } => arms.iter().any(|(_, s)| mentions(s, x)),
        SessionType::End => false,
        SessionType::Rec { var, body } => var != x && mentions(body, x),
        SessionType::Var { name } => name == x,
    }
}

fn sort_mentions(s: &Sort, x: &Symbol) -> bool {
    match s {
        Sort::Shared { session } | Sort::Session { session } => mentions(session, x),
        _ => false,
    }
}

struct Checker<'e> {
    env: &'e TypeEnv,
    metas: Vec<Option<Sort>>,
    /// Local shared channel uses: (is request side, inferred type).
    usages: Vec<Vec<(bool, SessionType)>>,
    delegation: bool,
}

impl<'e> Checker<'e> {
    fn new(env: &'e TypeEnv) -> Self {
        Checker { env, metas: Vec::new(), usages: Vec::new(), delegation: false }
    }

    fn fresh_meta(&mut self) -> Sort {
        self.metas.push(None);
        Sort::Data { name: crate::syntax::sym(&format!("{META}{}", self.metas.len() - 1)) }
    }

    fn meta_index(s: &Sort) -> Option<usize> {
        match s {
            Sort::Data { name } if name.starts_with(META) => name[1..].parse().ok(),
            _ => None,
        }
    }

    fn resolve(&self, s: &Sort) -> Sort {
        let mut s = s.clone();
        while let Some(i) = Self::meta_index(&s) {
            match &self.metas[i] {
                Some(next) => s = next.clone(),
                None => break,
            }
        }
        s
    }

    /// Replaces data sort names by their declared base sorts.
    fn declared(&self, t: &SessionType) -> Result<SessionType, TypeError> {
        Ok(match t {
            SessionType::Send { sort, cont } => SessionType::send(self.declared_sort(sort)?, self.declared(cont)?),
            SessionType::Recv { sort, cont } => SessionType::recv(self.declared_sort(sort)?, self.declared(cont)?),
            SessionType::Select { arms } => SessionType::Select { arms: self.declared_arms(arms)? },
            SessionType::Branch { arms } => SessionType::Branch { arms: self.declared_arms(arms)? },
            SessionType::Rec { var, body } => SessionType::Rec { var: var.clone(), body: Box::new(self.declared(body)?) },
            SessionType::End | SessionType::Var { .. } => t.clone(),
        })
    }

    fn declared_arms(&self, arms: &[(Symbol, SessionType)]) -> Result<Vec<(Symbol, SessionType)>, TypeError> {
        arms.iter().map(|(l, s)| Ok((l.clone(), self.declared(s)?))).collect()
    }

    fn declared_sort(&self, s: &Sort) -> Result<Sort, TypeError> {
        Ok(match s {
            Sort::Data { name } => match self.env.sorts.get(name) {
                Some(base) => base.clone(),
                None => return Err(err(TypeErrorKind::Unbound, format!("data sort `{name}` is not declared"))),
            },
            Sort::Shared { session } => Sort::Shared { session: Box::new(self.declared(session)?) },
            Sort::Session { session } => Sort::Session { session: Box::new(self.declared(session)?) },
            other => other.clone(),
        })
    }

    fn shared_type(&self, a: &Symbol) -> Result<SessionType, TypeError> {
        match self.env.channels.get(a) {
            Some(t) => self.declared(t),
            None => Err(err(TypeErrorKind::Unbound, format!("shared channel `{a}` has no declared type"))),
        }
    }

    /// Resolves metavariables; unconstrained ones default to `nat`.
    fn zonk(&self, t: &SessionType) -> SessionType {
        match t {
            SessionType::Send { sort, cont } => SessionType::send(self.zonk_sort(sort), self.zonk(cont)),
            SessionType::Recv { sort, cont } => SessionType::recv(self.zonk_sort(sort), self.zonk(cont)),
            SessionType::Select { arms } => {
                SessionType::Select { arms: arms.iter().map(|(l, s)| (l.clone(), self.zonk(s))).collect() }
            }
            SessionType::Branch { arms } => {
                SessionType::Branch { arms: arms.iter().map(|(l, s)| (l.clone(), self.zonk(s))).collect() }
            }
            SessionType::Rec { var, body } => SessionType::Rec { var: var.clone(), body: Box::new(self.zonk(body)) },
            SessionType::End | SessionType::Var { .. } => t.clone(),
        }
    }

    fn zonk_sort(&self, s: &Sort) -> Sort {
        match self.resolve(s) {
            s if Self::meta_index(&s).is_some() => Sort::Nat,
            Sort::Shared { session } => Sort::Shared { session: Box::new(self.zonk(&session)) },
            Sort::Session { session } => Sort::Session { session: Box::new(self.zonk(&session)) },
            other => other,
        }
    }

    // ---- relations on types ----------------------------------------------

    fn unify(&mut self, a: &Sort, b: &Sort) -> Result<(), TypeError> {
        let (a, b) = (self.resolve(a), self.resolve(b));
        match (Self::meta_index(&a), Self::meta_index(&b)) {
            (Some(i), Some(j)) if i == j => return Ok(()),
            (Some(i), _) => {
                self.metas[i] = Some(b);
                return Ok(());
            }
            (_, Some(j)) => {
                self.metas[j] = Some(a);
                return Ok(());
            }
            _ => {}
        }
        match (&a, &b) {
            (Sort::Bool, Sort::Bool) | (Sort::Nat, Sort::Nat) => Ok(()),
            (Sort::Shared { session: s }, Sort::Shared { session: t }) => self.equal(s, t),
            (Sort::Session { session: s }, Sort::Session { session: t }) => self.equal(s, t),
            _ => Err(err(
                TypeErrorKind::SortMismatch,
                format!("expected sort `{}`, found `{}`", self.zonk_sort(&b), self.zonk_sort(&a)),
            )),
        }
    }

    fn equal(&mut self, a: &SessionType, b: &SessionType) -> Result<(), TypeError> {
        self.relate(a, b, Relation::Equal, &mut Vec::new())
    }

    fn subtype(&mut self, a: &SessionType, b: &SessionType) -> Result<(), TypeError> {
        self.relate(a, b, Relation::Sub, &mut Vec::new())
    }

    fn dual_compatible(&mut self, a: &SessionType, b: &SessionType) -> Result<(), TypeError> {
        self.relate(a, &b.dual(), Relation::Sub, &mut Vec::new())
    }

    /// Coinductive comparison up to unfolding. Under `Sub`, the left type may
    /// select fewer labels and offer more branches than the right one.
    fn relate(
        &mut self,
        a: &SessionType,
        b: &SessionType,
        rel: Relation,
        seen: &mut Vec<(SessionType, SessionType)>,
    ) -> Result<(), TypeError> {
        if is_any(a) || is_any(b) {
            return Ok(());
        }
        if seen.iter().any(|(x, y)| x == a && y == b) {
            return Ok(());
        }
        seen.push((a.clone(), b.clone()));
        let (ha, hb) = (a.head(), b.head());
        let mismatch = |c: &Checker| {
            err(
                TypeErrorKind::DualityMismatch,
                format!("type `{}` does not match `{}`", c.zonk(&ha), c.zonk(&hb)),
            )
        };
        match (&ha, &hb) {
            (SessionType::End, SessionType::End) => Ok(()),
            (SessionType::Var { name: x }, SessionType::Var { name: y }) if x == y => Ok(()),
            (SessionType::Send { sort: s, cont: c }, SessionType::Send { sort: t, cont: d })
            | (SessionType::Recv { sort: s, cont: c }, SessionType::Recv { sort: t, cont: d }) => {
                self.unify(s, t)?;
                self.relate(c, d, rel, seen)
            }
            (SessionType::Select { arms: xs }, SessionType::Select { arms: ys }) => {
                self.relate_arms(xs, ys, rel, seen, "select")
            }
            (SessionType::Branch { arms: xs }, SessionType::Branch { arms: ys }) => {
                self.relate_arms(ys, xs, rel, seen, "branch")
            }
            _ => Err(mismatch(self)),
        }
    }

    /// Every label of `small` must occur in `big` with related continuations;
    /// under `Equal` the label sets must coincide.
    fn relate_arms(
        &mut self,
        small: &[(Symbol, SessionType)],
        big: &[(Symbol, SessionType)],
        rel: Relation,
        seen: &mut Vec<(SessionType, SessionType)>,
        what: &str,
    ) -> Result<(), TypeError> {
        if rel == Relation::Equal && small.len() != big.len() {
            return Err(err(TypeErrorKind::LabelMissing, format!("{what} label sets differ")));
        }
        for (l, s) in small {
            let Some((_, t)) = big.iter().find(|(m, _)| m == l) else {
                return Err(err(TypeErrorKind::LabelMissing, format!("label `{l}` is not offered")));
            };
            if what == "branch" {
                // Continuations keep the direction of the enclosing relation.
                self.relate(t, s, rel, seen)?;
            } else {
                self.relate(s, t, rel, seen)?;
            }
        }
        Ok(())
    }

    /// Least common type of two conditional branches.
    fn merge(&mut self, a: &SessionType, b: &SessionType, key: &Key) -> Result<SessionType, TypeError> {
        if a == b || is_any(b) {
            return Ok(a.clone());
        }
        if is_any(a) {
            return Ok(b.clone());
        }
        let clash = |c: &Checker| {
            err(
                TypeErrorKind::DualityMismatch,
                format!("branches use `{key}` at incompatible types `{}` and `{}`", c.zonk(a), c.zonk(b)),
            )
        };
        match (a, b) {
            (SessionType::Send { sort: s, cont: c }, SessionType::Send { sort: t, cont: d }) => {
                self.unify(s, t)?;
                Ok(SessionType::send(s.clone(), self.merge(c, d, key)?))
            }
            (SessionType::Recv { sort: s, cont: c }, SessionType::Recv { sort: t, cont: d }) => {
                self.unify(s, t)?;
                Ok(SessionType::recv(s.clone(), self.merge(c, d, key)?))
            }
            (SessionType::Select { arms: xs }, SessionType::Select { arms: ys }) => {
                let mut arms = Vec::new();
                for (l, s) in xs {
                    match ys.iter().find(|(m, _)| m == l) {
                        Some((_, t)) => arms.push((l.clone(), self.merge(s, t, key)?)),
                        None => arms.push((l.clone(), s.clone())),
                    }
                }
                for (l, t) in ys {
                    if !xs.iter().any(|(m, _)| m == l) {
                        arms.push((l.clone(), t.clone()));
                    }
                }
                Ok(SessionType::Select { arms })
            }
            (SessionType::Branch { arms: xs }, SessionType::Branch { arms: ys }) => {
                let mut arms = Vec::new();
                for (l, s) in xs {
                    if let Some((_, t)) = ys.iter().find(|(m, _)| m == l) {
                        arms.push((l.clone(), self.merge(s, t, key)?));
                    }
                }
                if arms.is_empty() {
                    return Err(err(TypeErrorKind::LabelMissing, format!("branches on `{key}` share no label")));
                }
                Ok(SessionType::Branch { arms })
            }
            _ if matches!(a, SessionType::Rec { .. }) || matches!(b, SessionType::Rec { .. }) => {
                self.equal(a, b).map_err(|_| clash(self))?;
                Ok(a.clone())
            }
            _ => Err(clash(self)),
        }
    }

    fn merge_delta(&mut self, a: Delta, b: Delta) -> Result<Delta, TypeError> {
        let keys: BTreeSet<Key> = a.map.keys().chain(b.map.keys()).cloned().collect();
        let mut map = BTreeMap::new();
        for k in keys {
            let t = self.merge(&a.get(&k), &b.get(&k), &k)?;
            map.insert(k, t);
        }
        let default = if a.default == b.default { a.default } else { None };
        Ok(Delta { map, default })
    }

    // ---- expressions -------------------------------------------------------

    fn expr_sort(&mut self, e: &Expr, ctx: &Ctx) -> Result<Sort, TypeError> {
        match e {
            Expr::Val { value } => self.value_sort(value, ctx),
            Expr::Var { name } => match ctx.lookup(name) {
                Some(Binding::Value(s)) => Ok(s.clone()),
                Some(Binding::Endpoint) => Err(err(
                    TypeErrorKind::SortMismatch,
                    format!("session endpoint `{name}` cannot be used in an expression"),
                )),
                Some(Binding::LocalShared(_)) => Err(err(
                    TypeErrorKind::SortMismatch,
                    format!("restricted shared channel `{name}` cannot be used as a value"),
                )),
                None => Err(err(TypeErrorKind::Unbound, format!("variable `{name}` is not bound"))),
            },
            Expr::Op { op, args } => {
                let arg = |c: &mut Self, i: usize, s: Sort| -> Result<(), TypeError> {
                    let got = c.expr_sort(&args[i], ctx)?;
                    c.unify(&got, &s)
                };
                match op {
                    Op::Add | Op::Sub | Op::Mul => {
                        arg(self, 0, Sort::Nat)?;
                        arg(self, 1, Sort::Nat)?;
                        Ok(Sort::Nat)
                    }
                    Op::Le | Op::Lt => {
                        arg(self, 0, Sort::Nat)?;
                        arg(self, 1, Sort::Nat)?;
                        Ok(Sort::Bool)
                    }
                    Op::Eq => {
                        let l = self.expr_sort(&args[0], ctx)?;
                        let r = self.expr_sort(&args[1], ctx)?;
                        self.unify(&l, &r)?;
                        Ok(Sort::Bool)
                    }
                    Op::Not => {
                        arg(self, 0, Sort::Bool)?;
                        Ok(Sort::Bool)
                    }
                    Op::And | Op::Or => {
                        arg(self, 0, Sort::Bool)?;
                        arg(self, 1, Sort::Bool)?;
                        Ok(Sort::Bool)
                    }
                }
            }
        }
    }

    fn value_sort(&mut self, v: &Value, ctx: &Ctx) -> Result<Sort, TypeError> {
        match v {
            Value::Bool(_) => Ok(Sort::Bool),
            Value::Nat(_) => Ok(Sort::Nat),
            Value::Shared(a) if ctx.shared(a).is_some() => Err(err(
                TypeErrorKind::SortMismatch,
                format!("restricted shared channel `{a}` cannot be used as a value"),
            )),
            Value::Shared(a) => Ok(Sort::Shared { session: Box::new(self.shared_type(a)?) }),
            Value::Endpoint(e) => Err(err(
                TypeErrorKind::SortMismatch,
                format!("session endpoint `{}` cannot be used in an expression", endpoint_name(e)),
            )),
        }
    }

    // ---- processes ---------------------------------------------------------

    fn subject(&mut self, a: &Atom, ctx: &Ctx) -> Result<Key, TypeError> {
        match a {
            Atom::Var(x) => match ctx.lookup(x) {
                Some(Binding::Endpoint) => Ok(Key::Var(x.clone())),
                // A received value used as a session subject is a delegated endpoint.
                Some(Binding::Value(_)) => {
                    self.delegation = true;
                    Ok(Key::Var(x.clone()))
                }
                Some(Binding::LocalShared(_)) => Err(err(
                    TypeErrorKind::SortMismatch,
                    format!("shared channel `{x}` used as a session endpoint"),
                )),
                None => Err(err(TypeErrorKind::Unbound, format!("variable `{x}` is not bound"))),
            },
            Atom::Val(Value::Endpoint(e)) => Ok(Key::End(e.clone())),
            Atom::Val(v) => Err(err(TypeErrorKind::SortMismatch, format!("value `{v:?}` used as a session endpoint"))),
        }
    }

    /// Key of a payload that is itself a session endpoint, if any.
    fn delegated_payload(&self, e: &Expr, ctx: &Ctx) -> Option<Key> {
        match e {
            Expr::Val { value: Value::Endpoint(ep) } => Some(Key::End(ep.clone())),
            Expr::Var { name } if matches!(ctx.lookup(name), Some(Binding::Endpoint)) => Some(Key::Var(name.clone())),
            _ => None,
        }
    }

    fn open_session(&mut self, chan: &Atom, t: &SessionType, request: bool, ctx: &Ctx) -> Result<(), TypeError> {
        match chan {
            Atom::Val(Value::Shared(a)) => {
                if let Some(i) = ctx.shared(a) {
                    self.usages[i].push((request, t.clone()));
                    return Ok(());
                }
                let declared = self.shared_type(a)?;
                let expected = if request { declared.dual() } else { declared };
                self.subtype(t, &expected).map_err(|e| TypeError {
                    message: format!("session on `{a}`: {}", e.message),
                    ..e
                })
            }
            Atom::Var(u) => match ctx.lookup(u).cloned() {
                Some(Binding::Value(s)) => {
                    let accepter_side = if request { t.dual() } else { t.clone() };
                    self.unify(&s, &Sort::Shared { session: Box::new(accepter_side) })
                }
                Some(Binding::LocalShared(i)) => {
                    self.usages[i].push((request, t.clone()));
                    Ok(())
                }
                Some(Binding::Endpoint) => Err(err(
                    TypeErrorKind::SortMismatch,
                    format!("session endpoint `{u}` used as a shared channel"),
                )),
                None => Err(err(TypeErrorKind::Unbound, format!("variable `{u}` is not bound"))),
            },
            Atom::Val(v) => Err(err(TypeErrorKind::SortMismatch, format!("value `{v:?}` used as a shared channel"))),
        }
    }

    fn bind<T>(&mut self, ctx: &mut Ctx, x: &Symbol, b: Binding, f: impl FnOnce(&mut Self, &mut Ctx) -> T) -> T {
        ctx.vars.push((x.clone(), b));
        let r = f(self, ctx);
        ctx.vars.pop();
        r
    }

    fn infer(&mut self, p: &Process, ctx: &mut Ctx) -> Result<Delta, TypeError> {
        match p {
            Process::Request { chan, var, body } | Process::Accept { chan, var, body } => {
                let request = matches!(p, Process::Request { .. });
                let mut d = self.bind(ctx, var, Binding::Endpoint, |c, ctx| c.infer(body, ctx))?;
                let t = d.take(&Key::Var(var.clone()));
                self.open_session(chan, &t, request, ctx)?;
                Ok(d)
            }
            Process::Send { chan, payload, body } => {
                let k = self.subject(chan, ctx)?;
                let mut d = self.infer(body, ctx)?;
                let sort = match self.delegated_payload(payload, ctx) {
                    Some(kp) => {
                        if kp == k || d.map.contains_key(&kp) {
                            return Err(err(
                                TypeErrorKind::LinearityViolation,
                                format!("endpoint `{kp}` is used after being sent"),
                            ));
                        }
                        self.delegation = true;
                        d.map.insert(kp, any());
                        Sort::Session { session: Box::new(any()) }
                    }
                    None => self.expr_sort(payload, ctx)?,
                };
                let rest = d.take(&k);
                d.map.insert(k, SessionType::send(sort, rest));
                Ok(d)
            }
            Process::Receive { chan, var, body } => {
                let k = self.subject(chan, ctx)?;
                let sort = self.fresh_meta();
                let mut d = self.bind(ctx, var, Binding::Value(sort.clone()), |c, ctx| c.infer(body, ctx))?;
                if let Some(t) = d.map.remove(&Key::Var(var.clone())) {
                    self.unify(&sort, &Sort::Session { session: Box::new(t) })?;
                }
                let rest = d.take(&k);
                d.map.insert(k, SessionType::recv(sort, rest));
                Ok(d)
            }
            Process::Select { chan, label, body } => {
                let k = self.subject(chan, ctx)?;
                let mut d = self.infer(body, ctx)?;
                let rest = d.take(&k);
                d.map.insert(k, SessionType::Select { arms: vec![(label.clone(), rest)] });
                Ok(d)
            }
            Process::Branch { chan, arms } => {
                let k = self.subject(chan, ctx)?;
                let mut merged: Option<Delta> = None;
                let mut tarms = Vec::new();
                for arm in arms {
                    let mut d = self.infer(&arm.body, ctx)?;
                    tarms.push((arm.label.clone(), d.take(&k)));
                    merged = Some(match merged {
                        None => d,
                        Some(m) => self.merge_delta(m, d)?,
                    });
                }
                let mut d = merged.unwrap_or_default();
                d.map.insert(k, SessionType::Branch { arms: tarms });
                Ok(d)
            }
            Process::If { guard, then_branch, else_branch } => {
                let g = self.expr_sort(guard, ctx)?;
                self.unify(&g, &Sort::Bool)?;
                let a = self.infer(then_branch, ctx)?;
                let b = self.infer(else_branch, ctx)?;
                self.merge_delta(a, b)
            }
            Process::Par { left, right } => {
                let a = self.infer(left, ctx)?;
                let b = self.infer(right, ctx)?;
                let mut map = a.map;
                for (k, t) in b.map {
                    if map.contains_key(&k) {
                        return Err(err(
                            TypeErrorKind::LinearityViolation,
                            format!("endpoint `{k}` is used by both sides of a parallel composition"),
                        ));
                    }
                    map.insert(k, t);
                }
                Ok(Delta { map, default: a.default.or(b.default) })
            }
            Process::New { chan: crate::syntax::Channel::Session(s), body } => {
                let mut d = self.infer(body, ctx)?;
                let plus = d.take(&Key::End(Endpoint { session: s.clone(), polarity: Polarity::Plus }));
                let minus = d.take(&Key::End(Endpoint { session: s.clone(), polarity: Polarity::Minus }));
                self.dual_compatible(&plus, &minus).map_err(|e| TypeError {
                    message: format!("endpoints of session `{s}` are not dual: {}", e.message),
                    ..e
                })?;
                Ok(d)
            }
            Process::New { chan: crate::syntax::Channel::Shared(a), body } => {
                self.usages.push(Vec::new());
                let idx = self.usages.len() - 1;
                let d = self.bind(ctx, a, Binding::LocalShared(idx), |c, ctx| c.infer(body, ctx));
                let uses = std::mem::take(&mut self.usages[idx]);
                self.usages.pop();
                let d = d?;
                for (_, t) in uses.iter().filter(|u| u.0) {
                    for (_, u) in uses.iter().filter(|u| !u.0) {
                        self.dual_compatible(t, u).map_err(|e| TypeError {
                            message: format!("sessions on restricted channel `{a}` disagree: {}", e.message),
                            ..e
                        })?;
                    }
                }
                Ok(d)
            }
            Process::Var { name } => {
                if ctx.pvars.contains(name) {
                    Ok(Delta { map: BTreeMap::new(), default: Some(name.clone()) })
                } else {
                    Err(err(TypeErrorKind::Unbound, format!("process variable `{name}` is not bound")))
                }
            }
            Process::Rec { var, body } => {
                ctx.pvars.push(var.clone());
                let d = self.infer(body, ctx);
                ctx.pvars.pop();
                let d = d?;
                let map = d
                    .map
                    .into_iter()
                    .map(|(k, t)| {
                        let t = if mentions(&t, var) { SessionType::Rec { var: var.clone(), body: Box::new(t) } } else { t };
                        (k, t)
                    })
                    .collect();
                let default = d.default.filter(|x| x != var);
                Ok(Delta { map, default })
            }
            Process::Nil => Ok(Delta::default()),
        }
    }

    fn closed_typing(&self, d: Delta) -> Result<Typing, TypeError> {
        if let Some(x) = d.default {
            return Err(err(TypeErrorKind::Unbound, format!("process variable `{x}` is not bound")));
        }
        let mut delta = BTreeMap::new();
        for (k, t) in d.map {
            match k {
                Key::End(e) => {
                    delta.insert(e, self.zonk(&t));
                }
                Key::Var(x) => return Err(err(TypeErrorKind::Unbound, format!("variable `{x}` is not bound"))),
            }
        }
        Ok(Typing { delta })
    }

    fn process(&mut self, p: &Process) -> Result<Delta, TypeError> {
        let d = self.infer(p, &mut Ctx::default())?;
        if let Some(x) = &d.default {
            return Err(err(TypeErrorKind::Unbound, format!("process variable `{x}` is not bound")));
        }
        if let Some(Key::Var(x)) = d.map.keys().find(|k| matches!(k, Key::Var(_))) {
            return Err(err(TypeErrorKind::Unbound, format!("variable `{x}` is not bound")));
        }
        Ok(d)
    }

    /// Checks a stored `init` pair against the declared type of its channel.
    fn init_memory(&mut self, event: &ActionEvent) -> Result<(), TypeError> {
        let ActionEvent::Init { chan, req_var, acc_var, requester, accepter, .. } = event else {
            return Ok(());
        };
        let declared = self.shared_type(chan)?;
        for (var, body, expected) in [(req_var, requester, declared.dual()), (acc_var, accepter, declared.clone())] {
            let mut ctx = Ctx::default();
            let mut d = self.bind(&mut ctx, var, Binding::Endpoint, |c, ctx| c.infer(body, ctx))?;
            let t = d.take(&Key::Var(var.clone()));
            self.subtype(&t, &expected).map_err(|e| TypeError {
                message: format!("session on `{chan}`: {}", e.message),
                ..e
            })?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Relation {
    Equal,
    Sub,
}

/// Infers the typing of `p`. Shared channels take their types from `env`.
pub fn typecheck_process(p: &Process, env: &TypeEnv) -> Result<Typing, TypeError> {
    let mut c = Checker::new(env);
    let d = c.process(p)?;
    c.closed_typing(d)
}

/// Types a configuration in the restricted class: threads are typed,
/// `init` memories are checked against the declared shared types, and
/// `com`/`sel` memories of sessions without an `init` memory contribute
/// their stored pair. All contributions are composed with `·` and dual
/// endpoints are closed at session restrictions.
pub fn typecheck_config(m: &Configuration, env: &TypeEnv) -> ConfigVerdict {
    if m.memories.is_empty() {
        return match typecheck_process(&forgetful_map(m), env) {
            Ok(typing) => ConfigVerdict::WellTyped { typing },
            Err(error) => ConfigVerdict::IllTyped { error },
        };
    }
    let mut c = Checker::new(env);
    let typing = match config_typing(&mut c, m) {
        Ok(t) => t,
        Err(error) => return ConfigVerdict::IllTyped { error },
    };
    match out_of_class(&c, m) {
        Some(reason) => ConfigVerdict::OutOfClass { reason },
        None => ConfigVerdict::WellTyped { typing },
    }
}

fn anchored_sessions(m: &Configuration) -> BTreeSet<Symbol> {
    m.memories
        .iter()
        .filter_map(|mem| match mem {
            Memory::Action { event: ActionEvent::Init { session, .. }, .. } => Some(session.clone()),
            _ => None,
        })
        .collect()
}

fn config_typing(c: &mut Checker, m: &Configuration) -> Result<Typing, TypeError> {
    let anchored = anchored_sessions(m);
    let mut owners: BTreeMap<Key, Location> = BTreeMap::new();
    let mut total = Delta::default();
    let mut add = |total: &mut Delta, d: Delta, at: Location| -> Result<(), TypeError> {
        for (k, t) in d.map {
            if let Some(prev) = owners.get(&k) {
                return Err(TypeError {
                    kind: TypeErrorKind::CompositionUndefined,
                    location: Some(at),
                    message: format!("endpoint `{k}` is claimed by both {prev} and {at}"),
                });
            }
            owners.insert(k.clone(), at);
            total.map.insert(k, t);
        }
        Ok(())
    };
    for t in &m.threads {
        let at = Location::Thread(t.tag);
        let d = c.process(&t.body).map_err(|e| TypeError { location: Some(at), ..e })?;
        add(&mut total, d, at)?;
    }
    for mem in &m.memories {
        let at = Location::Memory(mem.id());
        let located = |e: TypeError| TypeError { location: Some(at), ..e };
        match mem {
            Memory::Action { event: event @ ActionEvent::Init { .. }, .. } => c.init_memory(event).map_err(located)?,
            Memory::Action { event, .. } if !mem.session().is_some_and(|s| anchored.contains(s)) => {
                let (a, b) = event.pre_state();
                let d = c.process(&Process::par(a, b)).map_err(located)?;
                add(&mut total, d, at)?;
            }
            _ => {}
        }
    }
    for n in &m.restricted {
        if let Name::Session(s) = n {
            let plus = total.take(&Key::End(Endpoint { session: s.clone(), polarity: Polarity::Plus }));
            let minus = total.take(&Key::End(Endpoint { session: s.clone(), polarity: Polarity::Minus }));
            c.dual_compatible(&plus, &minus).map_err(|e| TypeError {
                message: format!("endpoints of session `{s}` are not dual: {}", e.message),
                ..e
            })?;
        }
    }
    c.closed_typing(total)
}

/// Reasons a memory-carrying configuration falls outside the restricted class.
fn out_of_class(c: &Checker, m: &Configuration) -> Option<String> {
    if c.delegation {
        return Some("the configuration delegates session endpoints".into());
    }
    let anchored = anchored_sessions(m);
    let mut sessions: BTreeSet<Symbol> = m
        .restricted
        .iter()
        .filter_map(|n| match n {
            Name::Session(s) => Some(s.clone()),
            _ => None,
        })
        .collect();
    for t in &m.threads {
        sessions.extend(t.body.free_endpoints().into_iter().map(|e| e.session));
    }
    for mem in &m.memories {
        for p in mem.stored_processes() {
            sessions.extend(p.free_endpoints().into_iter().map(|e| e.session));
        }
    }
    if let Some(s) = sessions.iter().find(|s| !anchored.contains(*s)) {
        return Some(format!("session `{s}` was opened before the recorded history"));
    }
    // Positions that were top-level parallel components of the origin.
    let produced: BTreeSet<Tag> = m.memories.iter().flat_map(Memory::produced).collect();
    let mut top: BTreeSet<Tag> =
        m.threads.iter().map(|t| t.tag).chain(m.memories.iter().flat_map(Memory::consumed)).filter(|t| !produced.contains(t)).collect();
    loop {
        let before = top.len();
        for mem in &m.memories {
            if let Memory::Fork { tag, left, right } = mem {
                if top.contains(tag) {
                    top.insert(*left);
                    top.insert(*right);
                }
            }
        }
        if top.len() == before {
            break;
        }
    }
    for mem in &m.memories {
        if let Memory::Choice { tag, .. } = mem {
            if top.contains(tag) {
                return Some(format!("thread {tag} started with a top-level conditional"));
            }
        }
    }
    for t in &m.threads {
        if top.contains(&t.tag) && matches!(t.body, Process::If { .. }) {
            return Some(format!("thread {} is a top-level conditional", t.tag));
        }
    }
    None
}

/// Types every thread and every memory's stored pair in isolation, without
/// composing them. This is the approach that fails to reject duplicated
/// endpoints across memories and threads.
pub fn naive_memory_check(m: &Configuration, env: &TypeEnv) -> Result<(), TypeError> {
    for t in &m.threads {
        typecheck_process(&t.body, env).map_err(|e| TypeError { location: Some(Location::Thread(t.tag)), ..e })?;
    }
    for mem in &m.memories {
        let stored = Process::par_all(mem.stored_processes());
        typecheck_process(&stored, env).map_err(|e| TypeError { location: Some(Location::Memory(mem.id())), ..e })?;
    }
    Ok(())
}
