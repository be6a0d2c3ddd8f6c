//! Nameless (de Bruijn) representation of processes.
//!
//! Every binder (term variable, restricted channel, process variable) pushes
//! one entry on a single index space. Free names stay symbolic, so two
//! processes are α-equivalent exactly when their nameless forms are equal.

use crate::syntax::{Atom, Channel, Expr, Op, Polarity, Process, Symbol, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NName {
    Bound(usize),
    Free(Symbol),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NVal {
    Bool(bool),
    Nat(u64),
    Shared(NName),
    Endpoint(NName, Polarity),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NAtom {
    Bound(usize),
    Free(Symbol),
    Val(NVal),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NExpr {
    Atom(NAtom),
    Op(Op, Vec<NExpr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChanKind {
    Shared,
    Session,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NProc {
    Req(NAtom, Box<NProc>),
    Acc(NAtom, Box<NProc>),
    Send(NAtom, NExpr, Box<NProc>),
    Recv(NAtom, Box<NProc>),
    Sel(NAtom, Symbol, Box<NProc>),
    Branch(NAtom, Vec<(Symbol, NProc)>),
    If(NExpr, Box<NProc>, Box<NProc>),
    Par(Box<NProc>, Box<NProc>),
    New(ChanKind, Box<NProc>),
    PVar(NName),
    Rec(Box<NProc>),
    Nil,
}

#[derive(Clone)]
enum Binder {
    Var(Symbol),
    Chan(Channel),
    PVar(Symbol),
}

struct Env(Vec<Binder>);

impl Env {
    fn find(&self, pred: impl Fn(&Binder) -> bool) -> Option<usize> {
        self.0.iter().rev().position(pred)
    }

    fn var(&self, x: &Symbol) -> Option<usize> {
        self.find(|b| matches!(b, Binder::Var(y) if y == x))
    }

    fn chan(&self, c: &Channel) -> Option<usize> {
        self.find(|b| matches!(b, Binder::Chan(d) if d == c))
    }

    fn pvar(&self, x: &Symbol) -> Option<usize> {
        self.find(|b| matches!(b, Binder::PVar(y) if y == x))
    }

    fn with<T>(&mut self, b: Binder, f: impl FnOnce(&mut Env) -> T) -> T {
        self.0.push(b);
        let r = f(self);
        self.0.pop();
        r
    }
}

/// Converts a process to nameless form.
pub fn to_nameless(p: &Process) -> NProc {
    conv(p, &mut Env(Vec::new()))
}

fn conv_value(v: &Value, env: &Env) -> NVal {
    match v {
        Value::Bool(b) => NVal::Bool(*b),
        Value::Nat(n) => NVal::Nat(*n),
        Value::Shared(a) => {
            let c = Channel::Shared(a.clone());
            NVal::Shared(env.chan(&c).map(NName::Bound).unwrap_or(NName::Free(a.clone())))
        }
        Value::Endpoint(e) => {
            let c = Channel::Session(e.session.clone());
            let n = env.chan(&c).map(NName::Bound).unwrap_or(NName::Free(e.session.clone()));
            NVal::Endpoint(n, e.polarity)
        }
    }
}

fn conv_atom(a: &Atom, env: &Env) -> NAtom {
    match a {
        Atom::Var(x) => env.var(x).map(NAtom::Bound).unwrap_or(NAtom::Free(x.clone())),
        Atom::Val(v) => NAtom::Val(conv_value(v, env)),
    }
}

fn conv_expr(e: &Expr, env: &Env) -> NExpr {
    match e {
        Expr::Val { value } => NExpr::Atom(NAtom::Val(conv_value(value, env))),
        Expr::Var { name } => NExpr::Atom(conv_atom(&Atom::Var(name.clone()), env)),
        Expr::Op { op, args } => NExpr::Op(*op, args.iter().map(|a| conv_expr(a, env)).collect()),
    }
}

fn conv(p: &Process, env: &mut Env) -> NProc {
    match p {
        Process::Request { chan, var, body } => {
            let c = conv_atom(chan, env);
            NProc::Req(c, Box::new(env.with(Binder::Var(var.clone()), |e| conv(body, e))))
        }
        Process::Accept { chan, var, body } => {
            let c = conv_atom(chan, env);
            NProc::Acc(c, Box::new(env.with(Binder::Var(var.clone()), |e| conv(body, e))))
        }
        Process::Receive { chan, var, body } => {
            let c = conv_atom(chan, env);
            NProc::Recv(c, Box::new(env.with(Binder::Var(var.clone()), |e| conv(body, e))))
        }
        Process::Send { chan, payload, body } => {
            NProc::Send(conv_atom(chan, env), conv_expr(payload, env), Box::new(conv(body, env)))
        }
        Process::Select { chan, label, body } => {
            NProc::Sel(conv_atom(chan, env), label.clone(), Box::new(conv(body, env)))
        }
        Process::Branch { chan, arms } => NProc::Branch(
            conv_atom(chan, env),
            arms.iter().map(|a| (a.label.clone(), conv(&a.body, env))).collect(),
        ),
        Process::If { guard, then_branch, else_branch } => NProc::If(
            conv_expr(guard, env),
            Box::new(conv(then_branch, env)),
            Box::new(conv(else_branch, env)),
        ),
        Process::Par { left, right } => NProc::Par(Box::new(conv(left, env)), Box::new(conv(right, env))),
        Process::New { chan, body } => {
            let kind = match chan {
                Channel::Shared(_) => ChanKind::Shared,
                Channel::Session(_) => ChanKind::Session,
            };
            NProc::New(kind, Box::new(env.with(Binder::Chan(chan.clone()), |e| conv(body, e))))
        }
        Process::Var { name } => NProc::PVar(env.pvar(name).map(NName::Bound).unwrap_or(NName::Free(name.clone()))),
        Process::Rec { var, body } => NProc::Rec(Box::new(env.with(Binder::PVar(var.clone()), |e| conv(body, e)))),
        Process::Nil => NProc::Nil,
    }
}

/// Rewrites every bound index `i` seen under `depth` local binders.
fn map_indices(p: &NProc, depth: usize, f: &dyn Fn(usize, usize) -> usize, pv: &dyn Fn(usize, usize) -> Option<NProc>) -> NProc {
    let name = |n: &NName, d: usize| match n {
        NName::Bound(i) => NName::Bound(f(*i, d)),
        other => other.clone(),
    };
    let val = |v: &NVal, d: usize| match v {
        NVal::Shared(n) => NVal::Shared(name(n, d)),
        NVal::Endpoint(n, pol) => NVal::Endpoint(name(n, d), *pol),
        other => other.clone(),
    };
    let atom = |a: &NAtom, d: usize| match a {
        NAtom::Bound(i) => NAtom::Bound(f(*i, d)),
        NAtom::Free(x) => NAtom::Free(x.clone()),
        NAtom::Val(v) => NAtom::Val(val(v, d)),
    };
    fn expr(e: &NExpr, d: usize, atom: &dyn Fn(&NAtom, usize) -> NAtom) -> NExpr {
        match e {
            NExpr::Atom(a) => NExpr::Atom(atom(a, d)),
            NExpr::Op(op, args) => NExpr::Op(*op, args.iter().map(|a| expr(a, d, atom)).collect()),
        }
    }
    let rec = |q: &NProc, d: usize| Box::new(map_indices(q, d, f, pv));
    let d = depth;
    match p {
        NProc::Req(c, b) => NProc::Req(atom(c, d), rec(b, d + 1)),
        NProc::Acc(c, b) => NProc::Acc(atom(c, d), rec(b, d + 1)),
        NProc::Recv(c, b) => NProc::Recv(atom(c, d), rec(b, d + 1)),
        NProc::Send(c, e, b) => NProc::Send(atom(c, d), expr(e, d, &atom), rec(b, d)),
        NProc::Sel(c, l, b) => NProc::Sel(atom(c, d), l.clone(), rec(b, d)),
        NProc::Branch(c, arms) => {
            NProc::Branch(atom(c, d), arms.iter().map(|(l, b)| (l.clone(), map_indices(b, d, f, pv))).collect())
        }
        NProc::If(g, t, e) => NProc::If(expr(g, d, &atom), rec(t, d), rec(e, d)),
        NProc::Par(l, r) => NProc::Par(rec(l, d), rec(r, d)),
        NProc::New(k, b) => NProc::New(*k, rec(b, d + 1)),
        NProc::Rec(b) => NProc::Rec(rec(b, d + 1)),
        NProc::PVar(NName::Bound(i)) => pv(*i, d).unwrap_or(NProc::PVar(NName::Bound(f(*i, d)))),
        NProc::PVar(n) => NProc::PVar(n.clone()),
        NProc::Nil => NProc::Nil,
    }
}

/// Adds `by` to every index that escapes the term.
pub fn shift(p: &NProc, by: usize) -> NProc {
    if by == 0 {
        return p.clone();
    }
    map_indices(p, 0, &|i, d| if i >= d { i + by } else { i }, &|_, _| None)
}

/// One unfolding of `Rec(body)`: the body with index 0 replaced by the
/// recursion itself.
pub fn unfold(body: &NProc) -> NProc {
    let whole = NProc::Rec(Box::new(body.clone()));
    map_indices(
        body,
        0,
        &|i, d| if i > d { i - 1 } else { i },
        &|i, d| if i == d { Some(shift(&whole, d)) } else { None },
    )
}
