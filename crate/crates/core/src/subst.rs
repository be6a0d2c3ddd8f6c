//! Capture-avoiding substitution of values for variables, channel renaming,
//! and process-variable substitution (used to unfold recursion).

use std::collections::{BTreeMap, BTreeSet};

use crate::eval::Substitution;
use crate::syntax::{Arm, Atom, Channel, Endpoint, Expr, Process, Symbol, Value};

/// Returns `base` decorated with primes until it avoids every name in `avoid`.
pub fn fresh_symbol(base: &str, avoid: &BTreeSet<Symbol>) -> Symbol {
    let mut candidate = format!("{base}'");
    while avoid.contains(candidate.as_str()) {
        candidate.push('\'');
    }
    candidate.into()
}

#[derive(Clone, Default)]
struct Subst {
    vars: BTreeMap<Symbol, Atom>,
    chans: BTreeMap<Channel, Symbol>,
    pvars: BTreeMap<Symbol, Process>,
}

impl Subst {
    fn is_empty(&self) -> bool {
        self.vars.is_empty() && self.chans.is_empty() && self.pvars.is_empty()
    }

    /// Names that binders must not capture.
    fn avoid(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for a in self.vars.values() {
            crate::syntax::atom_symbols(a, &mut out);
        }
        out.extend(self.chans.values().cloned());
        for p in self.pvars.values() {
            out.extend(p.free_vars());
            out.extend(p.free_channels().into_iter().map(|c| c.symbol().clone()));
            out.extend(free_pvars(p));
        }
        out
    }

    fn relevant(&self, p: &Process) -> bool {
        if self.is_empty() {
            return false;
        }
        if !self.vars.is_empty() && p.free_vars().iter().any(|x| self.vars.contains_key(x)) {
            return true;
        }
        if !self.chans.is_empty() && p.free_channels().iter().any(|c| self.chans.contains_key(c)) {
            return true;
        }
        !self.pvars.is_empty() && free_pvars(p).iter().any(|x| self.pvars.contains_key(x))
    }

    fn value(&self, v: &Value) -> Value {
        match v {
            Value::Shared(a) => match self.chans.get(&Channel::Shared(a.clone())) {
                Some(b) => Value::Shared(b.clone()),
                None => v.clone(),
            },
            Value::Endpoint(e) => match self.chans.get(&Channel::Session(e.session.clone())) {
                Some(b) => Value::Endpoint(Endpoint { session: b.clone(), polarity: e.polarity }),
                None => v.clone(),
            },
            _ => v.clone(),
        }
    }

    fn atom(&self, a: &Atom) -> Atom {
        match a {
            Atom::Var(x) => self.vars.get(x).cloned().unwrap_or_else(|| a.clone()),
            Atom::Val(v) => Atom::Val(self.value(v)),
        }
    }

    fn expr(&self, e: &Expr) -> Expr {
        match e {
            Expr::Val { value } => Expr::Val { value: self.value(value) },
            Expr::Var { name } => match self.vars.get(name) {
                Some(Atom::Var(y)) => Expr::Var { name: y.clone() },
                Some(Atom::Val(v)) => Expr::Val { value: v.clone() },
                None => e.clone(),
            },
            Expr::Op { op, args } => Expr::Op { op: *op, args: args.iter().map(|a| self.expr(a)).collect() },
        }
    }

    fn under_var(&self, x: &Symbol, body: &Process) -> (Symbol, Process) {
        let mut inner = self.clone();
        inner.vars.remove(x);
        if !inner.relevant(body) {
            return (x.clone(), body.clone());
        }
        let avoid = inner.avoid();
        if avoid.contains(x) {
            let mut used = avoid;
            body.symbols(&mut used);
            let x2 = fresh_symbol(x, &used);
            inner.vars.insert(x.clone(), Atom::Var(x2.clone()));
            (x2, inner.process(body))
        } else {
            (x.clone(), inner.process(body))
        }
    }

    fn under_chan(&self, c: &Channel, body: &Process) -> (Channel, Process) {
        let mut inner = self.clone();
        inner.chans.remove(c);
        if !inner.relevant(body) {
            return (c.clone(), body.clone());
        }
        let avoid = inner.avoid();
        if avoid.contains(c.symbol()) {
            let mut used = avoid;
            body.symbols(&mut used);
            let c2 = fresh_symbol(c.symbol(), &used);
            inner.chans.insert(c.clone(), c2.clone());
            (c.with_symbol(c2), inner.process(body))
        } else {
            (c.clone(), inner.process(body))
        }
    }

    fn under_pvar(&self, x: &Symbol, body: &Process) -> (Symbol, Process) {
        let mut inner = self.clone();
        inner.pvars.remove(x);
        if !inner.relevant(body) {
            return (x.clone(), body.clone());
        }
        let avoid = inner.avoid();
        if avoid.contains(x) {
            let mut used = avoid;
            body.symbols(&mut used);
            let x2 = fresh_symbol(x, &used);
            inner.pvars.insert(x.clone(), Process::Var { name: x2.clone() });
            (x2, inner.process(body))
        } else {
            (x.clone(), inner.process(body))
        }
    }

    fn process(&self, p: &Process) -> Process {
        if !self.relevant(p) {
            return p.clone();
        }
        match p {
            Process::Request { chan, var, body } => {
                let (var, body) = self.under_var(var, body);
                Process::Request { chan: self.atom(chan), var, body: Box::new(body) }
            }
            Process::Accept { chan, var, body } => {
                let (var, body) = self.under_var(var, body);
                Process::Accept { chan: self.atom(chan), var, body: Box::new(body) }
            }
            Process::Receive { chan, var, body } => {
                let (var, body) = self.under_var(var, body);
                Process::Receive { chan: self.atom(chan), var, body: Box::new(body) }
            }
            Process::Send { chan, payload, body } => Process::Send {
                chan: self.atom(chan),
                payload: self.expr(payload),
                body: Box::new(self.process(body)),
            },
            Process::Select { chan, label, body } => Process::Select {
                chan: self.atom(chan),
                label: label.clone(),
                body: Box::new(self.process(body)),
            },
            Process::Branch { chan, arms } => Process::Branch {
                chan: self.atom(chan),
                arms: arms.iter().map(|a| Arm { label: a.label.clone(), body: self.process(&a.body) }).collect(),
            },
            Process::If { guard, then_branch, else_branch } => Process::If {
                guard: self.expr(guard),
                then_branch: Box::new(self.process(then_branch)),
                else_branch: Box::new(self.process(else_branch)),
            },
            Process::Par { left, right } => Process::par(self.process(left), self.process(right)),
            Process::New { chan, body } => {
                let (chan, body) = self.under_chan(chan, body);
                Process::New { chan, body: Box::new(body) }
            }
            Process::Rec { var, body } => {
                let (var, body) = self.under_pvar(var, body);
                Process::Rec { var, body: Box::new(body) }
            }
            Process::Var { name } => self.pvars.get(name).cloned().unwrap_or_else(|| p.clone()),
            Process::Nil => Process::Nil,
        }
    }
}

/// Free process variables.
pub fn free_pvars(p: &Process) -> BTreeSet<Symbol> {
    fn go(p: &Process, bound: &mut Vec<Symbol>, out: &mut BTreeSet<Symbol>) {
        match p {
            Process::Var { name } => {
                if !bound.contains(name) {
                    out.insert(name.clone());
                }
            }
            Process::Rec { var, body } => {
                bound.push(var.clone());
                go(body, bound, out);
                bound.pop();
            }
            Process::Request { body, .. }
            | Process::Accept { body, .. }
            | Process::Send { body, .. }
            | Process::Receive { body, .. }
            | Process::Select { body, .. }
            | Process::New { body, .. } => go(body, bound, out),
            Process::Branch { arms, .. } => arms.iter().for_each(|a| go(&a.body, bound, out)),
            Process::If { then_branch, else_branch, .. } => {
                go(then_branch, bound, out);
                go(else_branch, bound, out);
            }
            Process::Par { left, right } => {
                go(left, bound, out);
                go(right, bound, out);
            }
            Process::Nil => {}
        }
    }
    let mut out = BTreeSet::new();
    go(p, &mut Vec::new(), &mut out);
    out
}

/// Replaces every free occurrence of each variable in `sigma` by its value.
pub fn substitute(p: &Process, sigma: &Substitution) -> Process {
    let s = Subst {
        vars: sigma.0.iter().map(|(k, v)| (k.clone(), Atom::Val(v.clone()))).collect(),
        ..Subst::default()
    };
    s.process(p)
}

pub fn substitute_expr(e: &Expr, sigma: &Substitution) -> Expr {
    let s = Subst {
        vars: sigma.0.iter().map(|(k, v)| (k.clone(), Atom::Val(v.clone()))).collect(),
        ..Subst::default()
    };
    s.expr(e)
}

/// `p{v/x}`.
pub fn substitute_one(p: &Process, x: &Symbol, v: Value) -> Process {
    substitute(p, &Substitution::single(x.clone(), v))
}

/// Renames free occurrences of channel `from` to `to`.
pub fn rename_channel(p: &Process, from: &Channel, to: Symbol) -> Process {
    let mut s = Subst::default();
    s.chans.insert(from.clone(), to);
    s.process(p)
}

pub fn rename_channel_in_expr(e: &Expr, from: &Channel, to: Symbol) -> Expr {
    let mut s = Subst::default();
    s.chans.insert(from.clone(), to);
    s.expr(e)
}

pub fn rename_channel_in_value(v: &Value, from: &Channel, to: Symbol) -> Value {
    let mut s = Subst::default();
    s.chans.insert(from.clone(), to);
    s.value(v)
}

/// Renames a free term variable.
pub fn rename_var(p: &Process, from: &Symbol, to: Symbol) -> Process {
    let mut s = Subst::default();
    s.vars.insert(from.clone(), Atom::Var(to));
    s.process(p)
}

/// `P{Q/X}` for a process variable `X`.
pub fn substitute_pvar(p: &Process, x: &Symbol, q: &Process) -> Process {
    let mut s = Subst::default();
    s.pvars.insert(x.clone(), q.clone());
    s.process(p)
}

/// One unfolding of `rec X. body`: `body{rec X. body / X}`.
pub fn unfold(var: &Symbol, body: &Process) -> Process {
    let rec = Process::Rec { var: var.clone(), body: Box::new(body.clone()) };
    substitute_pvar(body, var, &rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{sym, Endpoint};

    fn send(chan: Atom, payload: Expr, body: Process) -> Process {
        Process::Send { chan, payload, body: Box::new(body) }
    }

    #[test]
    fn replaces_subject_variable() {
        let p = send(Atom::var("x"), Expr::nat(1), Process::Nil);
        let q = substitute_one(&p, &sym("x"), Value::Endpoint(Endpoint::minus("s")));
        assert_eq!(q, send(Atom::endpoint(Endpoint::minus("s")), Expr::nat(1), Process::Nil));
    }

    #[test]
    fn empty_substitution_is_identity() {
        let p = send(Atom::var("x"), Expr::var("y"), Process::Nil);
        assert_eq!(substitute(&p, &Substitution::new()), p);
    }

    #[test]
    fn restriction_is_renamed_to_avoid_capture() {
        // (new a) x!<a>.0 {a/x}  ==>  (new a') a!<a'>.0
        let p = Process::new_chan(
            Channel::Shared(sym("a")),
            send(Atom::var("x"), Expr::val(Value::Shared(sym("a"))), Process::Nil),
        );
        let q = substitute_one(&p, &sym("x"), Value::Shared(sym("a")));
        let expected = Process::new_chan(
            Channel::Shared(sym("a'")),
            send(Atom::shared("a"), Expr::val(Value::Shared(sym("a'"))), Process::Nil),
        );
        assert_eq!(q, expected);
    }

    #[test]
    fn binder_shadows() {
        // y?(x). x!<1>.0 {3/x} leaves the bound x alone
        let p = Process::Receive {
            chan: Atom::var("y"),
            var: sym("x"),
            body: Box::new(send(Atom::var("x"), Expr::nat(1), Process::Nil)),
        };
        assert_eq!(substitute_one(&p, &sym("x"), Value::Nat(3)), p);
    }

    #[test]
    fn unfolding_renames_inner_binder() {
        // rec X. y?(y). X   with y free: unfolding must not capture the outer y
        let body = Process::Receive {
            chan: Atom::var("y"),
            var: sym("y"),
            body: Box::new(Process::Var { name: sym("X") }),
        };
        let u = unfold(&sym("X"), &body);
        match u {
            Process::Receive { chan, var, body } => {
                assert_eq!(chan, Atom::var("y"));
                assert_eq!(&*var, "y'");
                assert!(body.free_vars().contains("y"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
