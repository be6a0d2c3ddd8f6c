//! Session types and sorts.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::Symbol;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Sort {
    Bool,
    Nat,
    /// A declared data sort, resolved through the type environment.
    Data { name: Symbol },
    /// Shared channel whose sessions follow the accepter-side type.
    Shared { session: Box<SessionType> },
    /// A delegated session endpoint.
    Session { session: Box<SessionType> },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SessionType {
    Send { sort: Sort, cont: Box<SessionType> },
    Recv { sort: Sort, cont: Box<SessionType> },
    Select { arms: Vec<(Symbol, SessionType)> },
    Branch { arms: Vec<(Symbol, SessionType)> },
    End,
    Rec { var: Symbol, body: Box<SessionType> },
    Var { name: Symbol },
}

impl SessionType {
    pub fn send(sort: Sort, cont: SessionType) -> Self {
        SessionType::Send { sort, cont: Box::new(cont) }
    }

    pub fn recv(sort: Sort, cont: SessionType) -> Self {
        SessionType::Recv { sort, cont: Box::new(cont) }
    }

    /// Swaps `!`/`?` and `+`/`&` throughout. Payload sorts are unchanged.
    pub fn dual(&self) -> SessionType {
        match self {
            SessionType::Send { sort, cont } => SessionType::recv(sort.clone(), cont.dual()),
            SessionType::Recv { sort, cont } => SessionType::send(sort.clone(), cont.dual()),
            SessionType::Select { arms } => {
                SessionType::Branch { arms: arms.iter().map(|(l, s)| (l.clone(), s.dual())).collect() }
            }
            SessionType::Branch { arms } => {
                SessionType::Select { arms: arms.iter().map(|(l, s)| (l.clone(), s.dual())).collect() }
            }
            SessionType::End => SessionType::End,
            SessionType::Rec { var, body } => SessionType::Rec { var: var.clone(), body: Box::new(body.dual()) },
            SessionType::Var { name } => SessionType::Var { name: name.clone() },
        }
    }

    /// `body{rec X.body / X}`. Type variables are never captured because
    /// session types bind only recursion variables and substitution replaces
    /// a closed-over term.
    pub fn unfold(&self) -> SessionType {
        match self {
            SessionType::Rec { var, body } => body.subst(var, self),
            other => other.clone(),
        }
    }

    pub fn subst(&self, x: &Symbol, with: &SessionType) -> SessionType {
        match self {
            SessionType::Send { sort, cont } => SessionType::send(sort.subst(x, with), cont.subst(x, with)),
            SessionType::Recv { sort, cont } => SessionType::recv(sort.subst(x, with), cont.subst(x, with)),
            SessionType::Select { arms } => {
                SessionType::Select { arms: arms.iter().map(|(l, s)| (l.clone(), s.subst(x, with))).collect() }
            }
            SessionType::Branch { arms } => {
                SessionType::Branch { arms: arms.iter().map(|(l, s)| (l.clone(), s.subst(x, with))).collect() }
            }
            SessionType::End => SessionType::End,
            SessionType::Rec { var, .. } if var == x => self.clone(),
            SessionType::Rec { var, body } => SessionType::Rec { var: var.clone(), body: Box::new(body.subst(x, with)) },
            SessionType::Var { name } if name == x => with.clone(),
            SessionType::Var { .. } => self.clone(),
        }
    }

    /// Unfolds leading recursions until a type constructor is exposed.
    pub fn head(&self) -> SessionType {
        let mut t = self.clone();
        for _ in 0..64 {
            match t {
                SessionType::Rec { .. } => t = t.unfold(),
                _ => return t,
            }
        }
        t
    }

    pub fn is_end(&self) -> bool {
        matches!(self.head(), SessionType::End)
    }

    /// Whether every recursion variable is bound and guarded by a prefix.
    pub fn is_contractive(&self) -> bool {
        fn go(t: &SessionType, bound: &mut Vec<Symbol>, unguarded: &mut Vec<Symbol>) -> bool {
            match t {
                SessionType::Send { cont, .. } | SessionType::Recv { cont, .. } => {
                    let saved = std::mem::take(unguarded);
                    let ok = go(cont, bound, unguarded);
                    *unguarded = saved;
                    ok
                }
                SessionType::Select { arms } | SessionType::Branch { arms } => {
                    let saved = std::mem::take(unguarded);
                    let ok = arms.iter().all(|(_, s)| go(s, bound, unguarded));
                    *unguarded = saved;
                    ok
                }
                SessionType::End => true,
                SessionType::Rec { var, body } => {
                    bound.push(var.clone());
                    unguarded.push(var.clone());
                    let ok = go(body, bound, unguarded);
                    unguarded.pop();
                    bound.pop();
                    ok
                }
                SessionType::Var { name } => bound.contains(name) && !unguarded.contains(name),
            }
        }
        go(self, &mut Vec::new(), &mut Vec::new())
    }
}

impl Sort {
    fn subst(&self, x: &Symbol, with: &SessionType) -> Sort {
        match self {
            Sort::Shared { session } => Sort::Shared { session: Box::new(session.subst(x, with)) },
            Sort::Session { session } => Sort::Session { session: Box::new(session.subst(x, with)) },
            other => other.clone(),
        }
    }
}

fn write_arms(f: &mut fmt::Formatter<'_>, arms: &[(Symbol, SessionType)]) -> fmt::Result {
    f.write_str("{")?;
    for (i, (l, s)) in arms.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{l}: {s}")?;
    }
    f.write_str("}")
}

impl fmt::Display for SessionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionType::Send { sort, cont } => write!(f, "!{sort}.{cont}"),
            SessionType::Recv { sort, cont } => write!(f, "?{sort}.{cont}"),
            SessionType::Select { arms } => {
                f.write_str("+")?;
                write_arms(f, arms)
            }
            SessionType::Branch { arms } => {
                f.write_str("&")?;
                write_arms(f, arms)
            }
            SessionType::End => f.write_str("end"),
            SessionType::Rec { var, body } => write!(f, "rec {var}.{body}"),
            SessionType::Var { name } => f.write_str(name),
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => f.write_str("bool"),
            Sort::Nat => f.write_str("nat"),
            Sort::Data { name } => f.write_str(name),
            Sort::Shared { session } => write!(f, "<{session}>"),
            Sort::Session { session } => write!(f, "[{session}]"),
        }
    }
}

/// Declarations from a `.styp` file: data sorts and shared channel types.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeEnv {
    /// Data sort name to its base sort (`bool` or `nat`).
    pub sorts: BTreeMap<Symbol, Sort>,
    /// Shared channel name to the accepter-side session type.
    pub channels: BTreeMap<Symbol, SessionType>,
}

impl TypeEnv {
    /// Resolves a data sort to its base sort.
    pub fn base(&self, s: &Sort) -> Sort {
        match s {
            Sort::Data { name } => self.sorts.get(name).cloned().unwrap_or_else(|| s.clone()),
            other => other.clone(),
        }
    }
}

impl fmt::Display for TypeEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, s) in &self.sorts {
            writeln!(f, "sort {n} = {s}")?;
        }
        for (a, s) in &self.channels {
            writeln!(f, "chan {a} : <{s}>")?;
        }
        Ok(())
    }
}
