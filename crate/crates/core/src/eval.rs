//! Expression evaluation over the fixed operator table.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::syntax::{Expr, Op, Symbol, Value};

/// Map from term variables to values.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution(pub BTreeMap<Symbol, Value>);

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(x: Symbol, v: Value) -> Self {
        let mut m = BTreeMap::new();
        m.insert(x, v);
        Substitution(m)
    }

    pub fn with(mut self, x: &str, v: Value) -> Self {
        self.0.insert(x.into(), v);
        self
    }

    pub fn get(&self, x: &str) -> Option<&Value> {
        self.0.get(x)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(Symbol),
    #[error("operator `{op}` applied to {found}")]
    SortMismatch { op: &'static str, found: String },
    #[error("operator `{op}` expects {expected} argument(s), got {found}")]
    Arity { op: &'static str, expected: usize, found: usize },
    #[error("arithmetic overflow in `{0}`")]
    Overflow(&'static str),
}

pub fn eval(e: &Expr, env: &Substitution) -> Result<Value, EvalError> {
    match e {
        Expr::Val { value } => Ok(value.clone()),
        Expr::Var { name } => env.get(name).cloned().ok_or_else(|| EvalError::Unbound(name.clone())),
        Expr::Op { op, args } => {
            if args.len() != op.arity() {
                return Err(EvalError::Arity { op: op.symbol(), expected: op.arity(), found: args.len() });
            }
            let vals = args.iter().map(|a| eval(a, env)).collect::<Result<Vec<_>, _>>()?;
            apply(*op, &vals)
        }
    }
}

/// Evaluates a closed expression.
pub fn eval_closed(e: &Expr) -> Result<Value, EvalError> {
    eval(e, &Substitution::default())
}

fn mismatch(op: Op, vals: &[Value]) -> EvalError {
    let found = vals.iter().map(describe).collect::<Vec<_>>().join(", ");
    EvalError::SortMismatch { op: op.symbol(), found }
}

fn describe(v: &Value) -> String {
    match v {
        Value::Bool(b) => format!("bool {b}"),
        Value::Nat(n) => format!("nat {n}"),
        Value::Shared(a) => format!("channel {a}"),
        Value::Endpoint(e) => format!("endpoint {}", e.session),
    }
}

fn apply(op: Op, vals: &[Value]) -> Result<Value, EvalError> {
    use Value::{Bool, Nat};
    match (op, vals) {
        (Op::Add, [Nat(a), Nat(b)]) => a.checked_add(*b).map(Nat).ok_or(EvalError::Overflow("+")),
        (Op::Sub, [Nat(a), Nat(b)]) => Ok(Nat(a.saturating_sub(*b))),
        (Op::Mul, [Nat(a), Nat(b)]) => a.checked_mul(*b).map(Nat).ok_or(EvalError::Overflow("*")),
        (Op::Le, [Nat(a), Nat(b)]) => Ok(Bool(a <= b)),
        (Op::Lt, [Nat(a), Nat(b)]) => Ok(Bool(a < b)),
        (Op::Eq, [a, b]) if std::mem::discriminant(a) == std::mem::discriminant(b) => Ok(Bool(a == b)),
        (Op::Not, [Bool(a)]) => Ok(Bool(!a)),
        (Op::And, [Bool(a), Bool(b)]) => Ok(Bool(*a && *b)),
        (Op::Or, [Bool(a), Bool(b)]) => Ok(Bool(*a || *b)),
        _ => Err(mismatch(op, vals)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(o: Op, args: Vec<Expr>) -> Expr {
        Expr::op(o, args)
    }

    #[test]
    fn arithmetic() {
        assert_eq!(eval_closed(&op(Op::Add, vec![Expr::nat(1), Expr::nat(2)])), Ok(Value::Nat(3)));
        assert_eq!(eval_closed(&op(Op::Sub, vec![Expr::nat(1), Expr::nat(2)])), Ok(Value::Nat(0)));
        assert_eq!(eval_closed(&op(Op::Mul, vec![Expr::nat(6), Expr::nat(7)])), Ok(Value::Nat(42)));
    }

    #[test]
    fn comparison_under_env() {
        let env = Substitution::new().with("x", Value::Nat(80));
        let e = op(Op::Le, vec![Expr::var("x"), Expr::nat(100)]);
        assert_eq!(eval(&e, &env), Ok(Value::Bool(true)));
    }

    #[test]
    fn negation() {
        let e = op(Op::Not, vec![Expr::val(Value::Bool(true))]);
        assert_eq!(eval_closed(&e), Ok(Value::Bool(false)));
    }

    #[test]
    fn sort_mismatch_and_unbound() {
        let e = op(Op::Add, vec![Expr::nat(1), Expr::val(Value::Bool(true))]);
        assert!(matches!(eval_closed(&e), Err(EvalError::SortMismatch { .. })));
        assert_eq!(eval_closed(&Expr::var("y")), Err(EvalError::Unbound("y".into())));
        let eq = op(Op::Eq, vec![Expr::nat(1), Expr::val(Value::Bool(true))]);
        assert!(matches!(eval_closed(&eq), Err(EvalError::SortMismatch { .. })));
    }

    #[test]
    fn overflow_and_arity() {
        let e = op(Op::Add, vec![Expr::nat(u64::MAX), Expr::nat(1)]);
        assert_eq!(eval_closed(&e), Err(EvalError::Overflow("+")));
        let bad = op(Op::Not, vec![]);
        assert!(matches!(eval_closed(&bad), Err(EvalError::Arity { .. })));
    }
}
