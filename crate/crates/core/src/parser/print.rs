use std::fmt::Write;

use crate::config::Configuration;
use crate::syntax::{ActionEvent, Arm, Atom, Endpoint, Expr, Memory, Name, Op, Polarity, Process, Thread, Value};

fn endpoint(out: &mut String, e: &Endpoint) {
    if e.polarity == Polarity::Minus {
        out.push('~');
    }
    out.push_str(&e.session);
}

fn value(out: &mut String, v: &Value) {
    match v {
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Nat(n) => write!(out, "{n}").unwrap(),
        Value::Shared(a) => out.push_str(a),
        Value::Endpoint(e) => endpoint(out, e),
    }
}

fn atom(out: &mut String, a: &Atom) {
    match a {
        Atom::Var(x) => out.push_str(x),
        Atom::Val(v) => value(out, v),
    }
}

fn level(op: Op) -> u8 {
    match op {
        Op::Or => 1,
        Op::And => 2,
        Op::Eq | Op::Le | Op::Lt => 3,
        Op::Add | Op::Sub => 4,
        Op::Mul => 5,
        Op::Not => 6,
    }
}

fn expr(out: &mut String, e: &Expr, min: u8) {
    match e {
        Expr::Val { value: v } => value(out, v),
        Expr::Var { name } => out.push_str(name),
        Expr::Op { op, args } => {
            let l = level(*op);
            let paren = l < min;
            if paren {
                out.push('(');
            }
            match (op, args.as_slice()) {
                (Op::Not, [a]) => {
                    out.push_str("not ");
                    expr(out, a, 6);
                }
                (_, [a, b]) => {
                    let (lmin, rmin) = if l == 3 { (4, 4) } else { (l, l + 1) };
                    expr(out, a, lmin);
                    write!(out, " {} ", op.symbol()).unwrap();
                    expr(out, b, rmin);
                }
                _ => {
                    write!(out, "{}(", op.symbol()).unwrap();
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        expr(out, a, 1);
                    }
                    out.push(')');
                }
            }
            if paren {
                out.push(')');
            }
        }
    }
}

fn arms(out: &mut String, arms: &[Arm]) {
    out.push('{');
    for (i, a) in arms.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write!(out, "{}: ", a.label).unwrap();
        proc(out, &a.body);
    }
    out.push('}');
}

/// Prints at the level of a parallel composition.
fn proc(out: &mut String, p: &Process) {
    match p {
        Process::Par { left, right } => {
            proc(out, left);
            out.push_str(" | ");
            seq(out, right);
        }
        other => seq(out, other),
    }
}

/// Prints a prefix-level process, parenthesizing compositions.
fn seq(out: &mut String, p: &Process) {
    match p {
        Process::Request { chan, var, body } | Process::Accept { chan, var, body } => {
            out.push_str(if matches!(p, Process::Request { .. }) { "req " } else { "acc " });
            atom(out, chan);
            write!(out, "({var}).").unwrap();
            seq(out, body);
        }
        Process::Send { chan, payload, body } => {
            atom(out, chan);
            out.push_str("!<");
            expr(out, payload, 1);
            out.push_str(">.");
            seq(out, body);
        }
        Process::Receive { chan, var, body } => {
            atom(out, chan);
            write!(out, "?({var}).").unwrap();
            seq(out, body);
        }
        Process::Select { chan, label, body } => {
            atom(out, chan);
            write!(out, " <| {label}.").unwrap();
            seq(out, body);
        }
        Process::Branch { chan, arms: a } => {
            atom(out, chan);
            out.push_str(" |> ");
            arms(out, a);
        }
        Process::If { guard, then_branch, else_branch } => {
            out.push_str("if ");
            expr(out, guard, 1);
            out.push_str(" then ");
            seq(out, then_branch);
            out.push_str(" else ");
            seq(out, else_branch);
        }
        Process::New { chan, body } => {
            write!(out, "new {} in ", chan.symbol()).unwrap();
            seq(out, body);
        }
        Process::Rec { var, body } => {
            write!(out, "rec {var}.").unwrap();
            seq(out, body);
        }
        Process::Var { name } => out.push_str(name),
        Process::Nil => out.push('0'),
        Process::Par { .. } => {
            out.push('(');
            proc(out, p);
            out.push(')');
        }
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr(&mut s, e, 1);
    s
}

pub fn print_process(p: &Process) -> String {
    let mut s = String::new();
    proc(&mut s, p);
    s
}

pub fn print_thread(t: &Thread) -> String {
    let mut s = format!("{} : ", t.tag);
    seq(&mut s, &t.body);
    s
}

pub fn print_memory(m: &Memory) -> String {
    let mut s = String::from("[");
    match m {
        Memory::Action { active, passive, event, active_out, passive_out } => {
            write!(s, "act {active},{passive} -> {active_out},{passive_out} : ").unwrap();
            match event {
                ActionEvent::Init { chan, req_var, acc_var, requester, accepter, session } => {
                    write!(s, "init({chan}, {req_var}, {acc_var}, ").unwrap();
                    proc(&mut s, requester);
                    s.push_str(", ");
                    proc(&mut s, accepter);
                    write!(s, ", {session})").unwrap();
                }
                ActionEvent::Com { chan, payload, var, sender, receiver } => {
                    s.push_str("com(");
                    endpoint(&mut s, chan);
                    s.push_str(", ");
                    expr(&mut s, payload, 1);
                    write!(s, ", {var}, ").unwrap();
                    proc(&mut s, sender);
                    s.push_str(", ");
                    proc(&mut s, receiver);
                    s.push(')');
                }
                ActionEvent::Sel { chan, label, selector, arms: a } => {
                    s.push_str("sel(");
                    endpoint(&mut s, chan);
                    write!(s, ", {label}, ").unwrap();
                    proc(&mut s, selector);
                    s.push_str(", ");
                    arms(&mut s, a);
                    s.push(')');
                }
            }
        }
        Memory::Choice { tag, event, out } => {
            write!(s, "cho {tag} -> {out} : if ").unwrap();
            expr(&mut s, &event.guard, 1);
            s.push_str(" then ");
            seq(&mut s, &event.then_branch);
            s.push_str(" else ");
            seq(&mut s, &event.else_branch);
        }
        Memory::Fork { tag, left, right } => write!(s, "fork {tag} -> {left}, {right}").unwrap(),
    }
    s.push(']');
    s
}

/// Prints a configuration in the syntax accepted by the configuration parser.
pub fn print_configuration(c: &Configuration) -> String {
    let mut items: Vec<String> = c.threads.iter().map(print_thread).collect();
    items.extend(c.memories.iter().map(print_memory));
    let body = if items.is_empty() { "nil".to_string() } else { items.join(" | ") };
    if c.restricted.is_empty() {
        return body;
    }
    let mut chans: Vec<&str> = Vec::new();
    let mut tags = Vec::new();
    for n in &c.restricted {
        match n {
            Name::Shared(a) | Name::Session(a) => chans.push(a),
            Name::Tag(t) => tags.push(*t),
        }
    }
    chans.sort();
    tags.sort();
    let names: Vec<String> = chans.into_iter().map(str::to_string).chain(tags.into_iter().map(|t| t.to_string())).collect();
    format!("new {} in ({})", names.join(", "), body)
}
