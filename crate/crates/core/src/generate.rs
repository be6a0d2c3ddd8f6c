//! Seeded random programs, well-typed session programs and random walks,
//! used by the property suites.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Configuration;
use crate::reduction::{enumerate_backward, enumerate_forward, Engine, Step};
use crate::syntax::{sym, Arm, Atom, Channel, Endpoint, Expr, Op, Process, Symbol, Tag, Thread, Value};
use crate::types::{SessionType, Sort, TypeEnv};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const LABELS: [&str; 3] = ["l", "r", "m"];

pub fn session_type<R: Rng>(rng: &mut R, depth: usize) -> SessionType {
    if depth == 0 || rng.gen_ratio(1, 6) {
        return SessionType::End;
    }
    let sort = if rng.gen_ratio(2, 3) { Sort::Nat } else { Sort::Bool };
    match rng.gen_range(0..4) {
        0 => SessionType::send(sort, session_type(rng, depth - 1)),
        1 => SessionType::recv(sort, session_type(rng, depth - 1)),
        k => {
            let n = rng.gen_range(1..=LABELS.len());
            let arms = LABELS[..n].iter().map(|l| (sym(l), session_type(rng, depth - 1))).collect();
            if k == 2 {
                SessionType::Select { arms }
            } else {
                SessionType::Branch { arms }
            }
        }
    }
}

fn nat_expr<R: Rng>(rng: &mut R, vars: &[(Symbol, Sort)]) -> Expr {
    let nats: Vec<&Symbol> = vars.iter().filter(|(_, s)| *s == Sort::Nat).map(|(x, _)| x).collect();
    let atom = |rng: &mut R| match nats.choose(rng) {
        Some(x) if rng.gen_bool(0.6) => Expr::Var { name: (*x).clone() },
        _ => Expr::nat(rng.gen_range(0..5)),
    };
    if rng.gen_ratio(1, 2) {
        return atom(rng);
    }
    let op = *[Op::Add, Op::Sub, Op::Mul].choose(rng).unwrap();
    Expr::op(op, vec![atom(rng), atom(rng)])
}

fn bool_expr<R: Rng>(rng: &mut R, vars: &[(Symbol, Sort)]) -> Expr {
    let bools: Vec<&Symbol> = vars.iter().filter(|(_, s)| *s == Sort::Bool).map(|(x, _)| x).collect();
    match rng.gen_range(0..4) {
        0 => Expr::val(Value::Bool(rng.gen_bool(0.5))),
        1 if !bools.is_empty() => Expr::Var { name: (*bools.choose(rng).unwrap()).clone() },
        2 => Expr::op(Op::Not, vec![bool_expr(rng, vars)]),
        _ => {
            let op = *[Op::Le, Op::Lt, Op::Eq].choose(rng).unwrap();
            Expr::op(op, vec![nat_expr(rng, vars), nat_expr(rng, vars)])
        }
    }
}

fn payload<R: Rng>(rng: &mut R, sort: &Sort, vars: &[(Symbol, Sort)]) -> Expr {
    match sort {
        Sort::Bool => bool_expr(rng, vars),
        _ => nat_expr(rng, vars),
    }
}

/// A process using channel `k` according to `t`, with `vars` bound.
pub fn session_process<R: Rng>(rng: &mut R, k: &Atom, t: &SessionType, vars: &mut Vec<(Symbol, Sort)>) -> Process {
    match t {
        SessionType::End => match rng.gen_range(0..8) {
            0 => Process::par(Process::Nil, Process::Nil),
            1 => Process::If {
                guard: bool_expr(rng, vars),
                then_branch: Box::new(Process::Nil),
                else_branch: Box::new(Process::Nil),
            },
            _ => Process::Nil,
        },
        SessionType::Send { sort, cont } => Process::Send {
            chan: k.clone(),
            payload: payload(rng, sort, vars),
            body: Box::new(session_process(rng, k, cont, vars)),
        },
        SessionType::Recv { sort, cont } => {
            let x = sym(&format!("v{}", vars.len()));
            vars.push((x.clone(), sort.clone()));
            let body = session_process(rng, k, cont, vars);
            vars.pop();
            Process::Receive { chan: k.clone(), var: x, body: Box::new(body) }
        }
        SessionType::Select { arms } => {
            let select = |rng: &mut R, vars: &mut Vec<(Symbol, Sort)>| {
                let (l, s) = arms.choose(rng).unwrap();
                Process::Select { chan: k.clone(), label: l.clone(), body: Box::new(session_process(rng, k, s, vars)) }
            };
            if !vars.is_empty() && rng.gen_ratio(1, 3) {
                let guard = bool_expr(rng, vars);
                let then_branch = Box::new(select(rng, vars));
                let else_branch = Box::new(select(rng, vars));
                Process::If { guard, then_branch, else_branch }
            } else {
                select(rng, vars)
            }
        }
        SessionType::Branch { arms } => Process::Branch {
            chan: k.clone(),
            arms: arms.iter().map(|(l, s)| Arm { label: l.clone(), body: session_process(rng, k, s, vars) }).collect(),
        },
        SessionType::Rec { .. } | SessionType::Var { .. } => Process::Nil,
    }
}

fn threads(bodies: Vec<Process>) -> Configuration {
    let threads = bodies.into_iter().enumerate().map(|(i, body)| Thread { tag: Tag(i as u64 + 1), body }).collect();
    Configuration::new([], threads, Vec::new())
}

/// A well-typed initial configuration in the restricted class: requesters
/// and accepters on one or two shared channels, with declared types.
pub fn typed_program<R: Rng>(rng: &mut R) -> (Configuration, TypeEnv) {
    let mut env = TypeEnv::default();
    let mut bodies = Vec::new();
    let channels = rng.gen_range(1..=2);
    for c in 0..channels {
        let a = sym(["a", "b"][c]);
        let s = session_type(rng, 4);
        let requesters = if rng.gen_ratio(1, 4) { 2 } else { 1 };
        let accepters = rng.gen_range(1..=2);
        for _ in 0..requesters {
            let x = sym("x");
            let body = session_process(rng, &Atom::Var(x.clone()), &s.dual(), &mut Vec::new());
            bodies.push(Process::Request { chan: Atom::shared(&a), var: x, body: Box::new(body) });
        }
        for _ in 0..accepters {
            let y = sym("y");
            let body = session_process(rng, &Atom::Var(y.clone()), &s, &mut Vec::new());
            bodies.push(Process::Accept { chan: Atom::shared(&a), var: y, body: Box::new(body) });
        }
        env.channels.insert(a, s);
    }
    bodies.shuffle(rng);
    (threads(bodies), env)
}

/// An initial configuration mixing typed sessions with forms outside the
/// typed class: top-level conditionals, local sessions, parallel threads
/// and recursive servers.
pub fn program<R: Rng>(rng: &mut R) -> Configuration {
    let (typed, _) = typed_program(rng);
    let mut bodies: Vec<Process> = typed.threads.into_iter().map(|t| t.body).collect();
    for _ in 0..rng.gen_range(0..=2) {
        let extra = match rng.gen_range(0..4) {
            0 => Process::If {
                guard: bool_expr(rng, &[]),
                then_branch: Box::new(Process::par(Process::Nil, Process::Nil)),
                else_branch: Box::new(Process::Nil),
            },
            1 => {
                let s = sym("q");
                let t = session_type(rng, 3);
                let minus = Atom::endpoint(Endpoint::minus("q"));
                let plus = Atom::endpoint(Endpoint::plus("q"));
                let left = session_process(rng, &minus, &t.dual(), &mut Vec::new());
                let right = session_process(rng, &plus, &t, &mut Vec::new());
                Process::new_chan(Channel::Session(s), Process::par(left, right))
            }
            2 => Process::par(
                Process::Request {
                    chan: Atom::shared("d"),
                    var: sym("x"),
                    body: Box::new(Process::Send {
                        chan: Atom::var("x"),
                        payload: nat_expr(rng, &[]),
                        body: Box::new(Process::Nil),
                    }),
                },
                Process::Nil,
            ),
            _ => Process::Rec {
                var: sym("X"),
                body: Box::new(Process::Accept {
                    chan: Atom::shared("d"),
                    var: sym("y"),
                    body: Box::new(Process::Receive {
                        chan: Atom::var("y"),
                        var: sym("v"),
                        body: Box::new(Process::Var { name: sym("X") }),
                    }),
                }),
            },
        };
        bodies.push(extra);
    }
    bodies.shuffle(rng);
    threads(bodies)
}

/// Takes up to `len` random steps, preferring forward ones. Returns every
/// configuration visited, `m` first, and the steps between them.
pub fn random_walk<R: Rng>(
    rng: &mut R,
    engine: &mut Engine,
    m: &Configuration,
    len: usize,
) -> (Vec<Configuration>, Vec<Step>) {
    let mut configs = vec![m.clone()];
    let mut steps = Vec::new();
    for _ in 0..len {
        let cur = configs.last().unwrap();
        let fwd = enumerate_forward(cur);
        let bwd = enumerate_backward(cur);
        let pool = if !fwd.is_empty() && (bwd.is_empty() || rng.gen_ratio(3, 4)) { fwd } else { bwd };
        let Some(r) = pool.choose(rng) else { break };
        let (next, step) = engine.apply(cur, r).expect("enumerated redexes apply");
        steps.push(step);
        configs.push(next);
    }
    (configs, steps)
}
