use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use respi_core::generate::{program, random_walk, rng, session_type, typed_program};
use respi_core::history::{build_graph, check_consistent, rollback, RollbackTarget};
use respi_core::nameless::{to_nameless, NAtom, NExpr, NName, NProc, NVal};
use respi_core::props::{linearity_at, loop_lemma_at, oracle_agreement_at, SuiteReport};
use respi_core::types::{typecheck_process, SessionType, Typing};
use respi_core::{
    alpha_tag_equal, concurrent, enumerate, enumerate_backward, enumerate_forward, forgetful_map, parse_configuration,
    print_configuration, struct_congruent, substitute, sym, Atom, Channel, Configuration, Endpoint, Engine, Expr,
    Mutation, Op, Process, RedexId, Rule, Substitution, Symbol, Tag, Value,
};

fn walk(seed: u64, len: usize) -> Vec<Configuration> {
    let mut r = rng(seed);
    let m = program(&mut r);
    let mut engine = Engine::seeded(seed);
    random_walk(&mut r, &mut engine, &m, len).0
}

const VARS: [&str; 3] = ["x", "y", "z"];

fn var() -> impl Strategy<Value = Symbol> {
    prop::sample::select(&VARS[..]).prop_map(sym)
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u64..4).prop_map(Expr::nat),
        var().prop_map(|name| Expr::Var { name }),
        Just(Expr::val(Value::Shared(sym("a")))),
    ];
    leaf.prop_recursive(2, 6, 2, |inner| {
        (prop::sample::select(vec![Op::Add, Op::Le, Op::And]), inner.clone(), inner)
            .prop_map(|(op, a, b)| Expr::op(op, vec![a, b]))
    })
}

/// Processes over a small name pool, with binders for variables and for
/// the shared channel `a`, so that substitutions can be captured.
fn process() -> impl Strategy<Value = Process> {
    let chan = prop_oneof![var().prop_map(Atom::Var), Just(Atom::shared("a")), Just(Atom::endpoint(Endpoint::plus("s")))];
    let leaf = Just(Process::Nil);
    leaf.prop_recursive(4, 24, 2, move |inner| {
        prop_oneof![
            (chan.clone(), expr(), inner.clone())
                .prop_map(|(chan, payload, body)| Process::Send { chan, payload, body: Box::new(body) }),
            (chan.clone(), var(), inner.clone())
                .prop_map(|(chan, var, body)| Process::Receive { chan, var, body: Box::new(body) }),
            (var(), inner.clone())
                .prop_map(|(var, body)| Process::Request { chan: Atom::shared("a"), var, body: Box::new(body) }),
            (expr(), inner.clone(), inner.clone()).prop_map(|(guard, a, b)| Process::If {
                guard,
                then_branch: Box::new(a),
                else_branch: Box::new(b)
            }),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Process::par(a, b)),
            inner.clone().prop_map(|b| Process::new_chan(Channel::Shared(sym("a")), b)),
        ]
    })
}

fn value() -> impl Strategy<Value = Value> {
    prop_oneof![
        (0u64..4).prop_map(Value::Nat),
        any::<bool>().prop_map(Value::Bool),
        Just(Value::Shared(sym("a"))),
        Just(Value::Endpoint(Endpoint::minus("s"))),
    ]
}

// Substitution on nameless terms: binders are indices, so replacing a free
// variable by a closed value cannot capture anything.
fn nval(v: &Value) -> NVal {
    match v {
        Value::Bool(b) => NVal::Bool(*b),
        Value::Nat(n) => NVal::Nat(*n),
        Value::Shared(a) => NVal::Shared(NName::Free(a.clone())),
        Value::Endpoint(e) => NVal::Endpoint(NName::Free(e.session.clone()), e.polarity),
    }
}

fn nsub_atom(a: &NAtom, x: &Symbol, v: &NVal) -> NAtom {
    match a {
        NAtom::Free(y) if y == x => NAtom::Val(v.clone()),
        other => other.clone(),
    }
}

fn nsub_expr(e: &NExpr, x: &Symbol, v: &NVal) -> NExpr {
    match e {
        NExpr::Atom(a) => NExpr::Atom(nsub_atom(a, x, v)),
        NExpr::Op(o, args) => NExpr::Op(*o, args.iter().map(|a| nsub_expr(a, x, v)).collect()),
    }
}

fn nsub(p: &NProc, x: &Symbol, v: &NVal) -> NProc {
    let b = |q: &NProc| Box::new(nsub(q, x, v));
    match p {
        NProc::Req(c, q) => NProc::Req(nsub_atom(c, x, v), b(q)),
        NProc::Acc(c, q) => NProc::Acc(nsub_atom(c, x, v), b(q)),
        NProc::Send(c, e, q) => NProc::Send(nsub_atom(c, x, v), nsub_expr(e, x, v), b(q)),
        NProc::Recv(c, q) => NProc::Recv(nsub_atom(c, x, v), b(q)),
        NProc::Sel(c, l, q) => NProc::Sel(nsub_atom(c, x, v), l.clone(), b(q)),
        NProc::Branch(c, arms) => {
            NProc::Branch(nsub_atom(c, x, v), arms.iter().map(|(l, q)| (l.clone(), nsub(q, x, v))).collect())
        }
        NProc::If(g, p1, p2) => NProc::If(nsub_expr(g, x, v), b(p1), b(p2)),
        NProc::Par(p1, p2) => NProc::Par(b(p1), b(p2)),
        NProc::New(k, q) => NProc::New(*k, b(q)),
        NProc::Rec(q) => NProc::Rec(b(q)),
        NProc::PVar(n) => NProc::PVar(n.clone()),
        NProc::Nil => NProc::Nil,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn substitution_matches_nameless_oracle(p in process(), x in var(), v in value()) {
        let got = to_nameless(&substitute(&p, &Substitution::single(x.clone(), v.clone())));
        prop_assert_eq!(got, nsub(&to_nameless(&p), &x, &nval(&v)));
    }

    #[test]
    fn substitution_composes(p in process(), v1 in value(), v2 in value()) {
        let (x, y) = (sym("x"), sym("y"));
        let s1 = Substitution::single(x.clone(), v1.clone());
        let s2 = Substitution::single(y.clone(), v2.clone());
        let both = Substitution::single(x, v1).with("y", v2);
        let seq = substitute(&substitute(&p, &s1), &s2);
        prop_assert_eq!(to_nameless(&seq), to_nameless(&substitute(&p, &both)));
    }

    #[test]
    fn empty_substitution_is_identity(p in process()) {
        prop_assert_eq!(substitute(&p, &Substitution::new()), p);
    }

    #[test]
    fn congruence_is_an_equivalence(seed in any::<u64>()) {
        let cs = walk(seed, 4);
        for a in &cs {
            prop_assert!(struct_congruent(a, a));
            for b in &cs {
                prop_assert_eq!(struct_congruent(a, b), struct_congruent(b, a));
                if struct_congruent(a, b) {
                    for c in &cs {
                        if struct_congruent(b, c) {
                            prop_assert!(struct_congruent(a, c));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn same_walk_with_other_names_is_alpha_equal(seed in any::<u64>(), other in any::<u64>()) {
        let mut r1 = rng(seed);
        let m = program(&mut r1);
        let mut e1 = Engine::seeded(seed);
        let mut e2 = Engine::seeded(other);
        let mut a = m.clone();
        let mut b = m;
        let mut tags: BTreeMap<Tag, Tag> = BTreeMap::new();
        for _ in 0..6 {
            let Some(r) = enumerate_forward(&a).into_iter().next() else { break };
            let r2 = RedexId { tags: r.tags.iter().map(|t| *tags.get(t).unwrap_or(t)).collect(), ..r.clone() };
            let (na, sa) = e1.apply(&a, &r).unwrap();
            let (nb, sb) = e2.apply(&b, &r2).unwrap();
            tags.extend(sa.produced.tags.iter().copied().zip(sb.produced.tags.iter().copied()));
            a = na;
            b = nb;
            prop_assert!(alpha_tag_equal(&a, &b));
        }
    }

    #[test]
    fn forgetful_map_erases_history(seed in any::<u64>()) {
        for c in walk(seed, 8) {
            let p = forgetful_map(&c);
            let back = Configuration::from_process(p.clone());
            prop_assert!(back.memories.is_empty());
            prop_assert_eq!(forgetful_map(&back).size() <= p.size() + 1, true);
        }
        let mut r = rng(seed);
        let m = program(&mut r);
        if m.threads.len() == 1 {
            prop_assert_eq!(forgetful_map(&m), m.threads[0].body.clone());
        }
    }

    #[test]
    fn dual_is_an_involution(seed in any::<u64>()) {
        let t = session_type(&mut rng(seed), 5);
        prop_assert_eq!(t.dual().dual(), t);
    }

    #[test]
    fn composition_laws(seed in any::<u64>()) {
        let mut r = rng(seed);
        let names = ["s", "q", "w"];
        let mut part = |i: usize| {
            let t = session_type(&mut r, 2);
            Typing::singleton(if i % 2 == 0 { Endpoint::plus(names[i / 2]) } else { Endpoint::minus(names[i / 2]) }, t)
        };
        let (a, b, c) = (part(prop_oneof_index(seed, 0)), part(prop_oneof_index(seed, 1)), part(prop_oneof_index(seed, 2)));
        let unit = Typing::empty();
        prop_assert_eq!(a.compose(&unit).unwrap(), a.clone());
        match (a.compose(&b), b.compose(&a)) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "composition is not commutative"),
        }
        let left = a.compose(&b).and_then(|ab| ab.compose(&c));
        let right = b.compose(&c).and_then(|bc| a.compose(&bc));
        prop_assert_eq!(left.is_ok(), right.is_ok());
        if let (Ok(l), Ok(r)) = (left, right) {
            prop_assert_eq!(l, r);
        }
    }

    #[test]
    fn concurrency_is_symmetric_and_irreflexive(seed in any::<u64>()) {
        for c in walk(seed, 6) {
            let rs = enumerate(&c);
            for r1 in &rs {
                prop_assert!(!concurrent(r1, r1));
                for r2 in &rs {
                    prop_assert_eq!(concurrent(r1, r2), concurrent(r2, r1));
                }
            }
        }
    }

    #[test]
    fn configurations_round_trip_through_text(seed in any::<u64>()) {
        for c in walk(seed, 8) {
            let text = print_configuration(&c);
            let back = parse_configuration(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
            prop_assert_eq!(back, c, "{}", text);
        }
    }

    #[test]
    fn forward_enumeration_matches_brute_force(seed in any::<u64>()) {
        for c in walk(seed, 6) {
            let expected = brute_force_forward(&c);
            let got: BTreeSet<RedexId> = enumerate_forward(&c).into_iter().collect();
            prop_assert_eq!(got, expected);
        }
    }

    #[test]
    fn backward_enabledness_is_all_produced_live(seed in any::<u64>()) {
        for c in walk(seed, 8) {
            let live: BTreeSet<_> = c.threads.iter().map(|t| t.tag).collect();
            let expected: BTreeSet<_> = c
                .memories
                .iter()
                .filter(|m| m.produced().iter().all(|t| live.contains(t)))
                .map(|m| m.id())
                .collect();
            let got: BTreeSet<_> = enumerate_backward(&c).into_iter().filter_map(|r| r.memory).collect();
            prop_assert_eq!(got, expected);
        }
    }

    #[test]
    fn steps_preserve_consistency_and_acyclicity(seed in any::<u64>()) {
        for c in walk(seed, 8) {
            prop_assert!(check_consistent(&c).ok);
            prop_assert!(build_graph(&c).is_acyclic());
        }
    }

    #[test]
    fn rollback_removes_target(seed in any::<u64>()) {
        let cs = walk(seed, 8);
        let last = cs.last().unwrap();
        let mut engine = Engine::seeded(seed);
        engine.reserve(last);
        for m in &last.memories {
            let (after, _) = rollback(&mut engine, last, RollbackTarget::Memory(m.id())).unwrap();
            prop_assert!(after.memory(m.id()).is_none());
            prop_assert!(check_consistent(&after).ok);
        }
    }

    #[test]
    fn typed_walks_agree_with_oracle_and_stay_linear(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (m, env) = typed_program(&mut r);
        prop_assert!(typecheck_process(&forgetful_map(&m), &env).is_ok());
        let mut engine = Engine::seeded(seed);
        let (configs, _) = random_walk(&mut r, &mut engine, &m, 8);
        let mut oracle = SuiteReport::new("oracle");
        let mut linear = SuiteReport::new("linearity");
        for c in &configs {
            oracle_agreement_at(c, &env, &mut oracle);
            linearity_at(c, &mut linear);
        }
        prop_assert!(oracle.passed(), "{:?}", oracle.counterexamples);
        prop_assert!(linear.passed(), "{:?}", linear.counterexamples);
    }
}

fn prop_oneof_index(seed: u64, i: u64) -> usize {
    ((seed >> (8 * i)) % 6) as usize
}

/// Every pair of threads tried against every rule, without the engine's
/// pattern matching.
fn brute_force_forward(c: &Configuration) -> BTreeSet<RedexId> {
    let mut engine = Engine::new();
    let mut out = BTreeSet::new();
    for t1 in &c.threads {
        let unary = [(Rule::If, Some(true)), (Rule::If, Some(false)), (Rule::Fork, None)];
        for (rule, branch) in unary {
            let r = RedexId { branch, ..RedexId::forward(rule, vec![t1.tag]) };
            if engine.apply_forward(c, &r).is_ok() {
                out.insert(r);
            }
        }
        for t2 in &c.threads {
            for rule in [Rule::Init, Rule::Com, Rule::Sel] {
                let r = RedexId::forward(rule, vec![t1.tag, t2.tag]);
                if engine.apply_forward(c, &r).is_ok() {
                    out.insert(r);
                }
            }
        }
    }
    out
}

#[test]
fn mutations_break_the_loop_lemma() {
    for mutation in [Mutation::BackwardForgetsPassive, Mutation::BackwardForgetsPayload] {
        let mut engine = Engine::new().with_mutation(Some(mutation));
        let mut report = SuiteReport::new("loop-lemma");
        for seed in 0..40 {
            for c in walk(seed, 6) {
                loop_lemma_at(&mut engine, &c, &mut report);
            }
        }
        assert!(!report.passed(), "{mutation:?} went unnoticed");
    }
}

#[test]
fn fresh_names_are_distinct_and_reproducible() {
    let mut e = Engine::new();
    let tags: BTreeSet<_> = (0..100_000).map(|_| e.fresh_tag()).collect();
    assert_eq!(tags.len(), 100_000);
    let avoid = BTreeSet::new();
    let sessions: BTreeSet<_> = (0..1000).map(|_| e.fresh_session(&avoid)).collect();
    assert_eq!(sessions.len(), 1000);
    let draw = |seed| {
        let mut e = Engine::seeded(seed);
        (0..20).map(|_| e.fresh_tag()).collect::<Vec<_>>()
    };
    assert_eq!(draw(5), draw(5));
    assert_ne!(draw(5), draw(6));
}

#[test]
fn capture_is_avoided() {
    // new a in x!<a>.0 with x := a renames the bound channel.
    let p = Process::new_chan(
        Channel::Shared(sym("a")),
        Process::Send { chan: Atom::var("x"), payload: Expr::val(Value::Shared(sym("a"))), body: Box::new(Process::Nil) },
    );
    let q = substitute(&p, &Substitution::single(sym("x"), Value::Shared(sym("a"))));
    let Process::New { chan, body } = &q else { panic!("{q:?}") };
    assert_ne!(chan.symbol().as_ref(), "a");
    let Process::Send { chan: target, payload, .. } = body.as_ref() else { panic!() };
    assert_eq!(*target, Atom::shared("a"));
    assert_eq!(*payload, Expr::val(Value::Shared(chan.symbol().clone())));
}

#[test]
fn session_types_of_generated_programs_are_closed() {
    for seed in 0..50 {
        let (_, env) = typed_program(&mut rng(seed));
        for t in env.channels.values() {
            assert!(!matches!(t, SessionType::Var { .. }));
        }
    }
}
