//! Worked examples for each public operation.

use respi_core::history::{causally_equivalent, cofinal, rollback, RollbackTarget, ViolationKind};
use respi_core::parser::parse_session_type;
use respi_core::types::{typecheck_config, typecheck_process, typing_oracle, ConfigVerdict, SessionType, TypeErrorKind};
use respi_core::{
    alpha_tag_equal, build_graph, check_consistent, concurrent, enumerate_backward, enumerate_forward, eval,
    forgetful_map, parse_configuration, parse_process, print_configuration, print_process, process_congruent,
    scenarios, struct_congruent, substitute, sym, Configuration, Endpoint, Engine, Equivalence, Memory, RedexId, Rule,
    Substitution, Tag, Trace, Value,
};

fn cfg(s: &str) -> Configuration {
    parse_configuration(s).unwrap_or_else(|e| panic!("{e}: {s}"))
}

fn first(engine: &mut Engine, m: &Configuration) -> (Configuration, respi_core::Step) {
    let r = enumerate_forward(m).into_iter().next().expect("a forward redex");
    engine.apply(m, &r).unwrap()
}

fn run(engine: &mut Engine, m: &Configuration, redexes: &[&str]) -> Trace {
    let mut t = Trace::new(m.clone());
    let mut cur = m.clone();
    for r in redexes {
        let (next, step) = engine.apply(&cur, &r.parse::<RedexId>().unwrap()).unwrap();
        t.push(step);
        cur = next;
    }
    t
}

#[test]
fn substitution() {
    // Parsing would read a free `x` as an endpoint.
    let p = respi_core::Process::Send {
        chan: respi_core::Atom::var("x"),
        payload: respi_core::Expr::nat(1),
        body: Box::new(respi_core::Process::Nil),
    };
    let q = substitute(&p, &Substitution::single(sym("x"), Value::Endpoint(Endpoint::minus("s"))));
    assert_eq!(print_process(&q), "~s!<1>.0");
    assert_eq!(substitute(&p, &Substitution::new()), p);
}

#[test]
fn evaluation() {
    let e = |s: &str| parse_process(&format!("if {s} then 0 else 0")).unwrap();
    let guard = |s: &str| match e(s) {
        respi_core::Process::If { guard, .. } => guard,
        _ => unreachable!(),
    };
    assert_eq!(eval(&guard("1 + 2 == 3"), &Substitution::new()).unwrap(), Value::Bool(true));
    assert_eq!(eval(&guard("x <= 100"), &Substitution::single(sym("x"), Value::Nat(80))).unwrap(), Value::Bool(true));
    assert_eq!(eval(&guard("not(true)"), &Substitution::new()).unwrap(), Value::Bool(false));
}

#[test]
fn congruence() {
    assert!(struct_congruent(&cfg("t1 : 0 | nil"), &cfg("t1 : 0")));
    let a = parse_process("new s in (s!<1>.0 | ~s?(x).0)").unwrap();
    let b = parse_process("new s in (~s?(x).0 | s!<1>.0)").unwrap();
    assert!(process_congruent(&a, &b));
    let r = parse_process("rec X. acc a(x). X").unwrap();
    let unfolded = parse_process("acc a(x). rec X. acc a(x). X").unwrap();
    assert!(process_congruent(&r, &unfolded));
    assert!(!process_congruent(&r, &parse_process("acc a(x). 0").unwrap()));
}

#[test]
fn forgetful_map_examples() {
    let p = parse_process("req a(x). x!<1>.0").unwrap();
    assert_eq!(forgetful_map(&Configuration::from_process(p.clone())), p);
    assert!(process_congruent(&forgetful_map(&cfg("nil")), &parse_process("0").unwrap()));
    let mut e = Engine::new();
    let (n, _) = first(&mut e, &cfg("t1 : req a(x). x!<1>.0 | t2 : acc a(y). y?(z).0"));
    let expected = parse_process("new s in (~s!<1>.0 | s?(z).0)").unwrap();
    assert!(process_congruent(&forgetful_map(&n), &expected));
}

#[test]
fn alpha_tag_equality() {
    let m = cfg("t1 : 0 | t2 : req a(x).0");
    assert!(alpha_tag_equal(&m, &m));
    assert!(alpha_tag_equal(&cfg("new t1 in t1 : acc a(y).0"), &cfg("new t9 in t9 : acc a(y).0")));
    let m = cfg("t1 : req a(x). x!<1>.0 | t2 : acc a(y). y?(z).0");
    let (a, _) = first(&mut Engine::seeded(1), &m);
    let (b, _) = first(&mut Engine::seeded(2), &m);
    assert_ne!(a, b);
    assert!(alpha_tag_equal(&a, &b));
}

#[test]
fn parsing_and_printing() {
    let p = parse_process("req a(x). x!<1>. 0").unwrap();
    assert!(matches!(&p, respi_core::Process::Request { body, .. } if matches!(**body, respi_core::Process::Send { .. })));
    let b = parse_process("acc a(y). y?(z). y |> { ok: 0, no: 0 }").unwrap();
    assert_eq!(print_process(&b), "acc a(y).y?(z).y |> {ok: 0, no: 0}");
    assert_eq!(cfg("t1 : 0 | t2 : 0").threads.len(), 2);
    assert!(cfg("nil").is_empty());
    assert_eq!(print_process(&parse_process("0").unwrap()), "0");
    let m = cfg("new s, t1, t2 in (t1 : ~s!<1>.0 | t2 : s?(x).0 | [act t5,t9 -> t1,t2 : init(a, x, y, x!<1>.0, y?(x).0, s)])");
    assert_eq!(m.memories.len(), 1);
    assert_eq!(cfg(&print_configuration(&m)), m);
}

#[test]
fn forward_enumeration() {
    let m = cfg("t1 : req a(x).0 | t2 : acc a(y).0");
    assert_eq!(enumerate_forward(&m), vec![RedexId::forward(Rule::Init, vec![Tag(1), Tag(2)])]);
    assert!(enumerate_forward(&cfg("t1 : 0")).is_empty());
    let m = cfg("new s in (t1 : ~s!<1>.0 | t2 : s?(x).0 | t3 : if true then 0 else 0)");
    let rs: Vec<String> = enumerate_forward(&m).iter().map(|r| r.to_string()).collect();
    assert_eq!(rs, ["fwd:Com:t1,t2", "fwd:If:t3:then"]);
}

#[test]
fn forward_steps() {
    let mut e = Engine::new();
    let (n, step) = first(&mut e, &cfg("t1 : req a(x). x!<1>.0 | t2 : acc a(y). y?(z).0"));
    assert_eq!(step.produced.tags.len(), 2);
    assert!(matches!(step.memory(), Memory::Action { .. }));
    let s = step.memory().session().unwrap().clone();
    let expected = format!(
        "new {s}, t3, t4 in (t3 : ~{s}!<1>.0 | t4 : {s}?(z).0 | [act t1,t2 -> t3,t4 : init(a, x, y, x!<1>.0, y?(z).0, {s})])"
    );
    assert!(alpha_tag_equal(&n, &cfg(&expected)), "{}", print_configuration(&n));

    let (n, _) = first(&mut e, &cfg("t1 : if 1 <= 1 then 0 else acc a(y).0"));
    assert!(alpha_tag_equal(&n, &cfg("new t2 in (t2 : 0 | [cho t1 -> t2 : if 1 <= 1 then 0 else acc a(y).0])")));

    let (n, _) = first(&mut e, &cfg("t1 : (0 | 0)"));
    assert!(alpha_tag_equal(&n, &cfg("new t2, t3 in (t2 : 0 | t3 : 0 | [fork t1 -> t2, t3])")));
}

#[test]
fn backward_enumeration_and_steps() {
    let mut e = Engine::new();
    let m = cfg("t1 : req a(x). x!<1>.0 | t2 : acc a(y). y?(z).0");
    let (n, step) = first(&mut e, &m);
    assert_eq!(enumerate_backward(&n), vec![step.mirror()]);
    let (back, _) = e.apply(&n, &step.mirror()).unwrap();
    assert!(struct_congruent(&back, &m));
    let (n2, step2) = first(&mut e, &n);
    assert_eq!(enumerate_backward(&n2), vec![step2.mirror()]);
    assert!(enumerate_backward(&m).is_empty());

    let fork = cfg("new t2, t3 in (t2 : req a(x).0 | t3 : acc a(y).0 | [fork t1 -> t2, t3])");
    let r = enumerate_backward(&fork).pop().unwrap();
    let (back, _) = e.apply(&fork, &r).unwrap();
    assert!(alpha_tag_equal(&back, &cfg("t1 : (req a(x).0 | acc a(y).0)")));
}

#[test]
fn fresh_names() {
    let mut e = Engine::new();
    assert_ne!(e.fresh_tag(), e.fresh_tag());
    let seq = |seed| {
        let mut e = Engine::seeded(seed);
        (0..5).map(|_| e.fresh_tag()).collect::<Vec<_>>()
    };
    assert_eq!(seq(3), seq(3));
}

#[test]
fn memory_graphs() {
    let g = build_graph(&cfg("t1 : 0 | t2 : 0"));
    assert_eq!(g.thread_nodes().count(), 2);
    assert!(g.edges.is_empty());
    let mut e = Engine::new();
    let mut cur = scenarios::providers();
    for r in ["fwd:Init:t1,t2"] {
        cur = e.apply(&cur, &r.parse().unwrap()).unwrap().0;
    }
    for _ in 0..4 {
        cur = first(&mut e, &cur).0;
    }
    let g = build_graph(&cur);
    assert_eq!(g.memory_nodes().count(), 5);
    // Init, Com, Com and Sel link the two session threads; If consumes one.
    assert_eq!(g.edges.len(), 2 + 2 + 2 + 1 + 2);
    assert!(g.is_acyclic());
}

#[test]
fn consistency_examples() {
    let mut e = Engine::new();
    let mut cur = scenarios::providers();
    for _ in 0..5 {
        cur = first(&mut e, &cur).0;
        assert!(check_consistent(&cur).ok);
    }
    let orphan = cfg("new t2 in (t3 : 0 | [cho t1 -> t2 : if true then 0 else 0])");
    assert!(check_consistent(&orphan).has(ViolationKind::BrokenConnection));
    let mut dup = cfg("t1 : 0 | t2 : 0");
    dup.threads[1].tag = Tag(1);
    assert!(check_consistent(&dup).has(ViolationKind::DuplicateTag));
}

#[test]
fn rollback_examples() {
    let m = scenarios::two_sessions();
    let mut e = Engine::new();
    let t = run(&mut e, &m, &["fwd:Init:t1,t2", "fwd:Init:t3,t4"]);
    let mut cur = t.final_configuration().unwrap();
    for _ in 0..2 {
        cur = first(&mut e, &cur).0;
    }
    let a_init = t.steps[0].memory().id();
    let b_init = t.steps[1].memory().id();
    let b_count = cur.memories.iter().filter(|x| x.session() == t.steps[1].memory().session()).count();
    let (after, undo) = rollback(&mut e, &cur, RollbackTarget::Memory(a_init)).unwrap();
    assert!(after.memory(a_init).is_none());
    assert!(after.memory(b_init).is_some());
    assert_eq!(after.memories.len(), b_count);
    assert_eq!(undo.len(), cur.memories.len() - b_count);

    let leaf = cur.memories.iter().map(|x| x.id()).max().unwrap();
    let (_, undo) = rollback(&mut e, &cur, RollbackTarget::Memory(leaf)).unwrap();
    assert_eq!(undo.len(), 1);
}

#[test]
fn concurrency_examples() {
    let m = scenarios::providers();
    let rs = enumerate_forward(&m);
    // Both Inits need the client.
    assert!(!concurrent(&rs[0], &rs[1]));
    let two = scenarios::two_sessions();
    let rs = enumerate_forward(&two);
    assert_eq!(rs.len(), 2);
    assert!(concurrent(&rs[0], &rs[1]));

    let mut e = Engine::new();
    let (n, step) = first(&mut e, &two);
    let next = enumerate_forward(&n).into_iter().find(|r| r.tags.contains(&step.produced.tags[0])).unwrap();
    assert!(!concurrent(&next, &step.mirror()));

    let t = run(&mut e, &two, &["fwd:Init:t1,t2", "fwd:Init:t3,t4"]);
    let last = t.final_configuration().unwrap();
    let coms = enumerate_forward(&last);
    assert_eq!(coms.iter().filter(|r| r.rule == Rule::Com).count(), 2);
    assert!(concurrent(&coms[0], &coms[1]));
}

#[test]
fn causal_equivalence_examples() {
    let m = scenarios::two_sessions();
    let mut e = Engine::new();
    let ab = run(&mut e, &m, &["fwd:Init:t1,t2", "fwd:Init:t3,t4"]);
    let ba = run(&mut e, &m, &["fwd:Init:t3,t4", "fwd:Init:t1,t2"]);
    assert_eq!(causally_equivalent(&ab, &ab).unwrap(), Equivalence::Equivalent);
    assert_eq!(causally_equivalent(&ab, &ba).unwrap(), Equivalence::Equivalent);
    assert!(cofinal(&ab, &ba).unwrap());
    assert!(cofinal(&ab, &ab).unwrap());

    let mut there_and_back = run(&mut e, &m, &["fwd:Init:t1,t2"]);
    let mirror = there_and_back.steps[0].mirror();
    let mid = there_and_back.final_configuration().unwrap();
    there_and_back.push(e.apply(&mid, &mirror).unwrap().1);
    assert_eq!(causally_equivalent(&there_and_back, &Trace::new(m.clone())).unwrap(), Equivalence::Equivalent);

    // The quote decides which branch the client's conditional takes.
    let p = scenarios::providers();
    let to_end = |e: &mut Engine, init: &str| {
        let mut t = run(e, &p, &[init]);
        let mut cur = t.final_configuration().unwrap();
        while let Some(r) = enumerate_forward(&cur).into_iter().find(|r| r.rule != Rule::Init) {
            let (next, step) = e.apply(&cur, &r).unwrap();
            t.push(step);
            cur = next;
        }
        t
    };
    let accept = to_end(&mut e, "fwd:Init:t1,t2");
    let negotiate = to_end(&mut e, "fwd:Init:t1,t3");
    let branch = |t: &Trace| t.steps.iter().find(|s| s.rule() == Rule::If).unwrap().redex.branch;
    assert_eq!((branch(&accept), branch(&negotiate)), (Some(true), Some(false)));
    assert!(!cofinal(&accept, &negotiate).unwrap());
    assert_eq!(causally_equivalent(&accept, &negotiate).unwrap(), Equivalence::NotEquivalent);
}

#[test]
fn duality() {
    assert_eq!(SessionType::End.dual(), SessionType::End);
    assert_eq!(parse_session_type("!nat.end").unwrap().dual(), parse_session_type("?nat.end").unwrap());
}

#[test]
fn process_typing() {
    let env = scenarios::providers_env();
    let ok = typecheck_process(&forgetful_map(&scenarios::providers()), &env).unwrap();
    assert!(ok.is_completed());
    let err = typecheck_process(&forgetful_map(&scenarios::parallel_requests()), &env).unwrap_err();
    assert_eq!(err.kind, TypeErrorKind::LinearityViolation);
    let nil = typecheck_process(&parse_process("0").unwrap(), &env).unwrap();
    assert!(nil.delta.is_empty());
}

#[test]
fn configuration_typing() {
    let env = scenarios::providers_env();
    match typecheck_config(&scenarios::delta_delta(), &env) {
        ConfigVerdict::IllTyped { error } => assert_eq!(error.kind, TypeErrorKind::CompositionUndefined),
        v => panic!("{v:?}"),
    }
    let mut e = Engine::new();
    let m = scenarios::providers();
    let t = run(&mut e, &m, &["fwd:Init:t1,t2"]);
    let mut cur = t.final_configuration().unwrap();
    for _ in 0..4 {
        cur = first(&mut e, &cur).0;
    }
    assert_eq!(cur.memories.len(), 5);
    assert!(typecheck_config(&cur, &env).is_well_typed());
    let memory_free = typecheck_config(&m, &env);
    let direct = typecheck_process(&forgetful_map(&m), &env).unwrap();
    assert_eq!(memory_free, ConfigVerdict::WellTyped { typing: direct });
}

#[test]
fn typing_oracle_examples() {
    let env = scenarios::providers_env();
    let mut e = Engine::new();
    let mut cur = scenarios::providers();
    for _ in 0..3 {
        cur = first(&mut e, &cur).0;
    }
    assert!(typing_oracle(&cur, &env).is_well_typed());
    assert_eq!(typing_oracle(&cur, &env).is_well_typed(), typecheck_config(&cur, &env).is_well_typed());

    let bad = scenarios::parallel_requests();
    let mut cur = bad.clone();
    cur.threads.push(respi_core::Thread { tag: Tag(2), body: parse_process("acc a_login(y). y?(v). 0").unwrap() });
    let cur = Configuration::new([], cur.threads, Vec::new());
    let (after, _) = first(&mut e, &cur);
    assert!(matches!(typing_oracle(&after, &env), ConfigVerdict::IllTyped { .. }));
}
