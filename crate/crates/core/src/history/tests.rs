use super::*;
use crate::congruence::alpha_tag_equal;
use crate::parser::parse_configuration;
use crate::reduction::{enumerate_forward, Engine, RedexId};
use crate::scenarios;
use crate::syntax::{MemoryId, Rule, Tag};

fn cfg(s: &str) -> crate::Configuration {
    parse_configuration(s).unwrap()
}

/// Runs the first enabled forward redex `n` times.
fn run(m: &crate::Configuration, n: usize, engine: &mut Engine) -> Trace {
    let mut trace = Trace::new(m.clone());
    let mut cur = m.clone();
    for _ in 0..n {
        let r = enumerate_forward(&cur).into_iter().next().unwrap();
        let (next, step) = engine.apply(&cur, &r).unwrap();
        trace.push(step);
        cur = next;
    }
    trace
}

#[test]
fn graph_of_one_init() {
    let m = cfg("t1 : req a(x). x!<1>.0 | t2 : acc a(y). y?(z).0");
    assert!(build_graph(&m).edges.is_empty());
    let mut e = Engine::new();
    let n = run(&m, 1, &mut e).final_configuration().unwrap();
    let g = build_graph(&n);
    assert_eq!(g.memory_nodes().count(), 1);
    assert_eq!(g.thread_nodes().count(), 2);
    assert_eq!(g.edges.len(), 2);
    assert_eq!(MemoryGraph::from_dot(&g.to_dot()).unwrap(), g);
}

#[test]
fn broken_connection_and_duplicates() {
    let orphan = cfg("new t2 in (t3 : 0 | [cho t1 -> t2 : if true then 0 else 0])");
    let r = check_consistent(&orphan);
    assert!(!r.ok && r.has(ViolationKind::BrokenConnection), "{r:?}");
    let mut dup = cfg("t1 : 0 | t2 : 0");
    dup.threads[1].tag = Tag(1);
    assert!(check_consistent(&dup).has(ViolationKind::DuplicateTag));
    let unbound = cfg("t2 : 0 | [cho t1 -> t2 : if true then 0 else 0]");
    assert!(check_consistent(&unbound).has(ViolationKind::UnboundName));
}

#[test]
fn trace_text_round_trip() {
    let mut e = Engine::seeded(3);
    let t = run(&scenarios::providers(), 5, &mut e);
    let text = t.to_text();
    let back = Trace::from_text(&text, None).unwrap();
    assert_eq!(back, t);
    assert_eq!(back.configurations().unwrap().len(), 6);
}

#[test]
fn rollback_of_init_undoes_the_session() {
    let m = scenarios::providers();
    let mut e = Engine::new();
    let t = run(&m, 5, &mut e);
    let n = t.final_configuration().unwrap();
    assert_eq!(n.memories.len(), 5);
    let init = n.memories.iter().find(|x| x.rule() == Rule::Init).unwrap().id();
    let (back, undo) = rollback(&mut e, &n, RollbackTarget::Memory(init)).unwrap();
    assert_eq!(undo.len(), 5);
    assert!(alpha_tag_equal(&back, &m));
    assert!(check_consistent(&back).ok);
    let last = n.memories.iter().max_by_key(|x| x.id()).unwrap().id();
    let (_, single) = rollback(&mut e, &n, RollbackTarget::Memory(last)).unwrap();
    assert_eq!(single.len(), 1);
    assert!(matches!(
        rollback(&mut e, &n, RollbackTarget::Memory(MemoryId(Tag(999)))),
        Err(RollbackError::NotFound(_))
    ));
}

#[test]
fn swapped_and_cancelled_traces() {
    let m = scenarios::two_sessions();
    let rs = enumerate_forward(&m);
    assert_eq!(rs.len(), 2);
    let mut e = Engine::new();
    let (a1, sa) = e.apply(&m, &rs[0]).unwrap();
    let (_, sb) = e.apply(&a1, &rs[1]).unwrap();
    let t1 = Trace { initial: m.clone(), steps: vec![sa.clone(), sb.clone()] };
    let mut e2 = Engine::seeded(9);
    let (b1, sb2) = e2.apply(&m, &rs[1]).unwrap();
    let (_, sa2) = e2.apply(&b1, &rs[0]).unwrap();
    let t2 = Trace { initial: m.clone(), steps: vec![sb2, sa2] };
    assert_eq!(causally_equivalent(&t1, &t2).unwrap(), Equivalence::Equivalent);
    assert!(cofinal(&t1, &t2).unwrap());

    let (_, undo) = e.apply(&a1, &sa.mirror()).unwrap();
    let there_and_back = Trace { initial: m.clone(), steps: vec![sa, undo] };
    assert_eq!(causally_equivalent(&there_and_back, &Trace::new(m.clone())).unwrap(), Equivalence::Equivalent);
    assert_eq!(causally_equivalent(&there_and_back, &t1).unwrap(), Equivalence::NotEquivalent);
}

#[test]
fn branches_are_not_cofinal() {
    let m = cfg("t1 : if true then a!<1>.0 else 0 | t2 : if false then 0 else b!<1>.0");
    let mut e = Engine::new();
    let r1 = RedexId { branch: Some(true), ..RedexId::forward(Rule::If, vec![Tag(1)]) };
    let (n1, s1) = e.apply(&m, &r1).unwrap();
    let t1 = Trace { initial: m.clone(), steps: vec![s1] };
    let r2 = RedexId { branch: Some(false), ..RedexId::forward(Rule::If, vec![Tag(2)]) };
    let (_, s2) = e.apply(&m, &r2).unwrap();
    let t2 = Trace { initial: m.clone(), steps: vec![s2] };
    assert!(!cofinal(&t1, &t2).unwrap());
    assert_eq!(causally_equivalent(&t1, &t2).unwrap(), Equivalence::NotEquivalent);
    assert!(has_unique_origin(&e, &n1, 1000).unwrap());
}
