use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use respi_bench::{pairs, run_to_end};
use respi_core::history::{causally_equivalent, rollback, RollbackTarget, Trace};
use respi_core::types::typecheck_process;
use respi_core::{
    build_graph, check_consistent, enumerate, forgetful_map, parse_configuration, print_configuration, scenarios,
    enumerate_forward, Engine,
};

fn enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate");
    for n in [4, 16, 64] {
        let m = pairs(n, 4);
        let mut engine = Engine::new();
        let mid = run_to_end(&mut engine, &m).configurations().unwrap()[n * 3].clone();
        group.bench_with_input(BenchmarkId::from_parameter(n), &mid, |b, m| b.iter(|| enumerate(black_box(m))));
    }
    group.finish();
}

fn forward_run(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward_run");
    for n in [4, 16] {
        let m = pairs(n, 4);
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| run_to_end(&mut Engine::new(), black_box(m)))
        });
    }
    group.finish();
}

fn full_rollback(c: &mut Criterion) {
    let m = pairs(8, 4);
    let mut engine = Engine::new();
    let last = run_to_end(&mut engine, &m).final_configuration().unwrap();
    let root = last.memories.iter().map(|x| x.id()).min().unwrap();
    c.bench_function("rollback_pairs_8", |b| {
        b.iter(|| rollback(&mut engine.clone(), black_box(&last), RollbackTarget::Memory(root)).unwrap())
    });
}

fn equivalence(c: &mut Criterion) {
    let m = scenarios::two_sessions();
    let mut engine = Engine::new();
    let a = run_to_end(&mut engine, &m);
    // The same run, scheduling the other session first.
    let mut b = Trace::new(m.clone());
    let mut cur = m;
    while let Some(r) = enumerate_forward(&cur).into_iter().last() {
        let (next, step) = engine.apply(&cur, &r).unwrap();
        b.push(step);
        cur = next;
    }
    c.bench_function("causal_equivalence_two_sessions", |bch| {
        bch.iter(|| causally_equivalent(black_box(&a), black_box(&b)).unwrap())
    });
}

fn history(c: &mut Criterion) {
    let m = pairs(16, 4);
    let last = run_to_end(&mut Engine::new(), &m).final_configuration().unwrap();
    c.bench_function("build_graph_pairs_16", |b| b.iter(|| build_graph(black_box(&last))));
    c.bench_function("check_consistent_pairs_16", |b| b.iter(|| check_consistent(black_box(&last))));
    let text = print_configuration(&last);
    c.bench_function("parse_pairs_16", |b| b.iter(|| parse_configuration(black_box(&text)).unwrap()));
}

fn typing(c: &mut Criterion) {
    let p = forgetful_map(&scenarios::providers());
    let env = scenarios::providers_env();
    c.bench_function("typecheck_providers", |b| b.iter(|| typecheck_process(black_box(&p), &env).unwrap()));
}

criterion_group!(benches, enumeration, forward_run, full_rollback, equivalence, history, typing);
criterion_main!(benches);
