//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use respi_core::generate::{program, random_walk, rng};
use respi_core::history::{check_consistent, rollback, RollbackTarget, ViolationKind};
use respi_core::props::{
    causal_consistency, consistency_at, correspondence_at, loop_lemma_at, subject_reduction, unique_origin_at,
    SuiteReport,
};
use respi_core::types::{naive_memory_check, typecheck_config, typecheck_process, ConfigVerdict, TypeErrorKind};
use respi_core::{
    alpha_tag_equal, enumerate_forward, forgetful_map, parse_configuration, scenarios, Configuration, Engine, Rule,
    Tag,
};

const WALK_LEN: usize = 8;
const CORPUS_SIZE: usize = 1000;
const ORIGIN_SAMPLES: usize = 200;

/// Random reachable configurations: walks of length at most 8 from
/// generated initial terms, every visited state included.
fn corpus(size: usize, seed: u64) -> Vec<Configuration> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    let mut engine = Engine::seeded(seed);
    while out.len() < size {
        let m = program(&mut r);
        let len = rand::Rng::gen_range(&mut r, 0..=WALK_LEN);
        let (configs, _) = random_walk(&mut r, &mut engine, &m, len);
        out.extend(configs);
    }
    out.truncate(size);
    out
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_reports(reports: &[SuiteReport]) -> Outcome {
    let passed = reports.iter().all(SuiteReport::passed);
    let mut detail: Vec<String> = reports.iter().map(SuiteReport::summary).collect();
    for r in reports {
        if let Some(c) = r.counterexamples.first() {
            detail.push(format!("first counterexample: {}\n{}", c.description, c.witness.join("\n")));
        }
    }
    Outcome { passed, detail: detail.join("; ") }
}

fn loop_lemma() -> Outcome {
    let mut engine = Engine::new();
    let mut report = SuiteReport::new("loop-lemma");
    let configs = corpus(CORPUS_SIZE, 1);
    for m in &configs {
        loop_lemma_at(&mut engine, m, &mut report);
    }
    report.notes.insert("configurations".into(), configs.len());
    from_reports(&[report])
}

fn correspondence() -> Outcome {
    let mut engine = Engine::new();
    let mut report = SuiteReport::new("correspondence");
    let configs = corpus(CORPUS_SIZE, 1);
    for m in &configs {
        correspondence_at(&mut engine, m, &mut report);
    }
    report.notes.insert("configurations".into(), configs.len());
    from_reports(&[report])
}

fn causal() -> Outcome {
    let mut engine = Engine::new();
    let mut a = causal_consistency(&mut engine, &scenarios::providers(), 5, 4);
    a.name = "providers".into();
    let mut b = causal_consistency(&mut engine, &scenarios::two_sessions(), 5, 4);
    b.name = "two-sessions".into();
    let indeterminate = a.notes.contains_key("indeterminate") || b.notes.contains_key("indeterminate");
    let mut out = from_reports(&[a, b]);
    out.passed &= !indeterminate;
    out
}

fn unique_origin() -> Outcome {
    let engine = Engine::new();
    let mut report = SuiteReport::new("unique-origin");
    let configs = corpus(ORIGIN_SAMPLES, 7);
    for m in &configs {
        unique_origin_at(&engine, m, &mut report);
    }
    let capped = report.notes.contains_key("search-capped");
    let mut out = from_reports(&[report]);
    out.passed &= !capped;
    out
}

/// Drives the client and the first provider to the accepted quote.
fn scenario() -> Outcome {
    let m = scenarios::providers();
    let mut engine = Engine::new();
    let mut cur = m.clone();
    let mut rules = Vec::new();
    loop {
        let rs = enumerate_forward(&cur);
        let next = rs.iter().find(|r| r.rule != Rule::Init || r.tags == [Tag(1), Tag(2)]);
        let Some(r) = next else { break };
        let (n, step) = engine.apply(&cur, r).unwrap();
        rules.push(step.rule());
        cur = n;
    }
    let kinds: Vec<Rule> = cur.memories.iter().map(|x| x.rule()).collect();
    let mut sorted = kinds.clone();
    sorted.sort();
    let five = cur.memories.len() == 5 && sorted == [Rule::Init, Rule::Com, Rule::Com, Rule::Sel, Rule::If];
    let provider2_idle = cur.thread(Tag(3)).is_some();
    let init = cur.memories.iter().find(|x| x.rule() == Rule::Init).unwrap().id();
    let (back, undo) = rollback(&mut engine, &cur, RollbackTarget::Memory(init)).unwrap();
    let restored = alpha_tag_equal(&back, &m);
    Outcome {
        passed: five && provider2_idle && restored,
        detail: format!(
            "forward steps {rules:?}; memories {kinds:?}; provider 2 untouched: {provider2_idle}; rollback of {} steps restores the initial term: {restored}",
            undo.len()
        ),
    }
}

fn types() -> Outcome {
    let env = scenarios::providers_env();
    let accepted = typecheck_process(&forgetful_map(&scenarios::providers()), &env);
    let parallel = typecheck_process(&forgetful_map(&scenarios::parallel_requests()), &env);
    let dd = scenarios::delta_delta();
    let dd_verdict = typecheck_config(&dd, &env);
    let naive = naive_memory_check(&dd, &env);
    let mut engine = Engine::new();
    let sr = subject_reduction(&mut engine, &scenarios::providers(), &env, 5);

    let ok1 = accepted.as_ref().is_ok_and(|t| t.is_completed());
    let ok2 = matches!(&parallel, Err(e) if e.kind == TypeErrorKind::LinearityViolation);
    let ok3 = matches!(&dd_verdict, ConfigVerdict::IllTyped { error } if error.kind == TypeErrorKind::CompositionUndefined);
    let ok4 = naive.is_ok();
    let ok5 = sr.passed() && sr.checked > 0 && !sr.notes.contains_key("search-capped");
    Outcome {
        passed: ok1 && ok2 && ok3 && ok4 && ok5,
        detail: format!(
            "scenario well-typed: {ok1}; parallel requests rejected with linearity-violation: {ok2}; \
             memory counterexample rejected with composition-undefined: {ok3}; naive check accepts it: {ok4}; {}",
            sr.summary()
        ),
    }
}

fn consistency() -> Outcome {
    let orphan = parse_configuration("new t2 in (t3 : 0 | [cho t1 -> t2 : if true then 0 else 0])").unwrap();
    let broken = check_consistent(&orphan).has(ViolationKind::BrokenConnection);
    let mut dup = parse_configuration("t1 : 0 | t2 : 0").unwrap();
    dup.threads[1].tag = Tag(1);
    let duplicate = check_consistent(&dup).has(ViolationKind::DuplicateTag);
    let mut report = SuiteReport::new("reachable");
    for m in corpus(CORPUS_SIZE, 1) {
        consistency_at(&m, &mut report);
    }
    let mut out = from_reports(&[report]);
    out.passed &= broken && duplicate;
    out.detail = format!("broken connection flagged: {broken}; duplicate tag flagged: {duplicate}; {}", out.detail);
    out
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("loop lemma", loop_lemma),
        ("forward/host correspondence", correspondence),
        ("causal consistency", causal),
        ("unique origin", unique_origin),
        ("providers scenario", scenario),
        ("type discipline", types),
        ("consistency checker", consistency),
    ];
    let mut all = true;
    for (name, run) in criteria {
        let start = Instant::now();
        let o = run();
        all &= o.passed;
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {name} [{:.1}s]: {}", start.elapsed().as_secs_f64(), o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
