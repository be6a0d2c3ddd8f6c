//! Executable property suites: the loop lemma, the correspondence with the
//! host calculus, causal consistency, unique origins, structural
//! consistency and subject reduction.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::config::{forgetful_map, Configuration};
use crate::congruence::{alpha_tag_equal, process_congruent, Canonical};
use crate::history::{check_consistent, has_unique_origin, Classifier, Equivalence, Trace};
use crate::host::host_reductions;
use crate::reduction::{enumerate, enumerate_forward, Direction, Engine, Step};
use crate::syntax::{Endpoint, Rule};
use crate::types::{typecheck_config, typing_oracle, ConfigVerdict, TypeEnv};

/// Forks allowed before a host reduction must be matched.
pub const FORK_BOUND: usize = 16;
/// States explored by exhaustive searches before giving up.
pub const STATE_CAP: usize = 20_000;

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub description: String,
    /// Serialized traces that exhibit the failure.
    pub witness: Vec<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub checked: usize,
    pub counterexamples: Vec<Counterexample>,
    /// Cases counted apart from the pass/fail tally.
    pub notes: BTreeMap<String, usize>,
}

impl SuiteReport {
    pub fn new(name: &str) -> Self {
        SuiteReport { name: name.to_string(), ..SuiteReport::default() }
    }

    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }

    pub fn note(&mut self, key: &str) {
        *self.notes.entry(key.to_string()).or_default() += 1;
    }

    fn fail(&mut self, description: String, witness: Vec<String>) {
        self.counterexamples.push(Counterexample { description, witness });
    }

    pub fn merge(&mut self, other: SuiteReport) {
        self.checked += other.checked;
        self.counterexamples.extend(other.counterexamples);
        for (k, v) in other.notes {
            *self.notes.entry(k).or_default() += v;
        }
    }

    pub fn summary(&self) -> String {
        let notes: Vec<String> = self.notes.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let notes = if notes.is_empty() { String::new() } else { format!(" ({})", notes.join(", ")) };
        format!("{}: {} checked, {} counterexamples{notes}", self.name, self.checked, self.counterexamples.len())
    }
}

fn witness(m: &Configuration, steps: &[Step]) -> String {
    Trace { initial: m.clone(), steps: steps.to_vec() }.to_text()
}

/// Every step from `m` is undone by its mirror, forward and backward.
pub fn loop_lemma_at(engine: &mut Engine, m: &Configuration, report: &mut SuiteReport) {
    for r in enumerate(m) {
        report.checked += 1;
        let (n, step) = match engine.apply(m, &r) {
            Ok(x) => x,
            Err(e) => {
                report.fail(format!("enabled redex {r} failed to apply: {e}"), vec![witness(m, &[])]);
                continue;
            }
        };
        match engine.apply(&n, &step.mirror()) {
            Ok((back, _)) if alpha_tag_equal(&back, m) => {}
            Ok((_, undo)) => report.fail(
                format!("{r} followed by its mirror does not return to the pre-state"),
                vec![witness(m, &[step, undo])],
            ),
            Err(e) => report.fail(format!("mirror of {r} is not enabled: {e}"), vec![witness(m, &[step])]),
        }
    }
}

/// Applies Fork steps until no thread is a parallel composition.
fn fork_closure(engine: &mut Engine, m: &Configuration) -> Configuration {
    let mut cur = m.clone();
    for _ in 0..FORK_BOUND {
        let Some(r) = enumerate_forward(&cur).into_iter().find(|r| r.rule == Rule::Fork) else { break };
        match engine.apply(&cur, &r) {
            Ok((next, _)) => cur = next,
            Err(_) => break,
        }
    }
    cur
}

/// Forward steps are host reductions (Fork steps are host identities), and
/// every host reduction is matched by a forward step after some forks.
pub fn correspondence_at(engine: &mut Engine, m: &Configuration, report: &mut SuiteReport) {
    let pm = forgetful_map(m);
    let host = host_reductions(&pm);
    for r in enumerate_forward(m) {
        report.checked += 1;
        let Ok((n, step)) = engine.apply(m, &r) else {
            report.fail(format!("enabled redex {r} failed to apply"), vec![witness(m, &[])]);
            continue;
        };
        let pn = forgetful_map(&n);
        if r.rule == Rule::Fork {
            if process_congruent(&pm, &pn) {
                report.note("fork-stutter");
            } else {
                report.fail(format!("fork {r} changes the host process"), vec![witness(m, &[step])]);
            }
        } else if !host.iter().any(|q| process_congruent(q, &pn)) {
            report.fail(format!("forward step {r} has no matching host reduction"), vec![witness(m, &[step])]);
        }
    }
    if host.is_empty() {
        return;
    }
    let forked = fork_closure(engine, m);
    let successors: Vec<_> = enumerate_forward(&forked)
        .into_iter()
        .filter(|r| r.rule != Rule::Fork)
        .filter_map(|r| engine.apply(&forked, &r).ok())
        .map(|(n, _)| forgetful_map(&n))
        .collect();
    for q in &host {
        report.checked += 1;
        if !successors.iter().any(|pn| process_congruent(pn, q)) {
            report.fail(
                format!("host reduction to `{}` has no matching forward step", crate::parser::print_process(q)),
                vec![witness(m, &[])],
            );
        }
    }
}

/// States reachable from `m` within `depth` steps in either direction.
pub fn explore(engine: &mut Engine, m: &Configuration, depth: usize, cap: usize) -> (Vec<Configuration>, bool) {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut queue = VecDeque::from([(m.clone(), 0usize)]);
    seen.insert(m.clone());
    let mut complete = true;
    while let Some((c, d)) = queue.pop_front() {
        out.push(c.clone());
        if d == depth {
            continue;
        }
        for r in enumerate(&c) {
            let Ok((next, _)) = engine.apply(&c, &r) else { continue };
            if seen.len() >= cap {
                complete = false;
                break;
            }
            if seen.insert(next.clone()) {
                queue.push_back((next, d + 1));
            }
        }
    }
    (out, complete)
}

struct Run {
    trace: Trace,
    last: Configuration,
}

/// All traces from `m` that are either forward-only of length at most
/// `forward_len`, or of length at most `mixed_len`.
pub fn all_traces(engine: &mut Engine, m: &Configuration, forward_len: usize, mixed_len: usize) -> Vec<(Trace, Configuration)> {
    let mut out = Vec::new();
    let mut stack = vec![Run { trace: Trace::new(m.clone()), last: m.clone() }];
    while let Some(run) = stack.pop() {
        let len = run.trace.len();
        let forward_only = run.trace.steps.iter().all(|s| s.direction() == Direction::Forward);
        for r in enumerate(&run.last) {
            let allowed = len < mixed_len || (forward_only && r.direction == Direction::Forward && len < forward_len);
            if !allowed {
                continue;
            }
            let Ok((next, step)) = engine.apply(&run.last, &r) else { continue };
            let mut trace = run.trace.clone();
            trace.push(step);
            stack.push(Run { trace, last: next });
        }
        out.push((run.trace, run.last));
    }
    out
}

/// Groups configurations into alpha-equivalence classes.
fn alpha_classes(configs: &[&Configuration]) -> Vec<usize> {
    let canon: Vec<Canonical> = configs.iter().map(|c| Canonical::of(c)).collect();
    let mut reps: Vec<usize> = Vec::new();
    let mut class = Vec::with_capacity(configs.len());
    for i in 0..canon.len() {
        let sig = canon[i].signature();
        let found = reps.iter().position(|&r| canon[r].signature() == sig && canon[r].equivalent(&canon[i]));
        match found {
            Some(k) => class.push(k),
            None => {
                class.push(reps.len());
                reps.push(i);
            }
        }
    }
    class
}

/// For every pair of coinitial traces, causal equivalence holds exactly
/// when the traces are cofinal.
pub fn causal_consistency(engine: &mut Engine, m: &Configuration, forward_len: usize, mixed_len: usize) -> SuiteReport {
    let mut report = SuiteReport::new("causal-consistency");
    let runs = all_traces(engine, m, forward_len, mixed_len);
    let bound = forward_len.max(mixed_len);
    let mut classifier = Classifier::new(m.clone(), bound, crate::history::DEFAULT_STATE_CAP);
    let mut ids = Vec::with_capacity(runs.len());
    for (t, _) in &runs {
        match classifier.add(t) {
            Ok(i) => ids.push(i),
            Err(e) => {
                report.fail(format!("trace could not be classified: {e}"), vec![t.to_text()]);
                return report;
            }
        }
    }
    let finals: Vec<&Configuration> = runs.iter().map(|(_, c)| c).collect();
    let classes = alpha_classes(&finals);
    report.notes.insert("traces".into(), runs.len());
    for i in 0..runs.len() {
        for j in i..runs.len() {
            report.checked += 1;
            let cofinal = classes[i] == classes[j];
            let verdict = classifier.equivalence(ids[i], ids[j]);
            let ok = match verdict {
                Equivalence::Equivalent => cofinal,
                Equivalence::NotEquivalent => !cofinal,
                Equivalence::Indeterminate => {
                    report.note("indeterminate");
                    continue;
                }
            };
            if cofinal {
                report.note("cofinal-pairs");
            }
            if !ok {
                let what = if cofinal { "cofinal but not causally equivalent" } else { "causally equivalent but not cofinal" };
                report.fail(format!("traces {i} and {j} are {what}"), vec![runs[i].0.to_text(), runs[j].0.to_text()]);
            }
        }
    }
    report
}

/// All maximal backward sequences from `m` end at alpha-equal states.
pub fn unique_origin_at(engine: &Engine, m: &Configuration, report: &mut SuiteReport) {
    report.checked += 1;
    match has_unique_origin(engine, m, STATE_CAP) {
        Some(true) => {}
        Some(false) => report.fail("backward normal forms differ".into(), vec![witness(m, &[])]),
        None => report.note("search-capped"),
    }
}

pub fn consistency_at(m: &Configuration, report: &mut SuiteReport) {
    report.checked += 1;
    let r = check_consistent(m);
    if !r.ok {
        let kinds: Vec<String> = r.violations.iter().map(|v| format!("{}: {}", v.kind, v.detail)).collect();
        report.fail(format!("reachable configuration is inconsistent: {}", kinds.join("; ")), vec![witness(m, &[])]);
    }
}

/// At most one live thread holds each session endpoint.
pub fn linearity_at(m: &Configuration, report: &mut SuiteReport) {
    report.checked += 1;
    let mut holders: BTreeMap<Endpoint, usize> = BTreeMap::new();
    for t in &m.threads {
        for e in t.body.free_endpoints() {
            *holders.entry(e).or_default() += 1;
        }
    }
    if let Some((e, n)) = holders.iter().find(|(_, n)| **n > 1) {
        report.fail(format!("endpoint {e:?} is held by {n} threads"), vec![witness(m, &[])]);
    }
}

/// Configuration typing agrees with typing the origin, on in-class states.
pub fn oracle_agreement_at(m: &Configuration, env: &TypeEnv, report: &mut SuiteReport) {
    match typecheck_config(m, env) {
        ConfigVerdict::OutOfClass { .. } => report.note("out-of-class"),
        v => {
            report.checked += 1;
            let oracle = typing_oracle(m, env);
            if v.is_well_typed() != oracle.is_well_typed() {
                report.fail(
                    format!("configuration typing says {} but the oracle says {}", verdict_name(&v), verdict_name(&oracle)),
                    vec![witness(m, &[])],
                );
            }
        }
    }
}

fn verdict_name(v: &ConfigVerdict) -> String {
    match v {
        ConfigVerdict::WellTyped { .. } => "well-typed".into(),
        ConfigVerdict::IllTyped { error } => format!("ill-typed ({})", error.kind),
        ConfigVerdict::OutOfClass { reason } => format!("out of class ({reason})"),
    }
}

/// Every step from a well-typed state within `depth` steps of `m` leads to
/// a well-typed state.
pub fn subject_reduction(engine: &mut Engine, m: &Configuration, env: &TypeEnv, depth: usize) -> SuiteReport {
    let mut report = SuiteReport::new("subject-reduction");
    let (states, complete) = explore(engine, m, depth, STATE_CAP);
    if !complete {
        report.note("search-capped");
    }
    report.notes.insert("states".into(), states.len());
    for s in &states {
        if !typecheck_config(s, env).is_well_typed() {
            report.note("not-well-typed");
            continue;
        }
        for r in enumerate(s) {
            let Ok((n, step)) = engine.apply(s, &r) else { continue };
            report.checked += 1;
            let v = typecheck_config(&n, env);
            if !v.is_well_typed() {
                report.fail(format!("step {r} from a well-typed state yields {}", verdict_name(&v)), vec![witness(s, &[step])]);
            }
        }
    }
    report
}

/// The suites run by the command line over the states within `bound`
/// steps of `m`: loop lemma, correspondence, causal consistency and, when
/// declarations are given, subject reduction.
pub fn check_all(engine: &mut Engine, m: &Configuration, env: Option<&TypeEnv>, bound: usize) -> Vec<SuiteReport> {
    let (states, complete) = explore(engine, m, bound, STATE_CAP);
    let mut loops = SuiteReport::new("loop-lemma");
    let mut corr = SuiteReport::new("correspondence");
    let mut origin = SuiteReport::new("unique-origin");
    let mut consistency = SuiteReport::new("consistency");
    if !complete {
        loops.note("search-capped");
    }
    for s in &states {
        loop_lemma_at(engine, s, &mut loops);
        correspondence_at(engine, s, &mut corr);
        unique_origin_at(engine, s, &mut origin);
        consistency_at(s, &mut consistency);
    }
    let mut out = vec![loops, corr, causal_consistency(engine, m, bound, bound.saturating_sub(1).max(1)), origin, consistency];
    if let Some(env) = env {
        out.push(subject_reduction(engine, m, env, bound));
    }
    out
}
