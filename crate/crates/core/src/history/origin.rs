use std::collections::BTreeSet;

use crate::config::Configuration;
use crate::congruence::alpha_tag_equal;
use crate::reduction::{enumerate_backward, Engine};

/// The configuration reached by undoing every memory, latest first.
pub fn origin(m: &Configuration) -> Configuration {
    let mut engine = Engine::new();
    let mut current = m.clone();
    while let Some(r) = enumerate_backward(&current).into_iter().max_by_key(|r| r.memory) {
        match engine.apply_backward(&current, &r) {
            Ok((next, _)) => current = next,
            Err(_) => break,
        }
    }
    current
}

/// Every configuration at which some maximal backward sequence from `m`
/// stops, or `None` once more than `cap` states have been visited.
///
/// Backward steps create no names, so states reached along different
/// orders are equal exactly and can be shared.
pub fn backward_normal_forms(engine: &Engine, m: &Configuration, cap: usize) -> Option<Vec<Configuration>> {
    let mut engine = engine.clone();
    let mut seen = BTreeSet::new();
    let mut finals = BTreeSet::new();
    let mut stack = vec![m.clone()];
    seen.insert(m.clone());
    while let Some(c) = stack.pop() {
        let redexes = enumerate_backward(&c);
        let mut stuck = true;
        for r in redexes {
            let Ok((next, _)) = engine.apply_backward(&c, &r) else { continue };
            stuck = false;
            if seen.insert(next.clone()) {
                if seen.len() > cap {
                    return None;
                }
                stack.push(next);
            }
        }
        if stuck {
            finals.insert(c);
        }
    }
    Some(finals.into_iter().collect())
}

/// Whether all maximal backward sequences from `m` end in alpha-equal
/// configurations. `None` when the search exceeds `cap` states.
pub fn has_unique_origin(engine: &Engine, m: &Configuration, cap: usize) -> Option<bool> {
    let finals = backward_normal_forms(engine, m, cap)?;
    Some(finals.windows(2).all(|w| alpha_tag_equal(&w[0], &w[1])))
}
