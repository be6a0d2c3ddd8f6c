//! Reference reducer for the host session π-calculus, without tags or
//! memories. Used to check that reversible steps simulate host reductions.

use std::collections::BTreeSet;

use crate::eval::eval_closed;
use crate::subst::{fresh_symbol, rename_channel, unfold};
use crate::syntax::{Atom, Channel, Endpoint, Polarity, Process, Symbol, Value};

/// Bound on nested head unfoldings when flattening a process.
const UNFOLD_DEPTH: usize = 16;

/// `(ν chans)(components)` with every component exposing a prefix.
struct Soup {
    chans: Vec<Channel>,
    parts: Vec<Process>,
    used: BTreeSet<Symbol>,
}

impl Soup {
    fn of(p: &Process) -> Soup {
        let mut used = BTreeSet::new();
        p.symbols(&mut used);
        let mut soup = Soup { chans: Vec::new(), parts: Vec::new(), used };
        soup.add(p.clone(), 0);
        soup
    }

    fn add(&mut self, p: Process, depth: usize) {
        match p {
            Process::Nil => {}
            Process::Par { left, right } => {
                self.add(*left, depth);
                self.add(*right, depth);
            }
            Process::New { chan, body } => {
                let (chan, body) = if self.chans.iter().any(|c| c.symbol() == chan.symbol()) {
                    let fresh = fresh_symbol(chan.symbol(), &self.used);
                    let body = rename_channel(&body, &chan, fresh.clone());
                    (chan.with_symbol(fresh), body)
                } else {
                    (chan, *body)
                };
                self.used.insert(chan.symbol().clone());
                self.chans.push(chan);
                self.add(body, depth);
            }
            Process::Rec { var, body } if depth < UNFOLD_DEPTH => self.add(unfold(&var, &body), depth + 1),
            other => self.parts.push(other),
        }
    }

    fn rebuild(&self, replaced: &[(usize, Process)], extra: Option<Channel>) -> Process {
        let mut parts = self.parts.clone();
        for (i, p) in replaced {
            parts[*i] = p.clone();
        }
        let chans: Vec<Channel> = self.chans.iter().cloned().chain(extra).collect();
        let body = Process::par_all(parts);
        let free = body.free_channels();
        chans.into_iter().rev().filter(|c| free.contains(c)).fold(body, |acc, c| Process::new_chan(c, acc))
    }
}

fn endpoint(a: &Atom) -> Option<&Endpoint> {
    a.as_endpoint()
}

/// Every process reachable from `p` in one host reduction.
pub fn host_reductions(p: &Process) -> Vec<Process> {
    let soup = Soup::of(p);
    let mut out = Vec::new();
    for (i, pi) in soup.parts.iter().enumerate() {
        if let Process::If { guard, then_branch, else_branch } = pi {
            if let Ok(Value::Bool(b)) = eval_closed(guard) {
                let next = if b { then_branch } else { else_branch };
                out.push(soup.rebuild(&[(i, (**next).clone())], None));
            }
        }
        for (j, pj) in soup.parts.iter().enumerate() {
            if i == j {
                continue;
            }
            match (pi, pj) {
                (Process::Request { chan: c1, var: x, body: p1 }, Process::Accept { chan: c2, var: y, body: p2 }) => {
                    let (Some(a), Some(b)) = (c1.as_shared(), c2.as_shared()) else { continue };
                    if a != b {
                        continue;
                    }
                    let s = fresh_symbol("s", &soup.used);
                    let minus = Value::Endpoint(Endpoint { session: s.clone(), polarity: Polarity::Minus });
                    let plus = Value::Endpoint(Endpoint { session: s.clone(), polarity: Polarity::Plus });
                    let q1 = crate::subst::substitute_one(p1, x, minus);
                    let q2 = crate::subst::substitute_one(p2, y, plus);
                    out.push(soup.rebuild(&[(i, q1), (j, q2)], Some(Channel::Session(s))));
                }
                (Process::Send { chan: c1, payload, body: p1 }, Process::Receive { chan: c2, var: x, body: p2 }) => {
                    let (Some(k1), Some(k2)) = (endpoint(c1), endpoint(c2)) else { continue };
                    if *k2 != k1.dual() {
                        continue;
                    }
                    let Ok(v) = eval_closed(payload) else { continue };
                    let q2 = crate::subst::substitute_one(p2, x, v);
                    out.push(soup.rebuild(&[(i, (**p1).clone()), (j, q2)], None));
                }
                (Process::Select { chan: c1, label, body: p1 }, Process::Branch { chan: c2, arms }) => {
                    let (Some(k1), Some(k2)) = (endpoint(c1), endpoint(c2)) else { continue };
                    if *k2 != k1.dual() {
                        continue;
                    }
                    let Some(arm) = arms.iter().find(|a| a.label == *label) else { continue };
                    out.push(soup.rebuild(&[(i, (**p1).clone()), (j, arm.body.clone())], None));
                }
                _ => {}
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congruence::process_congruent;
    use crate::parser::parse_process;

    #[test]
    fn session_initiation() {
        let p = parse_process("req a(x). x!<1>.0 | acc a(y). y?(z).0").unwrap();
        let rs = host_reductions(&p);
        assert_eq!(rs.len(), 1);
        let expected = parse_process("new q in (~q!<1>.0 | q?(z).0)").unwrap();
        assert!(process_congruent(&rs[0], &expected));
    }

    #[test]
    fn nested_parallel_is_flattened() {
        let p = parse_process("new s in ((~s!<2>.0 | 0) | if true then s?(x).0 else 0)").unwrap();
        let rs = host_reductions(&p);
        assert_eq!(rs.len(), 1);
        let rs2 = host_reductions(&rs[0]);
        assert_eq!(rs2.len(), 1);
        assert!(process_congruent(&rs2[0], &Process::Nil));
    }
}
