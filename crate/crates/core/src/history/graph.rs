use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::config::Configuration;
use crate::syntax::{MemoryId, Tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Memory,
    Thread,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Node {
    /// `m<n>` for memories, `t<n>` for live threads.
    pub id: String,
    pub kind: NodeKind,
    pub label: String,
}

/// `from` produced `tag`, which `to` consumed or carries as a live thread.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub tag: Tag,
}

/// Memories and live threads linked by the tags flowing between them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct GraphParseError {
    pub line: usize,
    pub message: String,
}

pub fn build_graph(m: &Configuration) -> MemoryGraph {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for mem in &m.memories {
        let id = mem.id();
        let session = mem.session().map(|s| format!(" {s}")).unwrap_or_default();
        nodes.push(Node { id: id.to_string(), kind: NodeKind::Memory, label: format!("{}{session}", mem.rule()) });
    }
    for t in &m.threads {
        nodes.push(Node { id: t.tag.to_string(), kind: NodeKind::Thread, label: t.tag.to_string() });
    }
    for mem in &m.memories {
        for p in mem.produced() {
            for consumer in m.memories.iter().filter(|x| x.consumed().contains(&p)) {
                edges.push(Edge { from: mem.id().to_string(), to: consumer.id().to_string(), tag: p });
            }
            if m.thread(p).is_some() {
                edges.push(Edge { from: mem.id().to_string(), to: p.to_string(), tag: p });
            }
        }
    }
    nodes.sort();
    edges.sort();
    MemoryGraph { nodes, edges }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn unquote(s: &str) -> Option<String> {
    let inner = s.strip_prefix('"')?.strip_suffix('"')?;
    let mut out = String::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            out.push(chars.next()?);
        } else {
            out.push(c);
        }
    }
    Some(out)
}

/// Splits `"a" -> "b" [k="v", k2="v2"]` style lines into the part before the
/// attribute list and the attributes.
fn split_attrs(line: &str) -> Option<(&str, BTreeMap<String, String>)> {
    let line = line.trim().trim_end_matches(';').trim();
    let Some(open) = line.find('[') else {
        return Some((line, BTreeMap::new()));
    };
    let head = line[..open].trim();
    let body = line[open + 1..].strip_suffix(']')?;
    let mut attrs = BTreeMap::new();
    let mut rest = body.trim();
    while !rest.is_empty() {
        let eq = rest.find('=')?;
        let key = rest[..eq].trim().to_string();
        rest = rest[eq + 1..].trim_start();
        let mut end = 1;
        let bytes = rest.as_bytes();
        if bytes.first() != Some(&b'"') {
            return None;
        }
        while end < bytes.len() && bytes[end] != b'"' {
            if bytes[end] == b'\\' {
                end += 1;
            }
            end += 1;
        }
        if end >= bytes.len() {
            return None;
        }
        attrs.insert(key, unquote(&rest[..=end])?);
        rest = rest[end + 1..].trim_start().trim_start_matches(',').trim_start();
    }
    Some((head, attrs))
}

impl MemoryGraph {
    pub fn memory_nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Memory)
    }

    pub fn thread_nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Thread)
    }

    fn successors(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for e in &self.edges {
            succ.entry(e.from.as_str()).or_default().push(e.to.as_str());
        }
        succ
    }

    /// Memories reachable from `id` along edges, excluding `id` itself.
    pub fn descendants(&self, id: MemoryId) -> BTreeSet<MemoryId> {
        let succ = self.successors();
        let start = id.to_string();
        let mut seen = BTreeSet::new();
        let mut stack = vec![start.as_str()];
        while let Some(n) = stack.pop() {
            for next in succ.get(n).into_iter().flatten() {
                if seen.insert(*next) {
                    stack.push(next);
                }
            }
        }
        seen.into_iter().filter_map(MemoryId::parse).filter(|m| *m != id).collect()
    }

    /// A node on some cycle, if the graph has one.
    pub fn find_cycle(&self) -> Option<String> {
        let succ = self.successors();
        // 0 unvisited, 1 on stack, 2 done
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        for n in &self.nodes {
            if state.get(n.id.as_str()).copied().unwrap_or(0) != 0 {
                continue;
            }
            let mut stack: Vec<(&str, usize)> = vec![(n.id.as_str(), 0)];
            state.insert(n.id.as_str(), 1);
            while let Some((node, i)) = stack.pop() {
                let next = succ.get(node).and_then(|v| v.get(i)).copied();
                match next {
                    Some(child) => {
                        stack.push((node, i + 1));
                        match state.get(child).copied().unwrap_or(0) {
                            0 => {
                                state.insert(child, 1);
                                stack.push((child, 0));
                            }
                            1 => return Some(child.to_string()),
                            _ => {}
                        }
                    }
                    None => {
                        state.insert(node, 2);
                    }
                }
            }
        }
        None
    }

    pub fn is_acyclic(&self) -> bool {
        self.find_cycle().is_none()
    }

    /// Graphviz DOT rendering. Every node carries `label` and `kind`
    /// attributes; every edge carries the tag that links its endpoints.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph memories {\n");
        for n in &self.nodes {
            let kind = match n.kind {
                NodeKind::Memory => "memory",
                NodeKind::Thread => "thread",
            };
            let shape = match n.kind {
                NodeKind::Memory => "box",
                NodeKind::Thread => "ellipse",
            };
            writeln!(out, "  {} [label={}, kind=\"{kind}\", shape=\"{shape}\"];", quote(&n.id), quote(&n.label)).unwrap();
        }
        for e in &self.edges {
            writeln!(out, "  {} -> {} [label=\"{}\"];", quote(&e.from), quote(&e.to), e.tag).unwrap();
        }
        out.push_str("}\n");
        out
    }

    /// Parses the output of [`MemoryGraph::to_dot`].
    pub fn from_dot(text: &str) -> Result<MemoryGraph, GraphParseError> {
        let mut g = MemoryGraph::default();
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let err = |line: usize, message: &str| GraphParseError { line: line + 1, message: message.to_string() };
        match lines.next() {
            Some((_, l)) if l.trim().starts_with("digraph") && l.trim().ends_with('{') => {}
            Some((i, _)) => return Err(err(i, "expected `digraph <name> {`")),
            None => return Err(err(0, "empty input")),
        }
        let mut closed = false;
        for (i, line) in lines {
            if closed {
                return Err(err(i, "content after closing brace"));
            }
            if line.trim() == "}" {
                closed = true;
                continue;
            }
            let (head, attrs) = split_attrs(line).ok_or_else(|| err(i, "malformed attribute list"))?;
            if let Some((from, to)) = head.split_once("->") {
                let from = unquote(from.trim()).ok_or_else(|| err(i, "expected quoted source node"))?;
                let to = unquote(to.trim()).ok_or_else(|| err(i, "expected quoted target node"))?;
                let tag = attrs.get("label").and_then(|l| Tag::parse(l)).ok_or_else(|| err(i, "edge needs a tag label"))?;
                g.edges.push(Edge { from, to, tag });
            } else {
                let id = unquote(head).ok_or_else(|| err(i, "expected quoted node id"))?;
                let kind = match attrs.get("kind").map(String::as_str) {
                    Some("memory") => NodeKind::Memory,
                    Some("thread") => NodeKind::Thread,
                    _ => return Err(err(i, "node needs kind=\"memory\" or kind=\"thread\"")),
                };
                let label = attrs.get("label").cloned().unwrap_or_else(|| id.clone());
                g.nodes.push(Node { id, kind, label });
            }
        }
        if !closed {
            return Err(GraphParseError { line: text.lines().count(), message: "missing closing brace".into() });
        }
        let ids: BTreeSet<&str> = g.nodes.iter().map(|n| n.id.as_str()).collect();
        if let Some(e) = g.edges.iter().find(|e| !ids.contains(e.from.as_str()) || !ids.contains(e.to.as_str())) {
            return Err(GraphParseError { line: 0, message: format!("edge {} -> {} names an undeclared node", e.from, e.to) });
        }
        Ok(g)
    }
}
