//! Abstract syntax of the host session calculus and of its reversible
//! extension: names, values, expressions, processes, events and memories.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Interned-ish identifier. Cheap to clone and shareable across threads.
pub type Symbol = Arc<str>;

pub fn sym(s: &str) -> Symbol {
    Arc::from(s)
}

/// Thread identifier. Printed as `t` followed by its number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tag(pub u64);

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

impl Tag {
    /// Parses the `t<digits>` lexeme.
    pub fn parse(s: &str) -> Option<Tag> {
        let digits = s.strip_prefix('t')?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse().ok().map(Tag)
    }
}

impl Serialize for Tag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Tag::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("invalid tag `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Plus,
    Minus,
}

impl Polarity {
    pub fn dual(self) -> Polarity {
        match self {
            Polarity::Plus => Polarity::Minus,
            Polarity::Minus => Polarity::Plus,
        }
    }
}

/// One end of a session channel: `s` (plus) or `~s` (minus).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Endpoint {
    pub session: Symbol,
    pub polarity: Polarity,
}

impl Endpoint {
    pub fn plus(session: &str) -> Endpoint {
        Endpoint { session: sym(session), polarity: Polarity::Plus }
    }

    pub fn minus(session: &str) -> Endpoint {
        Endpoint { session: sym(session), polarity: Polarity::Minus }
    }

    pub fn dual(&self) -> Endpoint {
        Endpoint { session: self.session.clone(), polarity: self.polarity.dual() }
    }
}

/// A channel introduced by a process-level restriction.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "name", rename_all = "lowercase")]
pub enum Channel {
    Shared(Symbol),
    Session(Symbol),
}

impl Channel {
    pub fn symbol(&self) -> &Symbol {
        match self {
            Channel::Shared(s) | Channel::Session(s) => s,
        }
    }

    pub fn with_symbol(&self, s: Symbol) -> Channel {
        match self {
            Channel::Shared(_) => Channel::Shared(s),
            Channel::Session(_) => Channel::Session(s),
        }
    }
}

/// Any name that a configuration may restrict.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "name", rename_all = "lowercase")]
pub enum Name {
    Shared(Symbol),
    Session(Symbol),
    Tag(Tag),
}

impl From<Channel> for Name {
    fn from(c: Channel) -> Name {
        match c {
            Channel::Shared(s) => Name::Shared(s),
            Channel::Session(s) => Name::Session(s),
        }
    }
}

impl Name {
    pub fn as_channel(&self) -> Option<Channel> {
        match self {
            Name::Shared(s) => Some(Channel::Shared(s.clone())),
            Name::Session(s) => Some(Channel::Session(s.clone())),
            Name::Tag(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Value {
    Bool(bool),
    Nat(u64),
    Shared(Symbol),
    Endpoint(Endpoint),
}

impl Value {
    /// The channel name carried by the value, if any.
    pub fn channel(&self) -> Option<Channel> {
        match self {
            Value::Shared(a) => Some(Channel::Shared(a.clone())),
            Value::Endpoint(e) => Some(Channel::Session(e.session.clone())),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Add,
    Sub,
    Mul,
    Eq,
    Le,
    Lt,
    Not,
    And,
    Or,
}

impl Op {
    pub fn arity(self) -> usize {
        match self {
            Op::Not => 1,
            _ => 2,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Eq => "==",
            Op::Le => "<=",
            Op::Lt => "<",
            Op::Not => "not",
            Op::And => "and",
            Op::Or => "or",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Expr {
    Val { value: Value },
    Var { name: Symbol },
    Op { op: Op, args: Vec<Expr> },
}

impl Expr {
    pub fn val(v: Value) -> Expr {
        Expr::Val { value: v }
    }

    pub fn var(x: &str) -> Expr {
        Expr::Var { name: sym(x) }
    }

    pub fn nat(n: u64) -> Expr {
        Expr::val(Value::Nat(n))
    }

    pub fn op(op: Op, args: Vec<Expr>) -> Expr {
        Expr::Op { op, args }
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Expr::Val { .. } => true,
            Expr::Var { .. } => false,
            Expr::Op { args, .. } => args.iter().all(Expr::is_closed),
        }
    }
}

/// Subject of a prefix: either a variable or an already-substituted value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Atom {
    Var(Symbol),
    Val(Value),
}

impl Atom {
    pub fn shared(a: &str) -> Atom {
        Atom::Val(Value::Shared(sym(a)))
    }

    pub fn endpoint(e: Endpoint) -> Atom {
        Atom::Val(Value::Endpoint(e))
    }

    pub fn var(x: &str) -> Atom {
        Atom::Var(sym(x))
    }

    pub fn as_endpoint(&self) -> Option<&Endpoint> {
        match self {
            Atom::Val(Value::Endpoint(e)) => Some(e),
            _ => None,
        }
    }

    pub fn as_shared(&self) -> Option<&Symbol> {
        match self {
            Atom::Val(Value::Shared(a)) => Some(a),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Arm {
    pub label: Symbol,
    pub body: Process,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Process {
    Request { chan: Atom, var: Symbol, body: Box<Process> },
    Accept { chan: Atom, var: Symbol, body: Box<Process> },
    Send { chan: Atom, payload: Expr, body: Box<Process> },
    Receive { chan: Atom, var: Symbol, body: Box<Process> },
    Select { chan: Atom, label: Symbol, body: Box<Process> },
    Branch { chan: Atom, arms: Vec<Arm> },
    If { guard: Expr, then_branch: Box<Process>, else_branch: Box<Process> },
    Par { left: Box<Process>, right: Box<Process> },
    New { chan: Channel, body: Box<Process> },
    Var { name: Symbol },
    Rec { var: Symbol, body: Box<Process> },
    Nil,
}

impl Process {
    pub fn par(left: Process, right: Process) -> Process {
        Process::Par { left: Box::new(left), right: Box::new(right) }
    }

    /// Left-nested parallel composition; `0` for an empty iterator.
    pub fn par_all<I: IntoIterator<Item = Process>>(items: I) -> Process {
        let mut it = items.into_iter();
        match it.next() {
            None => Process::Nil,
            Some(first) => it.fold(first, Process::par),
        }
    }

    pub fn new_chan(chan: Channel, body: Process) -> Process {
        Process::New { chan, body: Box::new(body) }
    }

    /// Visits every sub-process, including those stored in branches.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Process)) {
        f(self);
        match self {
            Process::Request { body, .. }
            | Process::Accept { body, .. }
            | Process::Send { body, .. }
            | Process::Receive { body, .. }
            | Process::Select { body, .. }
            | Process::New { body, .. }
            | Process::Rec { body, .. } => body.walk(f),
            Process::Branch { arms, .. } => arms.iter().for_each(|a| a.body.walk(f)),
            Process::If { then_branch, else_branch, .. } => {
                then_branch.walk(f);
                else_branch.walk(f);
            }
            Process::Par { left, right } => {
                left.walk(f);
                right.walk(f);
            }
            Process::Var { .. } | Process::Nil => {}
        }
    }

    /// Free term variables.
    pub fn free_vars(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        free_vars_into(self, &mut Vec::new(), &mut out);
        out
    }

    /// Free channel names (shared channels and session channels).
    pub fn free_channels(&self) -> BTreeSet<Channel> {
        let mut out = BTreeSet::new();
        free_chans_into(self, &mut Vec::new(), &mut out);
        out
    }

    /// Free session endpoints occurring in the process.
    pub fn free_endpoints(&self) -> BTreeSet<Endpoint> {
        let mut out = BTreeSet::new();
        free_endpoints_into(self, &mut Vec::new(), &mut out);
        out
    }

    /// Every identifier string mentioned anywhere, bound or free.
    pub fn symbols(&self, out: &mut BTreeSet<Symbol>) {
        self.walk(&mut |p| match p {
            Process::Request { chan, var, .. }
            | Process::Accept { chan, var, .. }
            | Process::Receive { chan, var, .. } => {
                atom_symbols(chan, out);
                out.insert(var.clone());
            }
            Process::Send { chan, payload, .. } => {
                atom_symbols(chan, out);
                expr_symbols(payload, out);
            }
            Process::Select { chan, label, .. } => {
                atom_symbols(chan, out);
                out.insert(label.clone());
            }
            Process::Branch { chan, .. } => atom_symbols(chan, out),
            Process::If { guard, .. } => expr_symbols(guard, out),
            Process::New { chan, .. } => {
                out.insert(chan.symbol().clone());
            }
            Process::Var { name } => {
                out.insert(name.clone());
            }
            Process::Rec { var, .. } => {
                out.insert(var.clone());
            }
            Process::Par { .. } | Process::Nil => {}
        });
    }

    pub fn has_free_vars(&self) -> bool {
        !self.free_vars().is_empty()
    }

    /// Number of AST nodes, used to bound generated terms.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }
}

pub(crate) fn atom_symbols(a: &Atom, out: &mut BTreeSet<Symbol>) {
    match a {
        Atom::Var(x) => {
            out.insert(x.clone());
        }
        Atom::Val(v) => value_symbols(v, out),
    }
}

pub(crate) fn value_symbols(v: &Value, out: &mut BTreeSet<Symbol>) {
    if let Some(c) = v.channel() {
        out.insert(c.symbol().clone());
    }
}

pub(crate) fn expr_symbols(e: &Expr, out: &mut BTreeSet<Symbol>) {
    match e {
        Expr::Val { value } => value_symbols(value, out),
        Expr::Var { name } => {
            out.insert(name.clone());
        }
        Expr::Op { args, .. } => args.iter().for_each(|a| expr_symbols(a, out)),
    }
}

fn expr_free_vars(e: &Expr, bound: &[Symbol], out: &mut BTreeSet<Symbol>) {
    match e {
        Expr::Val { .. } => {}
        Expr::Var { name } => {
            if !bound.contains(name) {
                out.insert(name.clone());
            }
        }
        Expr::Op { args, .. } => args.iter().for_each(|a| expr_free_vars(a, bound, out)),
    }
}

fn atom_free_vars(a: &Atom, bound: &[Symbol], out: &mut BTreeSet<Symbol>) {
    if let Atom::Var(x) = a {
        if !bound.contains(x) {
            out.insert(x.clone());
        }
    }
}

fn free_vars_into(p: &Process, bound: &mut Vec<Symbol>, out: &mut BTreeSet<Symbol>) {
    match p {
        Process::Request { chan, var, body }
        | Process::Accept { chan, var, body }
        | Process::Receive { chan, var, body } => {
            atom_free_vars(chan, bound, out);
            bound.push(var.clone());
            free_vars_into(body, bound, out);
            bound.pop();
        }
        Process::Send { chan, payload, body } => {
            atom_free_vars(chan, bound, out);
            expr_free_vars(payload, bound, out);
            free_vars_into(body, bound, out);
        }
        Process::Select { chan, body, .. } => {
            atom_free_vars(chan, bound, out);
            free_vars_into(body, bound, out);
        }
        Process::Branch { chan, arms } => {
            atom_free_vars(chan, bound, out);
            for a in arms {
                free_vars_into(&a.body, bound, out);
            }
        }
        Process::If { guard, then_branch, else_branch } => {
            expr_free_vars(guard, bound, out);
            free_vars_into(then_branch, bound, out);
            free_vars_into(else_branch, bound, out);
        }
        Process::Par { left, right } => {
            free_vars_into(left, bound, out);
            free_vars_into(right, bound, out);
        }
        Process::New { body, .. } | Process::Rec { body, .. } => free_vars_into(body, bound, out),
        Process::Var { .. } | Process::Nil => {}
    }
}

fn value_free_chan(v: &Value, bound: &[Channel], out: &mut BTreeSet<Channel>) {
    if let Some(c) = v.channel() {
        if !bound.contains(&c) {
            out.insert(c);
        }
    }
}

fn expr_free_chans(e: &Expr, bound: &[Channel], out: &mut BTreeSet<Channel>) {
    match e {
        Expr::Val { value } => value_free_chan(value, bound, out),
        Expr::Var { .. } => {}
        Expr::Op { args, .. } => args.iter().for_each(|a| expr_free_chans(a, bound, out)),
    }
}

fn atom_free_chans(a: &Atom, bound: &[Channel], out: &mut BTreeSet<Channel>) {
    if let Atom::Val(v) = a {
        value_free_chan(v, bound, out);
    }
}

fn free_chans_into(p: &Process, bound: &mut Vec<Channel>, out: &mut BTreeSet<Channel>) {
    match p {
        Process::Request { chan, body, .. }
        | Process::Accept { chan, body, .. }
        | Process::Receive { chan, body, .. }
        | Process::Select { chan, body, .. } => {
            atom_free_chans(chan, bound, out);
            free_chans_into(body, bound, out);
        }
        Process::Send { chan, payload, body } => {
            atom_free_chans(chan, bound, out);
            expr_free_chans(payload, bound, out);
            free_chans_into(body, bound, out);
        }
        Process::Branch { chan, arms } => {
            atom_free_chans(chan, bound, out);
            for a in arms {
                free_chans_into(&a.body, bound, out);
            }
        }
        Process::If { guard, then_branch, else_branch } => {
            expr_free_chans(guard, bound, out);
            free_chans_into(then_branch, bound, out);
            free_chans_into(else_branch, bound, out);
        }
        Process::Par { left, right } => {
            free_chans_into(left, bound, out);
            free_chans_into(right, bound, out);
        }
        Process::New { chan, body } => {
            bound.push(chan.clone());
            free_chans_into(body, bound, out);
            bound.pop();
        }
        Process::Rec { body, .. } => free_chans_into(body, bound, out),
        Process::Var { .. } | Process::Nil => {}
    }
}

fn free_endpoints_into(p: &Process, bound: &mut Vec<Symbol>, out: &mut BTreeSet<Endpoint>) {
    let mut take = |v: &Value, bound: &Vec<Symbol>| {
        if let Value::Endpoint(e) = v {
            if !bound.contains(&e.session) {
                out.insert(e.clone());
            }
        }
    };
    fn expr_vals<'a>(e: &'a Expr, acc: &mut Vec<&'a Value>) {
        match e {
            Expr::Val { value } => acc.push(value),
            Expr::Var { .. } => {}
            Expr::Op { args, .. } => args.iter().for_each(|a| expr_vals(a, acc)),
        }
    }
    match p {
        Process::New { chan: Channel::Session(s), body } => {
            bound.push(s.clone());
            free_endpoints_into(body, bound, out);
            bound.pop();
        }
        _ => {
            let mut vals = Vec::new();
            match p {
                Process::Request { chan, .. }
                | Process::Accept { chan, .. }
                | Process::Receive { chan, .. }
                | Process::Select { chan, .. }
                | Process::Branch { chan, .. } => {
                    if let Atom::Val(v) = chan {
                        vals.push(v);
                    }
                }
                Process::Send { chan, payload, .. } => {
                    if let Atom::Val(v) = chan {
                        vals.push(v);
                    }
                    expr_vals(payload, &mut vals);
                }
                Process::If { guard, .. } => expr_vals(guard, &mut vals),
                _ => {}
            }
            for v in vals {
                take(v, bound);
            }
            match p {
                Process::Request { body, .. }
                | Process::Accept { body, .. }
                | Process::Receive { body, .. }
                | Process::Select { body, .. }
                | Process::Send { body, .. }
                | Process::New { body, .. }
                | Process::Rec { body, .. } => free_endpoints_into(body, bound, out),
                Process::Branch { arms, .. } => {
                    for a in arms {
                        free_endpoints_into(&a.body, bound, out);
                    }
                }
                Process::If { then_branch, else_branch, .. } => {
                    free_endpoints_into(then_branch, bound, out);
                    free_endpoints_into(else_branch, bound, out);
                }
                Process::Par { left, right } => {
                    free_endpoints_into(left, bound, out);
                    free_endpoints_into(right, bound, out);
                }
                Process::Var { .. } | Process::Nil => {}
            }
        }
    }
}

/// Payload of an action memory.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ActionEvent {
    /// Session initiation on shared channel `chan` creating session `session`.
    Init {
        chan: Symbol,
        req_var: Symbol,
        acc_var: Symbol,
        requester: Process,
        accepter: Process,
        session: Symbol,
    },
    /// Communication; `chan` is the sender's endpoint.
    Com { chan: Endpoint, payload: Expr, var: Symbol, sender: Process, receiver: Process },
    /// Label selection; `chan` is the selector's endpoint.
    Sel { chan: Endpoint, label: Symbol, selector: Process, arms: Vec<Arm> },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChoiceEvent {
    pub guard: Expr,
    pub then_branch: Process,
    pub else_branch: Process,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    Init,
    Com,
    Sel,
    If,
    Fork,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::Init => "Init",
            Rule::Com => "Com",
            Rule::Sel => "Sel",
            Rule::If => "If",
            Rule::Fork => "Fork",
        };
        f.write_str(s)
    }
}

/// Identity of a memory: its first produced tag. Produced tags are unique in
/// consistent configurations, so this names exactly one memory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MemoryId(pub Tag);

impl fmt::Display for MemoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0 .0)
    }
}

impl MemoryId {
    pub fn parse(s: &str) -> Option<MemoryId> {
        let digits = s.strip_prefix('m')?;
        Tag::parse(&format!("t{digits}")).map(MemoryId)
    }
}

impl Serialize for MemoryId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MemoryId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        MemoryId::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("invalid memory id `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Memory {
    Action { active: Tag, passive: Tag, event: ActionEvent, active_out: Tag, passive_out: Tag },
    Choice { tag: Tag, event: ChoiceEvent, out: Tag },
    Fork { tag: Tag, left: Tag, right: Tag },
}

impl Memory {
    pub fn consumed(&self) -> Vec<Tag> {
        match self {
            Memory::Action { active, passive, .. } => vec![*active, *passive],
            Memory::Choice { tag, .. } | Memory::Fork { tag, .. } => vec![*tag],
        }
    }

    pub fn produced(&self) -> Vec<Tag> {
        match self {
            Memory::Action { active_out, passive_out, .. } => vec![*active_out, *passive_out],
            Memory::Choice { out, .. } => vec![*out],
            Memory::Fork { left, right, .. } => vec![*left, *right],
        }
    }

    pub fn id(&self) -> MemoryId {
        MemoryId(self.produced()[0])
    }

    pub fn rule(&self) -> Rule {
        match self {
            Memory::Action { event: ActionEvent::Init { .. }, .. } => Rule::Init,
            Memory::Action { event: ActionEvent::Com { .. }, .. } => Rule::Com,
            Memory::Action { event: ActionEvent::Sel { .. }, .. } => Rule::Sel,
            Memory::Choice { .. } => Rule::If,
            Memory::Fork { .. } => Rule::Fork,
        }
    }

    /// The session channel an action memory acts on.
    pub fn session(&self) -> Option<&Symbol> {
        match self {
            Memory::Action { event: ActionEvent::Init { session, .. }, .. } => Some(session),
            Memory::Action { event: ActionEvent::Com { chan, .. }, .. }
            | Memory::Action { event: ActionEvent::Sel { chan, .. }, .. } => Some(&chan.session),
            _ => None,
        }
    }

    /// Threads the backward step restores, paired with their tags. Fork
    /// memories store no processes; the caller supplies the live bodies.
    pub fn restored_threads(&self) -> Option<Vec<(Tag, Process)>> {
        match self {
            Memory::Action { active, passive, event, .. } => {
                let (a, b) = event.pre_state();
                Some(vec![(*active, a), (*passive, b)])
            }
            Memory::Choice { tag, event, .. } => Some(vec![(
                *tag,
                Process::If {
                    guard: event.guard.clone(),
                    then_branch: Box::new(event.then_branch.clone()),
                    else_branch: Box::new(event.else_branch.clone()),
                },
            )]),
            Memory::Fork { .. } => None,
        }
    }

    /// Every process stored in the memory, as restored by the backward step.
    pub fn stored_processes(&self) -> Vec<Process> {
        self.restored_threads().map(|v| v.into_iter().map(|(_, p)| p).collect()).unwrap_or_default()
    }

    pub fn tags(&self) -> Vec<Tag> {
        let mut v = self.consumed();
        v.extend(self.produced());
        v
    }

    pub fn free_channels(&self) -> BTreeSet<Channel> {
        let mut out = BTreeSet::new();
        for p in self.stored_processes() {
            out.extend(p.free_channels());
        }
        if let Memory::Action { event: ActionEvent::Init { session, .. }, .. } = self {
            out.insert(Channel::Session(session.clone()));
        }
        out
    }

    pub fn symbols(&self, out: &mut BTreeSet<Symbol>) {
        for p in self.stored_processes() {
            p.symbols(out);
        }
        if let Memory::Action { event: ActionEvent::Init { session, .. }, .. } = self {
            out.insert(session.clone());
        }
    }
}

impl ActionEvent {
    /// The pair of prefixed processes (active, passive) that triggered the
    /// forward step recorded by this event.
    pub fn pre_state(&self) -> (Process, Process) {
        match self {
            ActionEvent::Init { chan, req_var, acc_var, requester, accepter, .. } => (
                Process::Request {
                    chan: Atom::Val(Value::Shared(chan.clone())),
                    var: req_var.clone(),
                    body: Box::new(requester.clone()),
                },
                Process::Accept {
                    chan: Atom::Val(Value::Shared(chan.clone())),
                    var: acc_var.clone(),
                    body: Box::new(accepter.clone()),
                },
            ),
            ActionEvent::Com { chan, payload, var, sender, receiver } => (
                Process::Send {
                    chan: Atom::endpoint(chan.clone()),
                    payload: payload.clone(),
                    body: Box::new(sender.clone()),
                },
                Process::Receive {
                    chan: Atom::endpoint(chan.dual()),
                    var: var.clone(),
                    body: Box::new(receiver.clone()),
                },
            ),
            ActionEvent::Sel { chan, label, selector, arms } => (
                Process::Select {
                    chan: Atom::endpoint(chan.clone()),
                    label: label.clone(),
                    body: Box::new(selector.clone()),
                },
                Process::Branch { chan: Atom::endpoint(chan.dual()), arms: arms.clone() },
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Thread {
    pub tag: Tag,
    pub body: Process,
}
