use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, ParsedConfig, SourceSpan};
use crate::config::ConfigTerm;
use crate::syntax::{
    sym, ActionEvent, Arm, Atom, Channel, ChoiceEvent, Endpoint, Expr, Memory, Name, Op, Polarity, Process, Symbol,
    Tag, Thread, Value,
};
use crate::types::{SessionType, Sort, TypeEnv};

const KEYWORDS: &[&str] = &["req", "acc", "if", "then", "else", "new", "in", "rec", "true", "false", "not", "and", "or", "nil"];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Shared,
    Session,
}

pub(super) struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    file: Option<&'a str>,
    vars: Vec<Symbol>,
    chans: Vec<Symbol>,
    session_uses: BTreeMap<Symbol, SourceSpan>,
    shared_uses: BTreeMap<Symbol, SourceSpan>,
    channel_names: BTreeSet<Symbol>,
}

fn is_upper(s: &str) -> bool {
    s.starts_with(|c: char| c.is_ascii_uppercase())
}

impl<'a> Parser<'a> {
    pub(super) fn new(text: &str, file: Option<&'a str>) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: tokenize(text, file)?,
            pos: 0,
            file,
            vars: Vec::new(),
            chans: Vec::new(),
            session_uses: BTreeMap::new(),
            shared_uses: BTreeMap::new(),
            channel_names: BTreeSet::new(),
        })
    }

    // ---- token helpers -------------------------------------------------

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span.clone()
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].span.end
        }
    }

    fn span_from(&self, start: &SourceSpan) -> SourceSpan {
        SourceSpan { end: self.prev_end().max(start.start), ..start.clone() }
    }

    fn error(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        ParseError {
            span: self.span(),
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        self.error(format!("unexpected {}", self.peek()), expected)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<Token, ParseError> {
        if *self.peek() == t {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&[&t.to_string()]))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("`{kw}`")]))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(Symbol, SourceSpan), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let t = self.bump();
                Ok((sym(&s), t.span))
            }
            Tok::Ident(s) => Err(self.error(format!("`{s}` is a keyword and cannot be used as {what}"), &[what])),
            _ => Err(self.unexpected(&[what])),
        }
    }

    fn lower_ident(&mut self, what: &str) -> Result<(Symbol, SourceSpan), ParseError> {
        let span = self.span();
        let (s, sp) = self.ident(what)?;
        if is_upper(&s) {
            return Err(ParseError {
                span,
                message: format!("{what} must start with a lowercase letter, found `{s}`"),
                expected: vec![what.to_string()],
            });
        }
        Ok((s, sp))
    }

    fn tag(&mut self) -> Result<Tag, ParseError> {
        if let Tok::Ident(s) = self.peek() {
            if let Some(t) = Tag::parse(s) {
                self.bump();
                return Ok(t);
            }
        }
        Err(self.unexpected(&["tag"]))
    }

    fn at_tag(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if Tag::parse(s).is_some())
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected(&["end of input"]))
        }
    }

    // ---- name classification -------------------------------------------

    fn use_as(&mut self, name: &Symbol, span: &SourceSpan, kind: Kind) -> Result<(), ParseError> {
        let (mine, other, what, other_what) = match kind {
            Kind::Session => (&mut self.session_uses, &self.shared_uses, "session", "shared"),
            Kind::Shared => (&mut self.shared_uses, &self.session_uses, "shared", "session"),
        };
        if let Some(prev) = other.get(name) {
            return Err(ParseError {
                span: span.clone(),
                message: format!(
                    "`{name}` is used as a {what} channel here but as a {other_what} channel at {}:{}",
                    prev.line, prev.column
                ),
                expected: Vec::new(),
            });
        }
        mine.entry(name.clone()).or_insert_with(|| span.clone());
        self.channel_names.insert(name.clone());
        Ok(())
    }

    fn class(&self, name: &Symbol) -> Option<Kind> {
        if self.session_uses.contains_key(name) {
            Some(Kind::Session)
        } else if self.shared_uses.contains_key(name) || self.channel_names.contains(name) {
            Some(Kind::Shared)
        } else {
            None
        }
    }

    // ---- processes -----------------------------------------------------

    pub(super) fn process_file(mut self) -> Result<Process, ParseError> {
        let p = self.proc()?;
        self.finish()?;
        Ok(self.resolve(&p, &mut Vec::new()))
    }

    fn proc(&mut self) -> Result<Process, ParseError> {
        let mut p = self.seq()?;
        while self.eat(&Tok::Bar) {
            let q = self.seq()?;
            p = Process::par(p, q);
        }
        Ok(p)
    }

    fn bound<T>(&mut self, x: Symbol, f: impl FnOnce(&mut Self) -> Result<T, ParseError>) -> Result<T, ParseError> {
        self.vars.push(x);
        let r = f(self);
        self.vars.pop();
        r
    }

    fn seq(&mut self) -> Result<Process, ParseError> {
        const START: &[&str] = &["process"];
        match self.peek().clone() {
            Tok::Ident(kw) if kw == "req" || kw == "acc" => {
                self.bump();
                let chan = self.shared_subject()?;
                self.expect(Tok::LParen)?;
                let (var, _) = self.lower_ident("variable")?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Dot)?;
                let body = Box::new(self.bound(var.clone(), |p| p.seq())?);
                Ok(if kw == "req" {
                    Process::Request { chan, var, body }
                } else {
                    Process::Accept { chan, var, body }
                })
            }
            Tok::Ident(kw) if kw == "if" => {
                self.bump();
                let guard = self.expr()?;
                self.expect_kw("then")?;
                let then_branch = Box::new(self.seq()?);
                self.expect_kw("else")?;
                let else_branch = Box::new(self.seq()?);
                Ok(Process::If { guard, then_branch, else_branch })
            }
            Tok::Ident(kw) if kw == "new" => {
                self.bump();
                let mut names = vec![self.lower_ident("channel name")?.0];
                while self.eat(&Tok::Comma) {
                    names.push(self.lower_ident("channel name")?.0);
                }
                self.expect_kw("in")?;
                let depth = self.chans.len();
                for n in &names {
                    self.channel_names.insert(n.clone());
                    self.chans.push(n.clone());
                }
                let body = self.seq();
                self.chans.truncate(depth);
                let body = body?;
                Ok(names.into_iter().rev().fold(body, |acc, n| Process::new_chan(Channel::Shared(n), acc)))
            }
            Tok::Ident(kw) if kw == "rec" => {
                self.bump();
                let span = self.span();
                let (var, _) = self.ident("process variable")?;
                if !is_upper(&var) {
                    return Err(ParseError {
                        span,
                        message: format!("process variables start with an uppercase letter, found `{var}`"),
                        expected: vec!["process variable".into()],
                    });
                }
                self.expect(Tok::Dot)?;
                let body = Box::new(self.seq()?);
                Ok(Process::Rec { var, body })
            }
            Tok::Nat(0) => {
                self.bump();
                Ok(Process::Nil)
            }
            Tok::LParen => {
                self.bump();
                let p = self.proc()?;
                self.expect(Tok::RParen)?;
                Ok(p)
            }
            Tok::Ident(s) if is_upper(&s) => {
                self.bump();
                Ok(Process::Var { name: sym(&s) })
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => self.session_action(),
            Tok::Tilde => self.session_action(),
            _ => Err(self.unexpected(START)),
        }
    }

    fn shared_subject(&mut self) -> Result<Atom, ParseError> {
        let (name, span) = self.lower_ident("shared channel")?;
        if self.vars.contains(&name) {
            return Ok(Atom::Var(name));
        }
        self.use_as(&name, &span, Kind::Shared)?;
        Ok(Atom::Val(Value::Shared(name)))
    }

    /// Parses `~`* ident as a session subject or endpoint literal.
    fn session_subject(&mut self, allow_var: bool) -> Result<Atom, ParseError> {
        let start = self.span();
        let mut tildes = 0;
        while self.eat(&Tok::Tilde) {
            tildes += 1;
        }
        let (name, span) = self.lower_ident("session endpoint")?;
        if allow_var && self.vars.contains(&name) {
            if tildes > 0 {
                return Err(ParseError {
                    span: start,
                    message: format!("`~` applies to session channels, but `{name}` is a variable"),
                    expected: Vec::new(),
                });
            }
            return Ok(Atom::Var(name));
        }
        self.use_as(&name, &span, Kind::Session)?;
        Ok(match tildes {
            0 => Atom::Val(Value::Shared(name)),
            n if n % 2 == 1 => Atom::endpoint(Endpoint { session: name, polarity: Polarity::Minus }),
            _ => Atom::endpoint(Endpoint { session: name, polarity: Polarity::Plus }),
        })
    }

    fn session_action(&mut self) -> Result<Process, ParseError> {
        let chan = self.session_subject(true)?;
        match self.peek() {
            Tok::Bang => {
                self.bump();
                self.expect(Tok::Lt)?;
                let payload = self.expr()?;
                self.expect(Tok::Gt)?;
                self.expect(Tok::Dot)?;
                let body = Box::new(self.seq()?);
                Ok(Process::Send { chan, payload, body })
            }
            Tok::Quest => {
                self.bump();
                self.expect(Tok::LParen)?;
                let (var, _) = self.lower_ident("variable")?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Dot)?;
                let body = Box::new(self.bound(var.clone(), |p| p.seq())?);
                Ok(Process::Receive { chan, var, body })
            }
            Tok::SelectOp => {
                self.bump();
                let (label, _) = self.ident("label")?;
                self.expect(Tok::Dot)?;
                let body = Box::new(self.seq()?);
                Ok(Process::Select { chan, label, body })
            }
            Tok::BranchOp => {
                self.bump();
                let arms = self.arms()?;
                Ok(Process::Branch { chan, arms })
            }
            _ => Err(self.unexpected(&["`!`", "`?`", "`<|`", "`|>`"])),
        }
    }

    fn arms(&mut self) -> Result<Vec<Arm>, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut arms: Vec<Arm> = Vec::new();
        loop {
            let span = self.span();
            let (label, _) = self.ident("label")?;
            if arms.iter().any(|a| a.label == label) {
                return Err(ParseError { span, message: format!("duplicate branch label `{label}`"), expected: Vec::new() });
            }
            self.expect(Tok::Colon)?;
            let body = self.proc()?;
            arms.push(Arm { label, body });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(arms)
    }

    // ---- expressions ---------------------------------------------------

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.expr_and()?;
        while self.eat_kw("or") {
            let r = self.expr_and()?;
            l = Expr::op(Op::Or, vec![l, r]);
        }
        Ok(l)
    }

    fn expr_and(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.expr_cmp()?;
        while self.eat_kw("and") {
            let r = self.expr_cmp()?;
            l = Expr::op(Op::And, vec![l, r]);
        }
        Ok(l)
    }

    fn expr_cmp(&mut self) -> Result<Expr, ParseError> {
        let l = self.expr_add()?;
        let op = match self.peek() {
            Tok::Le => Op::Le,
            Tok::Lt => Op::Lt,
            Tok::EqEq => Op::Eq,
            _ => return Ok(l),
        };
        self.bump();
        let r = self.expr_add()?;
        Ok(Expr::op(op, vec![l, r]))
    }

    fn expr_add(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.expr_mul()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => Op::Add,
                Tok::Minus => Op::Sub,
                _ => return Ok(l),
            };
            self.bump();
            let r = self.expr_mul()?;
            l = Expr::op(op, vec![l, r]);
        }
    }

    fn expr_mul(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.expr_unary()?;
        while self.eat(&Tok::Star) {
            let r = self.expr_unary()?;
            l = Expr::op(Op::Mul, vec![l, r]);
        }
        Ok(l)
    }

    fn expr_unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_kw("not") {
            let e = self.expr_unary()?;
            return Ok(Expr::op(Op::Not, vec![e]));
        }
        self.expr_primary()
    }

    fn expr_primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Nat(n) => {
                self.bump();
                Ok(Expr::nat(n))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr::val(Value::Bool(s == "true")))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Tilde => match self.session_subject(false)? {
                Atom::Val(v) => Ok(Expr::val(v)),
                Atom::Var(x) => Ok(Expr::Var { name: x }),
            },
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) && !is_upper(&s) => {
                self.bump();
                let name = sym(&s);
                if self.vars.contains(&name) {
                    Ok(Expr::Var { name })
                } else if self.chans.contains(&name) {
                    Ok(Expr::val(Value::Shared(name)))
                } else {
                    Ok(Expr::Var { name })
                }
            }
            _ => Err(self.unexpected(&["expression"])),
        }
    }

    // ---- configurations ------------------------------------------------

    pub(super) fn config_file(mut self) -> Result<ParsedConfig, ParseError> {
        let mut thread_spans = Vec::new();
        let mut memory_spans = Vec::new();
        let term = self.config(&mut thread_spans, &mut memory_spans)?;
        self.finish()?;
        let mut seen: BTreeMap<Tag, SourceSpan> = BTreeMap::new();
        for (tag, span) in &thread_spans {
            if seen.insert(*tag, span.clone()).is_some() {
                return Err(ParseError {
                    span: span.clone(),
                    message: format!("duplicate thread tag `{tag}`"),
                    expected: Vec::new(),
                });
            }
        }
        let term = self.resolve_term(&term);
        let config = term.flatten();
        // Flattening renames only clashing restrictions, which source tags
        // never are once duplicates are rejected; keep spans keyed by tag.
        let memory_spans = memory_spans.into_iter().collect();
        Ok(ParsedConfig { config, thread_spans: seen, memory_spans })
    }

    fn config(
        &mut self,
        threads: &mut Vec<(Tag, SourceSpan)>,
        mems: &mut Vec<(crate::syntax::MemoryId, SourceSpan)>,
    ) -> Result<ConfigTerm, ParseError> {
        let mut items = vec![self.citem(threads, mems)?];
        while self.eat(&Tok::Bar) {
            items.push(self.citem(threads, mems)?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { ConfigTerm::Par(items) })
    }

    fn citem(
        &mut self,
        threads: &mut Vec<(Tag, SourceSpan)>,
        mems: &mut Vec<(crate::syntax::MemoryId, SourceSpan)>,
    ) -> Result<ConfigTerm, ParseError> {
        const START: &[&str] = &["tag", "`[`", "`nil`", "`new`", "`(`"];
        if self.eat_kw("nil") {
            return Ok(ConfigTerm::Nil);
        }
        if self.eat_kw("new") {
            let mut names = vec![self.config_name()?];
            while self.eat(&Tok::Comma) {
                names.push(self.config_name()?);
            }
            self.expect_kw("in")?;
            let body = self.citem(threads, mems)?;
            return Ok(ConfigTerm::New(names, Box::new(body)));
        }
        if self.eat(&Tok::LParen) {
            let c = self.config(threads, mems)?;
            self.expect(Tok::RParen)?;
            return Ok(c);
        }
        if *self.peek() == Tok::LBracket {
            let start = self.span();
            let m = self.memory()?;
            mems.push((m.id(), self.span_from(&start)));
            return Ok(ConfigTerm::Memory(m));
        }
        if self.at_tag() && *self.peek_at(1) == Tok::Colon {
            let start = self.span();
            let tag = self.tag()?;
            self.bump();
            let body = self.seq()?;
            threads.push((tag, self.span_from(&start)));
            return Ok(ConfigTerm::Thread(Thread { tag, body }));
        }
        Err(self.unexpected(START))
    }

    fn config_name(&mut self) -> Result<Name, ParseError> {
        if self.at_tag() {
            return Ok(Name::Tag(self.tag()?));
        }
        let (n, _) = self.lower_ident("name")?;
        self.channel_names.insert(n.clone());
        Ok(Name::Shared(n))
    }

    fn memory(&mut self) -> Result<Memory, ParseError> {
        self.expect(Tok::LBracket)?;
        let m = if self.eat_kw("act") {
            let active = self.tag()?;
            self.expect(Tok::Comma)?;
            let passive = self.tag()?;
            self.expect(Tok::Arrow)?;
            let active_out = self.tag()?;
            self.expect(Tok::Comma)?;
            let passive_out = self.tag()?;
            self.expect(Tok::Colon)?;
            let event = self.event()?;
            Memory::Action { active, passive, event, active_out, passive_out }
        } else if self.eat_kw("cho") {
            let tag = self.tag()?;
            self.expect(Tok::Arrow)?;
            let out = self.tag()?;
            self.expect(Tok::Colon)?;
            self.expect_kw("if")?;
            let guard = self.expr()?;
            self.expect_kw("then")?;
            let then_branch = self.seq()?;
            self.expect_kw("else")?;
            let else_branch = self.seq()?;
            Memory::Choice { tag, event: ChoiceEvent { guard, then_branch, else_branch }, out }
        } else if self.eat_kw("fork") {
            let tag = self.tag()?;
            self.expect(Tok::Arrow)?;
            let left = self.tag()?;
            self.expect(Tok::Comma)?;
            let right = self.tag()?;
            Memory::Fork { tag, left, right }
        } else {
            return Err(self.unexpected(&["`act`", "`cho`", "`fork`"]));
        };
        self.expect(Tok::RBracket)?;
        Ok(m)
    }

    fn endpoint_literal(&mut self) -> Result<Endpoint, ParseError> {
        match self.session_subject(false)? {
            Atom::Val(Value::Endpoint(e)) => Ok(e),
            Atom::Val(Value::Shared(s)) => Ok(Endpoint { session: s, polarity: Polarity::Plus }),
            _ => unreachable!("variables are not allowed here"),
        }
    }

    fn event(&mut self) -> Result<ActionEvent, ParseError> {
        if self.eat_kw("init") {
            self.expect(Tok::LParen)?;
            let (chan, span) = self.lower_ident("shared channel")?;
            self.use_as(&chan, &span, Kind::Shared)?;
            self.expect(Tok::Comma)?;
            let (req_var, _) = self.lower_ident("variable")?;
            self.expect(Tok::Comma)?;
            let (acc_var, _) = self.lower_ident("variable")?;
            self.expect(Tok::Comma)?;
            let requester = self.bound(req_var.clone(), |p| p.proc())?;
            self.expect(Tok::Comma)?;
            let accepter = self.bound(acc_var.clone(), |p| p.proc())?;
            self.expect(Tok::Comma)?;
            let (session, span) = self.lower_ident("session channel")?;
            self.use_as(&session, &span, Kind::Session)?;
            self.expect(Tok::RParen)?;
            Ok(ActionEvent::Init { chan, req_var, acc_var, requester, accepter, session })
        } else if self.eat_kw("com") {
            self.expect(Tok::LParen)?;
            let chan = self.endpoint_literal()?;
            self.expect(Tok::Comma)?;
            let payload = self.expr()?;
            self.expect(Tok::Comma)?;
            let (var, _) = self.lower_ident("variable")?;
            self.expect(Tok::Comma)?;
            let sender = self.proc()?;
            self.expect(Tok::Comma)?;
            let receiver = self.bound(var.clone(), |p| p.proc())?;
            self.expect(Tok::RParen)?;
            Ok(ActionEvent::Com { chan, payload, var, sender, receiver })
        } else if self.eat_kw("sel") {
            self.expect(Tok::LParen)?;
            let chan = self.endpoint_literal()?;
            self.expect(Tok::Comma)?;
            let span = self.span();
            let (label, _) = self.ident("label")?;
            self.expect(Tok::Comma)?;
            let selector = self.proc()?;
            self.expect(Tok::Comma)?;
            let arms = self.arms()?;
            self.expect(Tok::RParen)?;
            if !arms.iter().any(|a| a.label == label) {
                return Err(ParseError {
                    span,
                    message: format!("selected label `{label}` is not offered by the branch"),
                    expected: Vec::new(),
                });
            }
            Ok(ActionEvent::Sel { chan, label, selector, arms })
        } else {
            Err(self.unexpected(&["`init`", "`com`", "`sel`"]))
        }
    }

    // ---- resolution of channel kinds ------------------------------------

    fn resolve_value(&self, v: &Value) -> Value {
        match v {
            Value::Shared(n) if self.class(n) == Some(Kind::Session) => {
                Value::Endpoint(Endpoint { session: n.clone(), polarity: Polarity::Plus })
            }
            other => other.clone(),
        }
    }

    fn resolve_atom(&self, a: &Atom) -> Atom {
        match a {
            Atom::Val(v) => Atom::Val(self.resolve_value(v)),
            other => other.clone(),
        }
    }

    fn resolve_expr(&self, e: &Expr, vars: &[Symbol]) -> Expr {
        match e {
            Expr::Val { value } => Expr::val(self.resolve_value(value)),
            Expr::Var { name } if !vars.contains(name) => match self.class(name) {
                Some(Kind::Session) => Expr::val(Value::Endpoint(Endpoint { session: name.clone(), polarity: Polarity::Plus })),
                Some(Kind::Shared) => Expr::val(Value::Shared(name.clone())),
                None => e.clone(),
            },
            Expr::Var { .. } => e.clone(),
            Expr::Op { op, args } => Expr::op(*op, args.iter().map(|a| self.resolve_expr(a, vars)).collect()),
        }
    }

    fn resolve_under(&self, x: &Symbol, p: &Process, vars: &mut Vec<Symbol>) -> Process {
        vars.push(x.clone());
        let r = self.resolve(p, vars);
        vars.pop();
        r
    }

    fn resolve(&self, p: &Process, vars: &mut Vec<Symbol>) -> Process {
        match p {
            Process::Request { chan, var, body } => Process::Request {
                chan: self.resolve_atom(chan),
                var: var.clone(),
                body: Box::new(self.resolve_under(var, body, vars)),
            },
            Process::Accept { chan, var, body } => Process::Accept {
                chan: self.resolve_atom(chan),
                var: var.clone(),
                body: Box::new(self.resolve_under(var, body, vars)),
            },
            Process::Receive { chan, var, body } => Process::Receive {
                chan: self.resolve_atom(chan),
                var: var.clone(),
                body: Box::new(self.resolve_under(var, body, vars)),
            },
            Process::Send { chan, payload, body } => Process::Send {
                chan: self.resolve_atom(chan),
                payload: self.resolve_expr(payload, vars),
                body: Box::new(self.resolve(body, vars)),
            },
            Process::Select { chan, label, body } => Process::Select {
                chan: self.resolve_atom(chan),
                label: label.clone(),
                body: Box::new(self.resolve(body, vars)),
            },
            Process::Branch { chan, arms } => Process::Branch {
                chan: self.resolve_atom(chan),
                arms: self.resolve_arms(arms, vars),
            },
            Process::If { guard, then_branch, else_branch } => Process::If {
                guard: self.resolve_expr(guard, vars),
                then_branch: Box::new(self.resolve(then_branch, vars)),
                else_branch: Box::new(self.resolve(else_branch, vars)),
            },
            Process::Par { left, right } => Process::par(self.resolve(left, vars), self.resolve(right, vars)),
            Process::New { chan, body } => {
                Process::new_chan(self.resolve_channel(chan), self.resolve(body, vars))
            }
            Process::Rec { var, body } => Process::Rec { var: var.clone(), body: Box::new(self.resolve(body, vars)) },
            Process::Var { .. } | Process::Nil => p.clone(),
        }
    }

    fn resolve_arms(&self, arms: &[Arm], vars: &mut Vec<Symbol>) -> Vec<Arm> {
        arms.iter().map(|a| Arm { label: a.label.clone(), body: self.resolve(&a.body, vars) }).collect()
    }

    fn resolve_channel(&self, c: &Channel) -> Channel {
        match c {
            Channel::Shared(n) if self.class(n) == Some(Kind::Session) => Channel::Session(n.clone()),
            other => other.clone(),
        }
    }

    fn resolve_memory(&self, m: &Memory) -> Memory {
        let vars = &mut Vec::new();
        match m {
            Memory::Action { active, passive, event, active_out, passive_out } => {
                let event = match event {
                    ActionEvent::Init { chan, req_var, acc_var, requester, accepter, session } => ActionEvent::Init {
                        chan: chan.clone(),
                        req_var: req_var.clone(),
                        acc_var: acc_var.clone(),
                        requester: self.resolve_under(req_var, requester, vars),
                        accepter: self.resolve_under(acc_var, accepter, vars),
                        session: session.clone(),
                    },
                    ActionEvent::Com { chan, payload, var, sender, receiver } => ActionEvent::Com {
                        chan: chan.clone(),
                        payload: self.resolve_expr(payload, vars),
                        var: var.clone(),
                        sender: self.resolve(sender, vars),
                        receiver: self.resolve_under(var, receiver, vars),
                    },
                    ActionEvent::Sel { chan, label, selector, arms } => ActionEvent::Sel {
                        chan: chan.clone(),
                        label: label.clone(),
                        selector: self.resolve(selector, vars),
                        arms: self.resolve_arms(arms, vars),
                    },
                };
                Memory::Action { active: *active, passive: *passive, event, active_out: *active_out, passive_out: *passive_out }
            }
            Memory::Choice { tag, event, out } => Memory::Choice {
                tag: *tag,
                event: ChoiceEvent {
                    guard: self.resolve_expr(&event.guard, vars),
                    then_branch: self.resolve(&event.then_branch, vars),
                    else_branch: self.resolve(&event.else_branch, vars),
                },
                out: *out,
            },
            Memory::Fork { .. } => m.clone(),
        }
    }

    fn resolve_term(&self, t: &ConfigTerm) -> ConfigTerm {
        match t {
            ConfigTerm::Nil => ConfigTerm::Nil,
            ConfigTerm::Thread(th) => {
                ConfigTerm::Thread(Thread { tag: th.tag, body: self.resolve(&th.body, &mut Vec::new()) })
            }
            ConfigTerm::Memory(m) => ConfigTerm::Memory(self.resolve_memory(m)),
            ConfigTerm::Par(items) => ConfigTerm::Par(items.iter().map(|i| self.resolve_term(i)).collect()),
            ConfigTerm::New(names, body) => ConfigTerm::New(
                names
                    .iter()
                    .map(|n| match n {
                        Name::Shared(s) if self.class(s) == Some(Kind::Session) => Name::Session(s.clone()),
                        other => other.clone(),
                    })
                    .collect(),
                Box::new(self.resolve_term(body)),
            ),
        }
    }

    // ---- session types ---------------------------------------------------

    pub(super) fn session_type_file(mut self) -> Result<SessionType, ParseError> {
        let t = self.session_type()?;
        self.finish()?;
        Ok(t)
    }

    fn session_type(&mut self) -> Result<SessionType, ParseError> {
        match self.peek().clone() {
            Tok::Bang | Tok::Quest => {
                let send = *self.peek() == Tok::Bang;
                self.bump();
                let sort = self.sort()?;
                self.expect(Tok::Dot)?;
                let cont = self.session_type()?;
                Ok(if send { SessionType::send(sort, cont) } else { SessionType::recv(sort, cont) })
            }
            Tok::Plus | Tok::Amp => {
                let select = *self.peek() == Tok::Plus;
                self.bump();
                let arms = self.type_arms()?;
                Ok(if select { SessionType::Select { arms } } else { SessionType::Branch { arms } })
            }
            Tok::Ident(s) if s == "end" => {
                self.bump();
                Ok(SessionType::End)
            }
            Tok::Ident(s) if s == "rec" => {
                self.bump();
                let (var, _) = self.ident("type variable")?;
                self.expect(Tok::Dot)?;
                let body = self.session_type()?;
                Ok(SessionType::Rec { var, body: Box::new(body) })
            }
            Tok::Ident(s) if is_upper(&s) => {
                self.bump();
                Ok(SessionType::Var { name: sym(&s) })
            }
            Tok::LParen => {
                self.bump();
                let t = self.session_type()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.unexpected(&["session type"])),
        }
    }

    fn type_arms(&mut self) -> Result<Vec<(Symbol, SessionType)>, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut arms: Vec<(Symbol, SessionType)> = Vec::new();
        loop {
            let span = self.span();
            let (l, _) = self.ident("label")?;
            if arms.iter().any(|(m, _)| *m == l) {
                return Err(ParseError { span, message: format!("duplicate label `{l}`"), expected: Vec::new() });
            }
            self.expect(Tok::Colon)?;
            let t = self.session_type()?;
            arms.push((l, t));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(arms)
    }

    fn sort(&mut self) -> Result<Sort, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "bool" => {
                self.bump();
                Ok(Sort::Bool)
            }
            Tok::Ident(s) if s == "nat" => {
                self.bump();
                Ok(Sort::Nat)
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) && s != "end" => {
                self.bump();
                Ok(Sort::Data { name: sym(&s) })
            }
            Tok::Lt => {
                self.bump();
                let t = self.session_type()?;
                self.expect(Tok::Gt)?;
                Ok(Sort::Shared { session: Box::new(t) })
            }
            Tok::LBracket => {
                self.bump();
                let t = self.session_type()?;
                self.expect(Tok::RBracket)?;
                Ok(Sort::Session { session: Box::new(t) })
            }
            Tok::LParen => {
                self.bump();
                let s = self.sort()?;
                self.expect(Tok::RParen)?;
                Ok(s)
            }
            _ => Err(self.unexpected(&["sort"])),
        }
    }

    pub(super) fn type_env_file(mut self) -> Result<TypeEnv, ParseError> {
        let mut env = TypeEnv::default();
        let _ = self.file;
        while *self.peek() != Tok::Eof {
            let span = self.span();
            if self.eat_kw("sort") {
                let (name, _) = self.ident("sort name")?;
                self.expect(Tok::Assign)?;
                let base = match self.peek() {
                    Tok::Ident(s) if s == "nat" => Sort::Nat,
                    Tok::Ident(s) if s == "bool" => Sort::Bool,
                    _ => return Err(self.unexpected(&["`nat`", "`bool`"])),
                };
                self.bump();
                if env.sorts.insert(name.clone(), base).is_some() {
                    return Err(ParseError { span, message: format!("sort `{name}` declared twice"), expected: Vec::new() });
                }
            } else if self.eat_kw("chan") {
                let (name, _) = self.lower_ident("shared channel")?;
                self.expect(Tok::Colon)?;
                let t = if self.eat(&Tok::Lt) {
                    let t = self.session_type()?;
                    self.expect(Tok::Gt)?;
                    t
                } else {
                    self.session_type()?
                };
                if env.channels.insert(name.clone(), t).is_some() {
                    return Err(ParseError {
                        span,
                        message: format!("channel `{name}` declared twice"),
                        expected: Vec::new(),
                    });
                }
            } else {
                return Err(self.unexpected(&["`sort`", "`chan`"]));
            }
        }
        Ok(env)
    }
}
