use std::collections::{BTreeMap, BTreeSet};

use super::{
    Binder, Branch, Calculus, Endpoint, Label, LabelTag, Name, Payload, Prefix, Proc, Side,
    Summand, Value,
};
use crate::error::Error;

/// A parsed input file: the term plus the optional header lines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub calculus: Calculus,
    pub term: Proc,
    /// `ids: 1 2 3`
    pub ids: Vec<Name>,
    /// `automorphism: a->b b->a ; 1->2 2->1`
    pub automorphism: Option<AutomorphismSpec>,
    /// `sides: x:int o:ext` for free endpoints.
    pub sides: BTreeMap<Name, Side>,
}

/// The mapping written on an `automorphism:` header, split into the part on
/// leader ids (nodes) and the part on other names (arcs).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AutomorphismSpec {
    pub nodes: BTreeMap<Name, Name>,
    pub arcs: BTreeMap<Name, Name>,
}

pub fn parse(calculus: Calculus, text: &str) -> Result<Proc, Error> {
    Ok(parse_document(calculus, text)?.term)
}

pub fn parse_document(calculus: Calculus, text: &str) -> Result<Document, Error> {
    let mut body = String::with_capacity(text.len());
    let mut doc = Document {
        calculus,
        term: Proc::Nil,
        ids: Vec::new(),
        automorphism: None,
        sides: BTreeMap::new(),
    };
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("");
        let trimmed = content.trim_start();
        let header = ["ids:", "automorphism:", "sides:"]
            .into_iter()
            .find(|h| trimmed.starts_with(h));
        match header {
            Some(h) => {
                let rest = &trimmed[h.len()..];
                let err = |message: String| Error::Parse { line: i + 1, col: 1, message };
                match h {
                    "ids:" => {
                        for w in rest.split_whitespace() {
                            let n = Name::new(w);
                            if !n.is_id() {
                                return Err(err(format!("`{w}` is not a leader id")));
                            }
                            if doc.ids.contains(&n) {
                                return Err(err(format!("id `{w}` listed twice")));
                            }
                            doc.ids.push(n);
                        }
                    }
                    "automorphism:" => doc.automorphism = Some(parse_mapping(rest).map_err(err)?),
                    _ => {
                        for w in rest.split_whitespace() {
                            let (n, s) = w
                                .split_once(':')
                                .ok_or_else(|| err(format!("expected name:int or name:ext, found `{w}`")))?;
                            let side = match s {
                                "int" => Side::Internal,
                                "ext" => Side::External,
                                _ => return Err(err(format!("unknown side `{s}`"))),
                            };
                            doc.sides.insert(parse_name_text(n).map_err(err)?, side);
                        }
                    }
                }
                body.push('\n');
            }
            None => {
                body.push_str(line);
                body.push('\n');
            }
        }
    }
    let tokens = lex(&body)?;
    let mut p = Parser { calculus, tokens, pos: 0, labels: Vec::new() };
    let term = if p.peek().is_none() { Proc::Nil } else { p.par()? };
    if let Some(t) = p.peek() {
        return Err(p.error_at(t, format!("unexpected {}", t.kind.describe())));
    }
    p.check_sorts(&term)?;
    term.check(calculus)?;
    doc.term = term;
    Ok(doc)
}

fn parse_name_text(s: &str) -> Result<Name, String> {
    let (base, tag) = match s.split_once('\'') {
        Some((b, t)) => (b, Some(t.parse::<u32>().map_err(|_| format!("bad tag in `{s}`"))?)),
        None => (s, None),
    };
    let ok = !base.is_empty()
        && (base.bytes().all(|b| b.is_ascii_digit())
            || base
                .bytes()
                .enumerate()
                .all(|(i, b)| b.is_ascii_lowercase() || b == b'_' || (i > 0 && b.is_ascii_digit())));
    if !ok {
        return Err(format!("`{s}` is not a name"));
    }
    Ok(match tag {
        Some(t) => Name::tagged(base, t),
        None => Name::new(base),
    })
}

fn parse_mapping(text: &str) -> Result<AutomorphismSpec, String> {
    let spaced = text.replace("->", " -> ").replace(';', " ");
    let words: Vec<&str> = spaced.split_whitespace().collect();
    if !words.len().is_multiple_of(3) {
        return Err("expected a list of `from->to` pairs".into());
    }
    let mut spec = AutomorphismSpec::default();
    for w in words.chunks(3) {
        if w[1] != "->" {
            return Err(format!("expected `->` after `{}`", w[0]));
        }
        let (a, b) = (parse_name_text(w[0])?, parse_name_text(w[2])?);
        let target = if a.is_id() && b.is_id() {
            &mut spec.nodes
        } else if !a.is_id() && !b.is_id() {
            &mut spec.arcs
        } else {
            return Err(format!("`{}->{}` maps an id to a channel", w[0], w[2]));
        };
        if target.insert(a, b).is_some() {
            return Err(format!("`{}` mapped twice", w[0]));
        }
    }
    Ok(spec)
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Suffix {
    None,
    Num(u32),
    Bang,
    Query,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Kind {
    Ident(String, Suffix),
    Digits(String),
    Sym(&'static str),
}

impl Kind {
    fn describe(&self) -> String {
        match self {
            Kind::Ident(s, _) => format!("`{s}`"),
            Kind::Digits(s) => format!("`{s}`"),
            Kind::Sym(s) => format!("`{s}`"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: Kind,
    line: usize,
    col: usize,
}

const KEYWORDS: &[&str] = &[
    "new", "in", "rep", "tau", "if", "then", "else", "true", "false", "not", "and", "or", "sel",
    "case",
];

fn lex(text: &str) -> Result<Vec<Token>, Error> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let err = |message: String| Error::Parse { line: tl, col: tc, message };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let kind = if c.is_ascii_lowercase() || c == '_' {
            while i < chars.len()
                && (chars[i].is_ascii_lowercase() || chars[i].is_ascii_digit() || chars[i] == '_')
            {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let mut suffix = Suffix::None;
            if i < chars.len() && chars[i] == '\'' {
                match chars.get(i + 1) {
                    Some('!') => {
                        suffix = Suffix::Bang;
                        i += 2;
                    }
                    Some('?') => {
                        suffix = Suffix::Query;
                        i += 2;
                    }
                    Some(d) if d.is_ascii_digit() => {
                        let s = i + 1;
                        i += 1;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                        let digits: String = chars[s..i].iter().collect();
                        let n = digits.parse().map_err(|_| err(format!("tag `{digits}` too large")))?;
                        suffix = Suffix::Num(n);
                    }
                    _ => return Err(err(format!("malformed tag after `{word}`"))),
                }
            }
            Kind::Ident(word, suffix)
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            Kind::Digits(chars[start..i].iter().collect())
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            if two == "->" {
                i += 2;
                Kind::Sym("->")
            } else {
                i += 1;
                Kind::Sym(match c {
                    '(' => "(",
                    ')' => ")",
                    '{' => "{",
                    '}' => "}",
                    '|' => "|",
                    '+' => "+",
                    '.' => ".",
                    '!' => "!",
                    '?' => "?",
                    ',' => ",",
                    ':' => ":",
                    ';' => ";",
                    _ => return Err(err(format!("unexpected character `{c}`"))),
                })
            }
        };
        col += i - start;
        out.push(Token { kind, line: tl, col: tc });
    }
    Ok(out)
}

struct Parser {
    calculus: Calculus,
    tokens: Vec<Token>,
    pos: usize,
    labels: Vec<(Label, usize, usize)>,
}

fn default_param() -> Name {
    Name::new("_")
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Token { kind: Kind::Sym(t), .. }) if *t == s)
    }

    fn peek_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Token { kind: Kind::Ident(w, Suffix::None), .. }) if w == k)
    }

    fn error_at(&self, t: &Token, message: String) -> Error {
        Error::Parse { line: t.line, col: t.col, message }
    }

    fn error_here(&self, message: impl Into<String>) -> Error {
        match self.peek() {
            Some(t) => self.error_at(t, message.into()),
            None => {
                let (line, col) = self
                    .tokens
                    .last()
                    .map(|t| (t.line, t.col + 1))
                    .unwrap_or((1, 1));
                Error::Parse { line, col, message: format!("{} at end of input", message.into()) }
            }
        }
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.peek_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.peek_kw(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), Error> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected `{s}`")))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<(), Error> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected `{k}`")))
        }
    }

    fn at_name(&self) -> bool {
        match self.peek() {
            Some(Token { kind: Kind::Ident(w, s), .. }) => {
                !KEYWORDS.contains(&w.as_str()) && matches!(s, Suffix::None | Suffix::Num(_))
            }
            Some(Token { kind: Kind::Digits(d), .. }) => d != "0",
            _ => false,
        }
    }

    fn name(&mut self) -> Result<Name, Error> {
        if !self.at_name() {
            return Err(self.error_here("expected a name"));
        }
        Ok(match self.bump().unwrap().kind {
            Kind::Ident(w, Suffix::None) | Kind::Digits(w) => Name::new(w),
            Kind::Ident(w, Suffix::Num(t)) => Name::tagged(w, t),
            _ => unreachable!(),
        })
    }

    fn label(&mut self) -> Result<Label, Error> {
        let t = match self.peek() {
            Some(t) => t.clone(),
            None => return Err(self.error_here("expected a label")),
        };
        let label = match &t.kind {
            Kind::Ident(w, s) if !KEYWORDS.contains(&w.as_str()) => {
                let tag = match s {
                    Suffix::None => LabelTag::Plain,
                    Suffix::Bang => LabelTag::Send,
                    Suffix::Query => LabelTag::Recv,
                    Suffix::Num(j) => LabelTag::Arm(*j),
                };
                Label::with_tag(w, tag)
            }
            _ => return Err(self.error_at(&t, format!("expected a label, found {}", t.kind.describe()))),
        };
        self.pos += 1;
        self.labels.push((label.clone(), t.line, t.col));
        Ok(label)
    }

    fn par(&mut self) -> Result<Proc, Error> {
        let mut items = vec![self.sum()?];
        while self.eat_sym("|") {
            items.push(self.sum()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Proc::Par(items) })
    }

    fn sum(&mut self) -> Result<Proc, Error> {
        let start = self.peek().cloned();
        let first = self.seq()?;
        if !self.peek_sym("+") {
            return Ok(first);
        }
        if self.calculus != Calculus::Pi {
            return Err(self.error_here("`+` only separates branches inside a choice"));
        }
        let mut summands = Vec::new();
        let mut item = first;
        let mut at = start;
        loop {
            match item {
                Proc::Sum(mut ss) if ss.len() == 1 => summands.push(ss.pop().unwrap()),
                _ => {
                    let t = at.unwrap();
                    return Err(self.error_at(&t, "only prefixed terms can be summands".into()));
                }
            }
            if !self.eat_sym("+") {
                break;
            }
            at = self.peek().cloned();
            item = self.seq()?;
        }
        Ok(Proc::Sum(summands))
    }

    fn cont(&mut self) -> Result<Proc, Error> {
        if self.eat_sym(".") {
            self.seq()
        } else {
            Ok(Proc::Nil)
        }
    }

    fn seq(&mut self) -> Result<Proc, Error> {
        if matches!(self.peek(), Some(Token { kind: Kind::Digits(d), .. }) if d == "0") {
            self.pos += 1;
            return Ok(Proc::Nil);
        }
        if self.eat_sym("(") {
            let p = self.par()?;
            self.expect_sym(")")?;
            return Ok(p);
        }
        if self.peek_kw("new") {
            return self.restriction();
        }
        if self.eat_kw("rep") {
            if self.calculus != Calculus::Pi {
                return Err(self.error_here("replication is only available in pi"));
            }
            return Ok(Proc::Rep(Box::new(self.seq()?)));
        }
        if self.eat_kw("if") {
            if self.calculus == Calculus::Pi {
                return Err(self.error_here("conditionals are not available in pi"));
            }
            let v = self.value()?;
            self.expect_kw("then")?;
            let a = self.seq()?;
            self.expect_kw("else")?;
            let b = self.seq()?;
            return Ok(Proc::If(v, Box::new(a), Box::new(b)));
        }
        if self.eat_kw("tau") {
            if self.calculus != Calculus::Pi {
                return Err(self.error_here("tau is only available in pi"));
            }
            let cont = self.cont()?;
            return Ok(Proc::Sum(vec![Summand { prefix: Prefix::Tau, cont }]));
        }
        if !self.at_name() {
            return Err(self.error_here("expected a process"));
        }
        let subject = self.name()?;
        match self.calculus {
            Calculus::Pi => {
                let prefix = if self.eat_sym("!") {
                    Prefix::Out(subject, self.payload()?)
                } else if self.eat_sym("?") {
                    Prefix::In(subject, self.param()?)
                } else {
                    return Err(self.error_here("expected `!` or `?`"));
                };
                let cont = self.cont()?;
                Ok(Proc::Sum(vec![Summand { prefix, cont }]))
            }
            Calculus::CmvPlus => self.choice(subject),
            Calculus::Cmv => {
                if self.eat_sym("!") {
                    let v = self.payload()?;
                    Ok(Proc::Send(subject, v, Box::new(self.cont()?)))
                } else if self.eat_sym("?") {
                    let x = self.param()?;
                    Ok(Proc::Recv(subject, x, Box::new(self.cont()?)))
                } else if self.eat_kw("sel") {
                    let l = self.label()?;
                    Ok(Proc::Select(subject, l, Box::new(self.cont()?)))
                } else if self.eat_kw("case") {
                    self.expect_sym("{")?;
                    let mut arms = Vec::new();
                    loop {
                        let l = self.label()?;
                        self.expect_sym(":")?;
                        arms.push((l, self.par()?));
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym("}")?;
                    Ok(Proc::Case(subject, arms))
                } else {
                    Err(self.error_here("expected `!`, `?`, `sel` or `case`"))
                }
            }
        }
    }

    fn choice(&mut self, subject: Name) -> Result<Proc, Error> {
        self.expect_sym("(")?;
        let mut branches: Vec<Branch> = Vec::new();
        if self.eat_sym(")") {
            return Ok(Proc::Nil);
        }
        loop {
            let at = self.peek().cloned();
            let label = self.label()?;
            let payload = if self.eat_sym("!") {
                Payload::Send(self.payload()?)
            } else if self.eat_sym("?") {
                Payload::Recv(self.param()?)
            } else if self.peek_sym("(") || self.peek_sym("+") || self.peek_sym(".") {
                let t = at.unwrap();
                return Err(self.error_at(
                    &t,
                    format!("summands on two endpoints: `{label}` is used as an endpoint inside the choice on `{subject}`"),
                ));
            } else {
                return Err(self.error_here("expected `!` or `?` after the label"));
            };
            let cont = self.cont()?;
            branches.push(Branch { label, payload, cont });
            if !self.eat_sym("+") {
                break;
            }
        }
        self.expect_sym(")")?;
        Ok(Proc::Choice(subject, branches))
    }

    fn restriction(&mut self) -> Result<Proc, Error> {
        let at = self.bump().unwrap();
        let mut items: Vec<Endpoint> = Vec::new();
        while !self.peek_kw("in") {
            let name = self.name()?;
            let side = if self.eat_sym(":") {
                match self.bump().map(|t| t.kind) {
                    Some(Kind::Ident(w, Suffix::None)) if w == "int" => Some(Side::Internal),
                    Some(Kind::Ident(w, Suffix::None)) if w == "ext" => Some(Side::External),
                    _ => return Err(self.error_here("expected `int` or `ext`")),
                }
            } else {
                None
            };
            items.push(Endpoint { name, side });
        }
        self.expect_kw("in")?;
        if items.is_empty() {
            return Err(self.error_at(&at, "restriction binds no names".into()));
        }
        let binders: Vec<Binder> = if self.calculus.is_session() {
            if !items.len().is_multiple_of(2) {
                return Err(self.error_at(&at, "session restrictions bind endpoints in pairs".into()));
            }
            let mut out = Vec::new();
            for pair in items.chunks(2) {
                let (mut a, mut b) = (pair[0].clone(), pair[1].clone());
                if a.name == b.name {
                    return Err(self.error_at(&at, format!("endpoint `{}` bound twice", a.name)));
                }
                match (a.side, b.side) {
                    (Some(x), Some(y)) if x == y => {
                        return Err(self.error_at(
                            &at,
                            format!("dual endpoints `{}` and `{}` need opposite sides", a.name, b.name),
                        ))
                    }
                    (Some(x), None) => b.side = Some(x.dual()),
                    (None, Some(y)) => a.side = Some(y.dual()),
                    _ => {}
                }
                out.push(Binder::Pair(a, b));
            }
            out
        } else {
            if items.iter().any(|e| e.side.is_some()) {
                return Err(self.error_at(&at, "side annotations only apply to session endpoints".into()));
            }
            items.into_iter().map(|e| Binder::Single(e.name)).collect()
        };
        let body = self.par()?;
        Ok(Proc::new_binders(binders, body))
    }

    fn param(&mut self) -> Result<Name, Error> {
        if self.eat_sym("(") {
            if self.eat_sym(")") {
                return Ok(default_param());
            }
            let n = self.name()?;
            self.expect_sym(")")?;
            return Ok(n);
        }
        if self.at_name() {
            return self.name();
        }
        Ok(default_param())
    }

    fn payload(&mut self) -> Result<Value, Error> {
        if self.eat_sym("(") {
            if self.eat_sym(")") {
                return Ok(Value::Unit);
            }
            let v = self.value()?;
            self.expect_sym(")")?;
            return Ok(v);
        }
        if self.at_name() || self.peek_kw("true") || self.peek_kw("false") || self.peek_kw("not") {
            return self.value_not();
        }
        Ok(Value::Unit)
    }

    fn value(&mut self) -> Result<Value, Error> {
        let mut v = self.value_and()?;
        while self.eat_kw("or") {
            v = Value::Or(Box::new(v), Box::new(self.value_and()?));
        }
        Ok(v)
    }

    fn value_and(&mut self) -> Result<Value, Error> {
        let mut v = self.value_not()?;
        while self.eat_kw("and") {
            v = Value::And(Box::new(v), Box::new(self.value_not()?));
        }
        Ok(v)
    }

    fn value_not(&mut self) -> Result<Value, Error> {
        if self.eat_kw("not") {
            return Ok(Value::Not(Box::new(self.value_not()?)));
        }
        if self.eat_kw("true") {
            return Ok(Value::Bool(true));
        }
        if self.eat_kw("false") {
            return Ok(Value::Bool(false));
        }
        if self.eat_sym("(") {
            if self.eat_sym(")") {
                return Ok(Value::Unit);
            }
            let v = self.value()?;
            self.expect_sym(")")?;
            return Ok(v);
        }
        Ok(Value::Name(self.name()?))
    }

    /// Labels and channel names live in one lexical class; an identifier used
    /// as both is almost always an endpoint written where a label belongs.
    fn check_sorts(&self, term: &Proc) -> Result<(), Error> {
        let mut names = Vec::new();
        super::subst::all_names(term, &mut names);
        let names: BTreeSet<&str> = names.iter().map(|n| n.base()).collect();
        for (l, line, col) in &self.labels {
            if l.tag() == LabelTag::Plain && names.contains(l.base()) {
                return Err(Error::Parse {
                    line: *line,
                    col: *col,
                    message: format!("summands on two endpoints: `{l}` is a channel name, not a label"),
                });
            }
        }
        Ok(())
    }
}
