//! Abstract syntax shared by the three calculi.
//!
//! One [`Proc`] type covers the pi-calculus with mixed choice, mixed sessions
//! (`Cmv+`) and separate sessions (`Cmv`). Each calculus uses a subset of the
//! constructors; [`Proc::check`] rejects constructors that do not belong to
//! the calculus at hand.

mod canon;
mod name;
mod parse;
mod print;
mod subst;
mod value;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use canon::{canonicalize, decompose, recompose, Decomposition};
pub use name::{Label, LabelTag, Name};
pub use parse::{parse, parse_document, AutomorphismSpec, Document};
pub use subst::{free_names, rename, substitute, substitute_with, NameSupply, Substitution};
pub use value::{eval_expr, EvalError, Value};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Calculus {
    #[serde(rename = "pi")]
    Pi,
    #[serde(rename = "cmv+")]
    CmvPlus,
    #[serde(rename = "cmv")]
    Cmv,
}

impl Calculus {
    pub fn as_str(self) -> &'static str {
        match self {
            Calculus::Pi => "pi",
            Calculus::CmvPlus => "cmv+",
            Calculus::Cmv => "cmv",
        }
    }

    /// Session calculi restrict channels as pairs of endpoints.
    pub fn is_session(self) -> bool {
        !matches!(self, Calculus::Pi)
    }
}

impl fmt::Display for Calculus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Calculus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pi" => Ok(Calculus::Pi),
            "cmv+" | "cmvplus" => Ok(Calculus::CmvPlus),
            "cmv" => Ok(Calculus::Cmv),
            other => Err(Error::UnknownCalculus(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    #[serde(rename = "!")]
    Send,
    #[serde(rename = "?")]
    Recv,
}

impl Polarity {
    pub fn dual(self) -> Self {
        match self {
            Polarity::Send => Polarity::Recv,
            Polarity::Recv => Polarity::Send,
        }
    }
}

/// Which side of a session an endpoint plays in the encoding into
/// separate sessions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "int")]
    Internal,
    #[serde(rename = "ext")]
    External,
}

impl Side {
    pub fn dual(self) -> Self {
        match self {
            Side::Internal => Side::External,
            Side::External => Side::Internal,
        }
    }
}

/// An endpoint bound by a session restriction, with its optional polarity
/// annotation. The annotation travels with the name through renaming and
/// canonicalization and has no effect on reduction.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Endpoint {
    pub name: Name,
    pub side: Option<Side>,
}

impl Endpoint {
    pub fn plain(name: Name) -> Self {
        Endpoint { name, side: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Binder {
    /// `new x in P` (pi).
    Single(Name),
    /// `new x y in P`: the two dual endpoints of one session channel.
    Pair(Endpoint, Endpoint),
}

impl Binder {
    pub fn names(&self) -> Vec<&Name> {
        match self {
            Binder::Single(n) => vec![n],
            Binder::Pair(a, b) => vec![&a.name, &b.name],
        }
    }

    pub fn binds(&self, n: &Name) -> bool {
        match self {
            Binder::Single(m) => m == n,
            Binder::Pair(a, b) => &a.name == n || &b.name == n,
        }
    }

    /// The dual endpoint of `n` when this binder is a pair containing it.
    pub fn dual_of(&self, n: &Name) -> Option<&Name> {
        match self {
            Binder::Pair(a, b) if &a.name == n => Some(&b.name),
            Binder::Pair(a, b) if &b.name == n => Some(&a.name),
            _ => None,
        }
    }

    pub(crate) fn map_names(&self, mut f: impl FnMut(&Name) -> Name) -> Binder {
        match self {
            Binder::Single(n) => Binder::Single(f(n)),
            Binder::Pair(a, b) => Binder::Pair(
                Endpoint { name: f(&a.name), side: a.side },
                Endpoint { name: f(&b.name), side: b.side },
            ),
        }
    }
}

/// A pi-calculus action prefix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prefix {
    Out(Name, Value),
    In(Name, Name),
    Tau,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Summand {
    pub prefix: Prefix,
    pub cont: Proc,
}

/// The payload side of a mixed-session branch.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Payload {
    Send(Value),
    Recv(Name),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Branch {
    pub label: Label,
    pub payload: Payload,
    pub cont: Proc,
}

impl Branch {
    pub fn polarity(&self) -> Polarity {
        match self.payload {
            Payload::Send(_) => Polarity::Send,
            Payload::Recv(_) => Polarity::Recv,
        }
    }
}

/// Process terms of all three calculi.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Proc {
    Nil,
    Par(Vec<Proc>),
    New(Binder, Box<Proc>),
    /// `rep P` (pi).
    Rep(Box<Proc>),
    /// Guarded mixed choice (pi). The empty sum is written [`Proc::Nil`].
    Sum(Vec<Summand>),
    /// `y ( l!v.P + l?(x).Q + ... )` (cmv+): every branch sits on one endpoint.
    Choice(Name, Vec<Branch>),
    If(Value, Box<Proc>, Box<Proc>),
    /// `y!v.P` (cmv)
    Send(Name, Value, Box<Proc>),
    /// `y?(x).P` (cmv)
    Recv(Name, Name, Box<Proc>),
    /// `y sel l.P` (cmv)
    Select(Name, Label, Box<Proc>),
    /// `y case { l: P, ... }` (cmv)
    Case(Name, Vec<(Label, Proc)>),
}

impl Proc {
    pub fn par(parts: Vec<Proc>) -> Proc {
        let mut parts: Vec<Proc> = parts.into_iter().filter(|p| *p != Proc::Nil).collect();
        match parts.len() {
            0 => Proc::Nil,
            1 => parts.pop().unwrap(),
            _ => Proc::Par(parts),
        }
    }

    pub fn new_binders(binders: impl IntoIterator<Item = Binder>, body: Proc) -> Proc {
        let binders: Vec<Binder> = binders.into_iter().collect();
        binders
            .into_iter()
            .rev()
            .fold(body, |acc, b| Proc::New(b, Box::new(acc)))
    }

    /// The subject name of a guarded component, if it has one.
    pub fn subject(&self) -> Option<&Name> {
        match self {
            Proc::Choice(y, _)
            | Proc::Send(y, _, _)
            | Proc::Recv(y, _, _)
            | Proc::Select(y, _, _)
            | Proc::Case(y, _) => Some(y),
            _ => None,
        }
    }

    /// Number of AST nodes, counting action prefixes, branches, choice
    /// groupings, restrictions and conditionals. `0` continuations, parallel
    /// composition and payload values are not counted; the term `0` on its
    /// own has size 1.
    pub fn size(&self) -> usize {
        fn go(p: &Proc) -> usize {
            match p {
                Proc::Nil => 0,
                Proc::Par(ps) => ps.iter().map(go).sum(),
                Proc::New(_, body) => 1 + go(body),
                Proc::Rep(body) => 1 + go(body),
                Proc::Sum(ss) => 1 + ss.iter().map(|s| 1 + go(&s.cont)).sum::<usize>(),
                Proc::Choice(_, bs) => 1 + bs.iter().map(|b| 1 + go(&b.cont)).sum::<usize>(),
                Proc::If(_, a, b) => 1 + go(a) + go(b),
                Proc::Send(_, _, k) | Proc::Recv(_, _, k) | Proc::Select(_, _, k) => 1 + go(k),
                Proc::Case(_, arms) => 1 + arms.iter().map(|(_, k)| 1 + go(k)).sum::<usize>(),
            }
        }
        go(self).max(1)
    }

    /// Checks that only constructors of `calculus` occur and that the
    /// structural side conditions hold (distinct branching labels, no empty
    /// branching, binder arity).
    pub fn check(&self, calculus: Calculus) -> Result<(), Error> {
        let bad = |what: &str| Err(Error::WrongCalculus { calculus, construct: what.to_string() });
        match self {
            Proc::Nil => Ok(()),
            Proc::Par(ps) => ps.iter().try_for_each(|p| p.check(calculus)),
            Proc::New(b, body) => {
                match (b, calculus.is_session()) {
                    (Binder::Single(_), true) => return bad("single-name restriction"),
                    (Binder::Pair(..), false) => return bad("endpoint-pair restriction"),
                    _ => {}
                }
                body.check(calculus)
            }
            Proc::Rep(body) if calculus == Calculus::Pi => body.check(calculus),
            Proc::Rep(_) => bad("replication"),
            Proc::Sum(ss) if calculus == Calculus::Pi => {
                ss.iter().try_for_each(|s| s.cont.check(calculus))
            }
            Proc::Sum(_) => bad("pi choice"),
            Proc::Choice(_, bs) if calculus == Calculus::CmvPlus => {
                bs.iter().try_for_each(|b| b.cont.check(calculus))
            }
            Proc::Choice(..) => bad("mixed-session choice"),
            Proc::If(_, a, b) if calculus.is_session() => {
                a.check(calculus)?;
                b.check(calculus)
            }
            Proc::If(..) => bad("conditional"),
            Proc::Send(_, _, k) | Proc::Recv(_, _, k) | Proc::Select(_, _, k)
                if calculus == Calculus::Cmv =>
            {
                k.check(calculus)
            }
            Proc::Case(_, arms) if calculus == Calculus::Cmv => {
                let labels: BTreeSet<&Label> = arms.iter().map(|(l, _)| l).collect();
                if labels.len() != arms.len() {
                    return Err(Error::DuplicateBranchLabel);
                }
                if arms.is_empty() {
                    return bad("empty branching");
                }
                arms.iter().try_for_each(|(_, k)| k.check(calculus))
            }
            _ => bad("separate-session prefix"),
        }
    }
}

impl fmt::Debug for Proc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
