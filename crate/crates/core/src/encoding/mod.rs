//! Translation of mixed sessions into separate sessions.
//!
//! A choice on an external endpoint `y` receives a fresh session endpoint and
//! branches on it; one arm per summand, labelled with the summand's label and
//! the dual of its polarity. A choice on an internal endpoint commits to one
//! summand through an administrative branching `s case { lam'j: .. }`
//! raced by selections `t sel lam'j`, then sends a fresh endpoint `c` over
//! `x`, selects the label tagged with the summand's polarity on `d`, and
//! exchanges the payload.

mod harness;

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::semantics::candidates;
use crate::syntax::{
    canonicalize, free_names, Binder, Branch, Calculus, Document, Endpoint, Label, LabelTag, Name,
    NameSupply, Payload, Polarity, Proc, Side, Value,
};

pub use harness::{
    check_barb_sensitivity, check_completeness, check_coupled_correspondence,
    check_divergence_reflection, check_soundness, correspondence, emulate_trace,
    find_intermediate_states, CorrespondenceReport, Emulation, Verdict,
};

/// Which endpoints select (internal) and which branch (external).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PolarityAssignment {
    pub sides: BTreeMap<Name, Side>,
}

impl PolarityAssignment {
    /// Annotations on restrictions plus the `sides:` header for free names.
    pub fn from_document(doc: &Document) -> Self {
        let mut pa = PolarityAssignment { sides: doc.sides.clone() };
        pa.collect_annotations(&doc.term);
        pa
    }

    fn collect_annotations(&mut self, p: &Proc) {
        walk(p, &mut |q| {
            if let Proc::New(Binder::Pair(a, b), _) = q {
                for e in [a, b] {
                    if let Some(side) = e.side {
                        self.sides.insert(e.name.clone(), side);
                    }
                }
            }
        });
    }

    /// Completes the assignment: in an unannotated pair the first endpoint
    /// selects, and free endpoints branch. Existing entries are kept.
    pub fn infer(t: &Proc, given: &PolarityAssignment) -> Self {
        let mut pa = given.clone();
        pa.collect_annotations(t);
        walk(t, &mut |q| {
            if let Proc::New(Binder::Pair(a, b), _) = q {
                let (sa, sb) = (pa.sides.get(&a.name).copied(), pa.sides.get(&b.name).copied());
                let (sa, sb) = match (sa, sb) {
                    (Some(x), Some(y)) => (x, y),
                    (Some(x), None) => (x, x.dual()),
                    (None, Some(y)) => (y.dual(), y),
                    (None, None) => (Side::Internal, Side::External),
                };
                pa.sides.insert(a.name.clone(), sa);
                pa.sides.insert(b.name.clone(), sb);
            }
        });
        for n in free_names(t) {
            pa.sides.entry(n).or_insert(Side::External);
        }
        pa
    }

    /// Writes the assignment onto every restriction of `t`, so that it
    /// survives the renaming of bound names by canonicalization.
    pub fn annotate(&self, t: &Proc) -> Proc {
        let side = |e: &Endpoint| Endpoint {
            name: e.name.clone(),
            side: e.side.or_else(|| self.sides.get(&e.name).copied()),
        };
        let go = |p: &Proc| self.annotate(p);
        match t {
            Proc::Nil => Proc::Nil,
            Proc::Par(ps) => Proc::Par(ps.iter().map(go).collect()),
            Proc::New(Binder::Pair(a, b), body) => Proc::New(Binder::Pair(side(a), side(b)), Box::new(go(body))),
            Proc::New(b, body) => Proc::New(b.clone(), Box::new(go(body))),
            Proc::Rep(b) => Proc::Rep(Box::new(go(b))),
            Proc::Sum(ss) => Proc::Sum(
                ss.iter().map(|s| crate::syntax::Summand { prefix: s.prefix.clone(), cont: go(&s.cont) }).collect(),
            ),
            Proc::Choice(y, bs) => Proc::Choice(
                y.clone(),
                bs.iter().map(|b| Branch { label: b.label.clone(), payload: b.payload.clone(), cont: go(&b.cont) }).collect(),
            ),
            Proc::If(v, a, b) => Proc::If(v.clone(), Box::new(go(a)), Box::new(go(b))),
            Proc::Send(y, v, k) => Proc::Send(y.clone(), v.clone(), Box::new(go(k))),
            Proc::Recv(y, z, k) => Proc::Recv(y.clone(), z.clone(), Box::new(go(k))),
            Proc::Select(y, l, k) => Proc::Select(y.clone(), l.clone(), Box::new(go(k))),
            Proc::Case(y, arms) => Proc::Case(y.clone(), arms.iter().map(|(l, k)| (l.clone(), go(k))).collect()),
        }
    }
}

fn walk(p: &Proc, f: &mut impl FnMut(&Proc)) {
    f(p);
    match p {
        Proc::Nil => {}
        Proc::Par(ps) => ps.iter().for_each(|q| walk(q, f)),
        Proc::New(_, b) | Proc::Rep(b) => walk(b, f),
        Proc::Sum(ss) => ss.iter().for_each(|s| walk(&s.cont, f)),
        Proc::Choice(_, bs) => bs.iter().for_each(|b| walk(&b.cont, f)),
        Proc::If(_, a, b) => {
            walk(a, f);
            walk(b, f);
        }
        Proc::Send(_, _, k) | Proc::Recv(_, _, k) | Proc::Select(_, _, k) => walk(k, f),
        Proc::Case(_, arms) => arms.iter().for_each(|(_, k)| walk(k, f)),
    }
}

/// Deliberately broken variants used to exercise the harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    /// After committing to a summand, the internal side may still abandon
    /// the handshake and do nothing.
    DroppableHandshake,
}

/// `l'!` or `l'?`.
pub fn encoded_label(base: &Label, polarity: Polarity) -> Label {
    let tag = match polarity {
        Polarity::Send => LabelTag::Send,
        Polarity::Recv => LabelTag::Recv,
    };
    Label::with_tag(base.base(), tag)
}

pub fn arm_label(j: usize) -> Label {
    Label::with_tag("lam", LabelTag::Arm(j as u32))
}

pub fn encode(t: &Proc, pa: &PolarityAssignment) -> Result<Proc> {
    encode_with(t, pa, None)
}

pub fn encode_with(t: &Proc, pa: &PolarityAssignment, mutation: Option<Mutation>) -> Result<Proc> {
    t.check(Calculus::CmvPlus)?;
    let mut enc = Encoder { pa, scope: Vec::new(), supply: NameSupply::seeded(t), mutation };
    enc.go(t)
}

struct Encoder<'a> {
    pa: &'a PolarityAssignment,
    scope: Vec<(Name, Side)>,
    supply: NameSupply,
    mutation: Option<Mutation>,
}

impl Encoder<'_> {
    fn side(&self, y: &Name) -> Result<Side> {
        if let Some((_, s)) = self.scope.iter().rev().find(|(n, _)| n == y) {
            return Ok(*s);
        }
        self.pa
            .sides
            .get(y)
            .copied()
            .ok_or_else(|| Error::Encoding(format!("endpoint {y} has no polarity")))
    }

    fn fresh_pair(&mut self, a: &str, b: &str) -> (Name, Name) {
        (self.supply.fresh(a), self.supply.fresh(b))
    }

    fn go(&mut self, p: &Proc) -> Result<Proc> {
        Ok(match p {
            Proc::Nil => Proc::Nil,
            Proc::Par(ps) => Proc::Par(ps.iter().map(|q| self.go(q)).collect::<Result<_>>()?),
            Proc::New(b, body) => {
                let Binder::Pair(x, y) = b else {
                    return Err(Error::Encoding("single-name restriction".into()));
                };
                let sx = x.side.or_else(|| self.pa.sides.get(&x.name).copied());
                let sy = y.side.or_else(|| self.pa.sides.get(&y.name).copied());
                let (sx, sy) = match (sx, sy) {
                    (Some(a), Some(b)) if a != b => (a, b),
                    (Some(a), None) => (a, a.dual()),
                    (None, Some(b)) => (b.dual(), b),
                    (Some(_), Some(_)) => {
                        return Err(Error::Encoding(format!("{} and {} have the same side", x.name, y.name)))
                    }
                    (None, None) => {
                        return Err(Error::Encoding(format!("restriction {} {} has no polarity", x.name, y.name)))
                    }
                };
                let len = self.scope.len();
                self.scope.push((x.name.clone(), sx));
                self.scope.push((y.name.clone(), sy));
                let body = self.go(body);
                self.scope.truncate(len);
                let b = Binder::Pair(
                    Endpoint { name: x.name.clone(), side: Some(sx) },
                    Endpoint { name: y.name.clone(), side: Some(sy) },
                );
                Proc::New(b, Box::new(body?))
            }
            Proc::If(v, a, b) => Proc::If(v.clone(), Box::new(self.go(a)?), Box::new(self.go(b)?)),
            Proc::Choice(y, bs) => {
                let keys: BTreeSet<(&Label, Polarity)> = bs.iter().map(|b| (&b.label, b.polarity())).collect();
                if keys.len() != bs.len() {
                    return Err(Error::Encoding(format!("repeated label and polarity in a choice on {y}")));
                }
                match self.side(y)? {
                    Side::External => self.external(y, bs)?,
                    Side::Internal => self.internal(y, bs)?,
                }
            }
            other => return Err(Error::Encoding(format!("not a mixed-session term: {other}"))),
        })
    }

    fn payload(&mut self, on: &Name, b: &Branch) -> Result<Proc> {
        let k = self.go(&b.cont)?;
        Ok(match &b.payload {
            Payload::Send(v) => Proc::Send(on.clone(), v.clone(), Box::new(k)),
            Payload::Recv(z) => Proc::Recv(on.clone(), z.clone(), Box::new(k)),
        })
    }

    /// `y?(c). c case { l'dual(*): exchange, ... }`
    fn external(&mut self, y: &Name, bs: &[Branch]) -> Result<Proc> {
        let c = self.supply.fresh("c");
        let mut arms = Vec::with_capacity(bs.len());
        for b in bs {
            arms.push((encoded_label(&b.label, b.polarity().dual()), self.payload(&c, b)?));
        }
        Ok(Proc::Recv(y.clone(), c.clone(), Box::new(Proc::Case(c, arms))))
    }

    /// `new s t in (s case { lam'j: new c d in x!(c). d sel l'*. exchange } | t sel lam'j ...)`
    fn internal(&mut self, x: &Name, bs: &[Branch]) -> Result<Proc> {
        let (s, t) = self.fresh_pair("s", "t");
        let mut arms = Vec::with_capacity(bs.len());
        for (j, b) in bs.iter().enumerate() {
            let (c, d) = self.fresh_pair("c", "d");
            let exchange = self.payload(&d, b)?;
            let select = Proc::Select(d.clone(), encoded_label(&b.label, b.polarity()), Box::new(exchange));
            let handshake = Proc::Send(x.clone(), Value::Name(c.clone()), Box::new(select));
            let handshake = match self.mutation {
                Some(Mutation::DroppableHandshake) => self.droppable(handshake),
                None => handshake,
            };
            let pair = Binder::Pair(Endpoint::plain(c), Endpoint::plain(d));
            arms.push((arm_label(j + 1), Proc::New(pair, Box::new(handshake))));
        }
        let mut parts = vec![Proc::Case(s.clone(), arms)];
        for j in 0..bs.len() {
            parts.push(Proc::Select(t.clone(), arm_label(j + 1), Box::new(Proc::Nil)));
        }
        let pair = Binder::Pair(Endpoint::plain(s), Endpoint::plain(t));
        Ok(Proc::New(pair, Box::new(Proc::Par(parts))))
    }

    fn droppable(&mut self, go_on: Proc) -> Proc {
        let (u, w) = self.fresh_pair("u", "w");
        let (keep, drop) = (Label::new("keep"), Label::new("drop"));
        let body = Proc::Par(vec![
            Proc::Case(u.clone(), vec![(keep.clone(), go_on), (drop.clone(), Proc::Nil)]),
            Proc::Select(w.clone(), keep, Box::new(Proc::Nil)),
            Proc::Select(w.clone(), drop, Box::new(Proc::Nil)),
        ]);
        Proc::New(Binder::Pair(Endpoint::plain(u), Endpoint::plain(w)), Box::new(body))
    }
}

/// Removes top-level components that can never move again and show no
/// barbs: selections, outputs and the like whose dual endpoint occurs in no
/// other component. `Calculus::Cmv` terms only.
pub fn strip_junk(t: &Proc) -> Proc {
    let c = canonicalize(t);
    let (binders, mut comps) = crate::semantics::top_level(&c);
    loop {
        let active: BTreeSet<usize> = candidates(Calculus::Cmv, &Proc::new_binders(binders.clone(), Proc::par(comps.clone())))
            .iter()
            .flat_map(|cand| cand.footprint.components())
            .collect();
        let dead = (0..comps.len()).find(|&i| {
            if active.contains(&i) {
                return false;
            }
            let Some(y) = comps[i].subject() else { return false };
            let Some(dual) = binders.iter().find_map(|b| b.dual_of(y)) else { return false };
            !comps.iter().enumerate().any(|(j, p)| j != i && free_names(p).contains(dual))
                && !free_names(&comps[i]).contains(dual)
        });
        match dead {
            Some(i) => {
                comps.remove(i);
            }
            None => return canonicalize(&Proc::new_binders(binders, Proc::par(comps))),
        }
    }
}
