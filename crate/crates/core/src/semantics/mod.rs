//! One-step reductions with footprints, barbs, and reduction graphs.

mod bitset;
mod graph;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::syntax::{
    canonicalize, eval_expr, substitute, substitute_with, Binder, Calculus, Name, NameSupply,
    Payload, Prefix, Proc, Substitution, Value,
};

pub use bitset::BitSet;
pub use graph::{EdgeExport, GraphExport, Limits, ReductionGraph, StateExport, StepEdge};

/// A path of child indices from the root of a canonical term.
///
/// `[i]` is the `i`-th top-level component. `[i, j]` is component `j` of the
/// copy obtained by unfolding the replicated component `i` once.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Occurrence(pub Vec<usize>);

impl Occurrence {
    pub fn component(&self) -> usize {
        self.0[0]
    }

    /// Occurrences inside an unfolded copy are fresh each time, so two steps
    /// meeting there do not compete for the same prefix.
    pub fn is_replicated(&self) -> bool {
        self.0.len() > 1
    }

    /// Resolves the occurrence in a canonical term.
    pub fn resolve(&self, t: &Proc) -> Option<Proc> {
        let (_, comps) = top_level(t);
        let c = comps.get(self.0[0])?.clone();
        match (self.0.len(), c) {
            (1, c) => Some(c),
            (2, Proc::Rep(body)) => {
                let (_, inner) = top_level(&body);
                inner.get(self.0[1]).cloned()
            }
            _ => None,
        }
    }
}

impl fmt::Display for Occurrence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "[{}]", parts.join("."))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Communication,
    #[serde(rename = "tau")]
    TauPrefix,
    Conditional,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepKind::Communication => "communication",
            StepKind::TauPrefix => "tau",
            StepKind::Conditional => "conditional",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Footprint {
    pub consumed: BTreeSet<Occurrence>,
    pub endpoints: BTreeSet<Name>,
    pub kind: StepKind,
}

impl Footprint {
    /// Top-level component indices this step touches.
    pub fn components(&self) -> BTreeSet<usize> {
        self.consumed.iter().map(Occurrence::component).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ReductionStep {
    pub source: Proc,
    pub target: Proc,
    pub footprint: Footprint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BarbDirection {
    Input,
    Output,
    Endpoint,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Barb {
    pub name: Name,
    pub direction: BarbDirection,
}

impl Barb {
    pub fn output(n: impl AsRef<str>) -> Self {
        Barb { name: Name::new(n), direction: BarbDirection::Output }
    }

    pub fn input(n: impl AsRef<str>) -> Self {
        Barb { name: Name::new(n), direction: BarbDirection::Input }
    }

    pub fn endpoint(n: impl AsRef<str>) -> Self {
        Barb { name: Name::new(n), direction: BarbDirection::Endpoint }
    }
}

impl fmt::Display for Barb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.direction {
            BarbDirection::Input => write!(f, "{}?", self.name),
            BarbDirection::Output => write!(f, "{}!", self.name),
            BarbDirection::Endpoint => write!(f, "{}", self.name),
        }
    }
}

impl Serialize for Barb {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Splits a canonical term into its top restrictions and components.
pub(crate) fn top_level(s: &Proc) -> (Vec<Binder>, Vec<Proc>) {
    let mut binders = Vec::new();
    let mut cur = s;
    while let Proc::New(b, body) = cur {
        binders.push(b.clone());
        cur = body;
    }
    let comps = match cur {
        Proc::Nil => Vec::new(),
        Proc::Par(ps) => ps.clone(),
        other => vec![other.clone()],
    };
    (binders, comps)
}

/// A step before its target is put in normal form.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub footprint: Footprint,
    pub raw_target: Proc,
}

impl Candidate {
    pub fn target(&self) -> Proc {
        canonicalize(&self.raw_target)
    }
}

struct Copy {
    binders: Vec<Binder>,
    comps: Vec<Proc>,
}

struct Actor<'a> {
    occ: Occurrence,
    rep: Option<usize>,
    term: &'a Proc,
}

struct Ctx {
    binders: Vec<Binder>,
    comps: Vec<Proc>,
    copies: Vec<Option<Copy>>,
}

impl Ctx {
    fn new(s: &Proc) -> Ctx {
        let (binders, comps) = top_level(s);
        let mut supply = NameSupply::seeded(s);
        let copies = comps
            .iter()
            .map(|c| match c {
                Proc::Rep(body) => {
                    let (bs, cs) = top_level(body);
                    // fresh binder names for the unfolded copy
                    let mut m = Substitution::new();
                    let bs: Vec<Binder> = bs
                        .iter()
                        .map(|b| {
                            b.map_names(|n| {
                                let f = supply.fresh(n.base());
                                m.insert(n.clone(), Value::Name(f.clone()));
                                f
                            })
                        })
                        .collect();
                    let cs = cs
                        .iter()
                        .map(|c| if m.is_empty() { c.clone() } else { substitute_with(c, &m, &mut supply) })
                        .collect();
                    Some(Copy { binders: bs, comps: cs })
                }
                _ => None,
            })
            .collect();
        Ctx { binders, comps, copies }
    }

    fn actors(&self) -> Vec<Actor<'_>> {
        let mut out = Vec::new();
        for (i, c) in self.comps.iter().enumerate() {
            match &self.copies[i] {
                Some(copy) => {
                    for (j, d) in copy.comps.iter().enumerate() {
                        if !matches!(d, Proc::Rep(_)) {
                            out.push(Actor { occ: Occurrence(vec![i, j]), rep: Some(i), term: d });
                        }
                    }
                }
                None => out.push(Actor { occ: Occurrence(vec![i]), rep: None, term: c }),
            }
        }
        out
    }

    fn dual(&self, y: &Name, z: &Name, reps: &[Option<usize>]) -> bool {
        let pair = |b: &Binder| matches!(b, Binder::Pair(a, c) if (&a.name == y && &c.name == z) || (&a.name == z && &c.name == y));
        self.binders.iter().any(pair)
            || reps
                .iter()
                .flatten()
                .any(|&i| self.copies[i].as_ref().is_some_and(|c| c.binders.iter().any(pair)))
    }

    fn rebuild(&self, repl: &[(&Occurrence, Proc)]) -> Proc {
        let find = |o: &[usize]| repl.iter().find(|(occ, _)| occ.0 == o).map(|(_, p)| p.clone());
        let mut binders = self.binders.clone();
        let mut comps = Vec::with_capacity(self.comps.len() + 2);
        for (i, c) in self.comps.iter().enumerate() {
            comps.push(find(&[i]).unwrap_or_else(|| c.clone()));
        }
        let unfolded: BTreeSet<usize> = repl
            .iter()
            .filter(|(o, _)| o.is_replicated())
            .map(|(o, _)| o.component())
            .collect();
        for i in unfolded {
            let copy = self.copies[i].as_ref().unwrap();
            binders.extend(copy.binders.iter().cloned());
            for (j, d) in copy.comps.iter().enumerate() {
                comps.push(find(&[i, j]).unwrap_or_else(|| d.clone()));
            }
        }
        Proc::new_binders(binders, Proc::par(comps))
    }
}

fn pair_ok(a: &Actor<'_>, b: &Actor<'_>) -> bool {
    a.occ != b.occ && (a.rep.is_none() || a.rep != b.rep || a.occ.0[1] != b.occ.0[1])
}

/// All one-step reductions of the canonical term `s`, with targets not yet
/// normalized. Candidates with equal footprints may still differ in target.
pub fn candidates(calculus: Calculus, s: &Proc) -> Vec<Candidate> {
    let ctx = Ctx::new(s);
    let actors = ctx.actors();
    let mut out = Vec::new();
    let single = |a: &Actor<'_>, kind, k: Proc, out: &mut Vec<Candidate>| {
        out.push(Candidate {
            footprint: Footprint {
                consumed: [a.occ.clone()].into_iter().collect(),
                endpoints: BTreeSet::new(),
                kind,
            },
            raw_target: ctx.rebuild(&[(&a.occ, k)]),
        })
    };
    for a in &actors {
        match a.term {
            Proc::Sum(ss) if calculus == Calculus::Pi => {
                for s in ss {
                    if s.prefix == Prefix::Tau {
                        single(a, StepKind::TauPrefix, s.cont.clone(), &mut out);
                    }
                }
            }
            Proc::If(v, p, q) if calculus.is_session() => {
                match eval_expr(v) {
                    Ok(Value::Bool(true)) => single(a, StepKind::Conditional, (**p).clone(), &mut out),
                    Ok(Value::Bool(false)) => single(a, StepKind::Conditional, (**q).clone(), &mut out),
                    _ => {}
                }
            }
            _ => {}
        }
    }
    for (ia, a) in actors.iter().enumerate() {
        for b in &actors[ia + 1..] {
            if !pair_ok(a, b) {
                continue;
            }
            for (x, y) in [(a, b), (b, a)] {
                communications(calculus, &ctx, x, y, &mut out);
            }
        }
    }
    out
}

/// Communications where `a` is the sending side.
fn communications(calculus: Calculus, ctx: &Ctx, a: &Actor<'_>, b: &Actor<'_>, out: &mut Vec<Candidate>) {
    let reps = [a.rep, b.rep];
    let mut push = |endpoints: BTreeSet<Name>, ka: Proc, kb: Proc| {
        out.push(Candidate {
            footprint: Footprint {
                consumed: [a.occ.clone(), b.occ.clone()].into_iter().collect(),
                endpoints,
                kind: StepKind::Communication,
            },
            raw_target: ctx.rebuild(&[(&a.occ, ka), (&b.occ, kb)]),
        })
    };
    let bind = |x: &Name, v: &Value, k: &Proc| {
        let mut m = Substitution::new();
        m.insert(x.clone(), v.clone());
        substitute(k, &m)
    };
    match (calculus, a.term, b.term) {
        (Calculus::Pi, Proc::Sum(sa), Proc::Sum(sb)) => {
            for s in sa {
                let Prefix::Out(y, v) = &s.prefix else { continue };
                for r in sb {
                    if let Prefix::In(z, x) = &r.prefix {
                        if y == z {
                            push([y.clone()].into_iter().collect(), s.cont.clone(), bind(x, v, &r.cont));
                        }
                    }
                }
            }
        }
        (Calculus::CmvPlus, Proc::Choice(y, ba), Proc::Choice(z, bb)) if ctx.dual(y, z, &reps) => {
            for p in ba {
                let Payload::Send(v) = &p.payload else { continue };
                let Ok(v) = eval_expr(v) else { continue };
                for q in bb {
                    if let Payload::Recv(x) = &q.payload {
                        if p.label == q.label {
                            push([y.clone(), z.clone()].into_iter().collect(), p.cont.clone(), bind(x, &v, &q.cont));
                        }
                    }
                }
            }
        }
        (Calculus::Cmv, Proc::Send(y, v, ka), Proc::Recv(z, x, kb)) if ctx.dual(y, z, &reps) => {
            if let Ok(v) = eval_expr(v) {
                push([y.clone(), z.clone()].into_iter().collect(), (**ka).clone(), bind(x, &v, kb));
            }
        }
        (Calculus::Cmv, Proc::Select(y, l, ka), Proc::Case(z, arms)) if ctx.dual(y, z, &reps) => {
            if let Some((_, kb)) = arms.iter().find(|(m, _)| m == l) {
                push([y.clone(), z.clone()].into_iter().collect(), (**ka).clone(), kb.clone());
            }
        }
        _ => {}
    }
}

/// The complete set of one-step reductions of `t`, targets in normal form,
/// duplicates by (target, footprint) removed. `t` is normalized first.
pub fn enumerate_steps(calculus: Calculus, t: &Proc) -> Vec<ReductionStep> {
    let source = canonicalize(t);
    steps_of_canonical(calculus, &source)
}

pub(crate) fn steps_of_canonical(calculus: Calculus, source: &Proc) -> Vec<ReductionStep> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for c in candidates(calculus, source) {
        let target = c.target();
        if seen.insert((target.clone(), c.footprint.clone())) {
            out.push(ReductionStep { source: source.clone(), target, footprint: c.footprint });
        }
    }
    out
}

/// Observables of `t`: unguarded prefixes on free names.
pub fn barbs(calculus: Calculus, t: &Proc) -> BTreeSet<Barb> {
    fn go(calculus: Calculus, p: &Proc, bound: &mut Vec<Name>, out: &mut BTreeSet<Barb>) {
        let mut add = |n: &Name, direction| {
            if !bound.contains(n) {
                out.insert(Barb { name: n.clone(), direction });
            }
        };
        match p {
            Proc::Nil | Proc::If(..) => {}
            Proc::Par(ps) => ps.iter().for_each(|q| go(calculus, q, bound, out)),
            Proc::New(b, body) => {
                let len = bound.len();
                bound.extend(b.names().into_iter().cloned());
                go(calculus, body, bound, out);
                bound.truncate(len);
            }
            Proc::Rep(body) => go(calculus, body, bound, out),
            Proc::Sum(ss) => {
                for s in ss {
                    match &s.prefix {
                        Prefix::Out(y, _) => add(y, BarbDirection::Output),
                        Prefix::In(y, _) => add(y, BarbDirection::Input),
                        Prefix::Tau => {}
                    }
                }
            }
            Proc::Choice(y, _)
            | Proc::Send(y, ..)
            | Proc::Recv(y, ..)
            | Proc::Select(y, ..)
            | Proc::Case(y, _) => add(y, BarbDirection::Endpoint),
        }
    }
    let _ = calculus;
    let mut out = BTreeSet::new();
    go(calculus, t, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::syntax::parse;

    fn steps(calc: Calculus, s: &str) -> Vec<ReductionStep> {
        enumerate_steps(calc, &parse(calc, s).unwrap())
    }

    pub(crate) const LE_PI: &str = "new a b c d e v w x y z in (
        e! + a?.(x! + v?.1!) | a! + b?.(y! + w?.2!) | b! + c?.(z! + x?.3!)
      | c! + d?.(v! + y?.4!) | d! + e?.(w! + z?.5!))";

    #[test]
    fn tau_prefix() {
        let s = steps(Calculus::Pi, "tau.a! + b?");
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].target, canonicalize(&parse(Calculus::Pi, "a!").unwrap()));
        assert_eq!(s[0].footprint.kind, StepKind::TauPrefix);
    }

    #[test]
    fn le_pi_first_stage() {
        let s = steps(Calculus::Pi, LE_PI);
        assert_eq!(s.len(), 5);
        let chans: BTreeSet<Name> = s.iter().flat_map(|x| x.footprint.endpoints.clone()).collect();
        assert_eq!(chans.len(), 5);
        assert!(s.iter().all(|x| x.footprint.endpoints.len() == 1));
    }

    #[test]
    fn same_endpoint_choices_do_not_meet() {
        assert!(steps(Calculus::CmvPlus, "new x y in x (l!true.0) | x (l?(z).0)").is_empty());
        assert_eq!(steps(Calculus::CmvPlus, "new x y in x (l!true.0) | y (l?(z).0)").len(), 1);
        // free dual names do not synchronize
        assert!(steps(Calculus::CmvPlus, "x (l!true.0) | y (l?(z).0)").is_empty());
    }

    #[test]
    fn values_flow_and_conditionals_fire() {
        let s = steps(Calculus::CmvPlus, "new x y in x (l!(not false).0) | y (l?(z).if z then o (m!.0) else 0)");
        assert_eq!(s.len(), 1);
        let t = steps(Calculus::CmvPlus, &s[0].target.to_string());
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].footprint.kind, StepKind::Conditional);
        assert!(t[0].footprint.endpoints.is_empty());
        assert_eq!(barbs(Calculus::CmvPlus, &t[0].target), [Barb::endpoint("o")].into_iter().collect());
    }

    #[test]
    fn separate_sessions() {
        let s = steps(Calculus::Cmv, "new x y in x sel l.x!(true) | y case { l: y?(z).o!(z), m: 0 }");
        assert_eq!(s.len(), 1);
        let t = steps(Calculus::Cmv, &s[0].target.to_string());
        assert_eq!(t.len(), 1);
        let b = barbs(Calculus::Cmv, &t[0].target);
        assert_eq!(b, [Barb::endpoint("o")].into_iter().collect());
    }

    #[test]
    fn replication_unfolds_once() {
        let s = steps(Calculus::Pi, "rep tau.0");
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].target, s[0].source);
        // two copies of one replication would need two unfoldings
        assert!(steps(Calculus::Pi, "rep (a! + a?)").is_empty());
        assert_eq!(steps(Calculus::Pi, "rep (a! | a?)").len(), 1);
        assert_eq!(steps(Calculus::Pi, "rep a! | a?(x).x!").len(), 1);
    }

    #[test]
    fn barbs_of_free_prefixes() {
        assert!(barbs(Calculus::Pi, &Proc::Nil).is_empty());
        let p = parse(Calculus::Pi, "3! | new n in n!").unwrap();
        assert!(barbs(Calculus::Pi, &p).contains(&Barb::output("3")));
        let q = parse(Calculus::CmvPlus, "new x y in x (l!true.0)").unwrap();
        assert!(barbs(Calculus::CmvPlus, &q).is_empty());
        let r = parse(Calculus::Pi, "a! + b?").unwrap();
        assert_eq!(barbs(Calculus::Pi, &r), [Barb::output("a"), Barb::input("b")].into_iter().collect());
    }

    #[test]
    fn two_summands_of_one_choice_share_the_occurrence() {
        let s = steps(Calculus::Pi, "a! + b! | a? | b?");
        assert_eq!(s.len(), 2);
        assert!(!s[0].footprint.consumed.is_disjoint(&s[1].footprint.consumed));
    }
}
