use std::collections::{BTreeMap, BTreeSet};

use super::{Branch, Name, Payload, Prefix, Proc, Summand, Value};

/// A simultaneous substitution of values for free names.
pub type Substitution = BTreeMap<Name, Value>;

/// Hands out names that are not used anywhere in the terms it was seeded with.
#[derive(Clone, Debug, Default)]
pub struct NameSupply {
    max_tag: BTreeMap<String, u32>,
}

impl NameSupply {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn seeded(p: &Proc) -> Self {
        let mut s = Self::new();
        s.seed(p);
        s
    }

    pub fn seed(&mut self, p: &Proc) {
        let mut names = Vec::new();
        all_names(p, &mut names);
        for n in &names {
            self.seed_name(n);
        }
    }

    pub fn seed_value(&mut self, v: &Value) {
        let mut names = Vec::new();
        v.names(&mut names);
        for n in &names {
            self.seed_name(n);
        }
    }

    pub fn seed_name(&mut self, n: &Name) {
        let e = self.max_tag.entry(n.base().to_string()).or_insert(0);
        *e = (*e).max(n.tag().unwrap_or(0));
    }

    /// A name with the given base and a tag above every seeded tag of that base.
    pub fn fresh(&mut self, base: &str) -> Name {
        let e = self.max_tag.entry(base.to_string()).or_insert(0);
        *e += 1;
        Name::tagged(base, *e)
    }
}

pub(crate) fn all_names(p: &Proc, out: &mut Vec<Name>) {
    match p {
        Proc::Nil => {}
        Proc::Par(ps) => ps.iter().for_each(|q| all_names(q, out)),
        Proc::New(b, body) => {
            out.extend(b.names().into_iter().cloned());
            all_names(body, out);
        }
        Proc::Rep(body) => all_names(body, out),
        Proc::Sum(ss) => {
            for s in ss {
                match &s.prefix {
                    Prefix::Out(y, v) => {
                        out.push(y.clone());
                        v.names(out);
                    }
                    Prefix::In(y, x) => out.extend([y.clone(), x.clone()]),
                    Prefix::Tau => {}
                }
                all_names(&s.cont, out);
            }
        }
        Proc::Choice(y, bs) => {
            out.push(y.clone());
            for b in bs {
                match &b.payload {
                    Payload::Send(v) => v.names(out),
                    Payload::Recv(x) => out.push(x.clone()),
                }
                all_names(&b.cont, out);
            }
        }
        Proc::If(v, a, b) => {
            v.names(out);
            all_names(a, out);
            all_names(b, out);
        }
        Proc::Send(y, v, k) => {
            out.push(y.clone());
            v.names(out);
            all_names(k, out);
        }
        Proc::Recv(y, x, k) => {
            out.extend([y.clone(), x.clone()]);
            all_names(k, out);
        }
        Proc::Select(y, _, k) => {
            out.push(y.clone());
            all_names(k, out);
        }
        Proc::Case(y, arms) => {
            out.push(y.clone());
            arms.iter().for_each(|(_, k)| all_names(k, out));
        }
    }
}

/// The names with a free occurrence in `p`.
pub fn free_names(p: &Proc) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    collect_free(p, &mut Vec::new(), &mut out);
    out
}

pub(crate) fn collect_free(p: &Proc, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    fn name(n: &Name, bound: &[Name], out: &mut BTreeSet<Name>) {
        if !bound.contains(n) {
            out.insert(n.clone());
        }
    }
    fn value(v: &Value, bound: &[Name], out: &mut BTreeSet<Name>) {
        let mut ns = Vec::new();
        v.names(&mut ns);
        for n in &ns {
            name(n, bound, out);
        }
    }
    fn under(x: &Name, k: &Proc, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        bound.push(x.clone());
        collect_free(k, bound, out);
        bound.pop();
    }
    match p {
        Proc::Nil => {}
        Proc::Par(ps) => ps.iter().for_each(|q| collect_free(q, bound, out)),
        Proc::New(b, body) => {
            let names = b.names();
            let len = bound.len();
            bound.extend(names.into_iter().cloned());
            collect_free(body, bound, out);
            bound.truncate(len);
        }
        Proc::Rep(body) => collect_free(body, bound, out),
        Proc::Sum(ss) => {
            for s in ss {
                match &s.prefix {
                    Prefix::Out(y, v) => {
                        name(y, bound, out);
                        value(v, bound, out);
                        collect_free(&s.cont, bound, out);
                    }
                    Prefix::In(y, x) => {
                        name(y, bound, out);
                        under(x, &s.cont, bound, out);
                    }
                    Prefix::Tau => collect_free(&s.cont, bound, out),
                }
            }
        }
        Proc::Choice(y, bs) => {
            name(y, bound, out);
            for b in bs {
                match &b.payload {
                    Payload::Send(v) => {
                        value(v, bound, out);
                        collect_free(&b.cont, bound, out);
                    }
                    Payload::Recv(x) => under(x, &b.cont, bound, out),
                }
            }
        }
        Proc::If(v, a, b) => {
            value(v, bound, out);
            collect_free(a, bound, out);
            collect_free(b, bound, out);
        }
        Proc::Send(y, v, k) => {
            name(y, bound, out);
            value(v, bound, out);
            collect_free(k, bound, out);
        }
        Proc::Recv(y, x, k) => {
            name(y, bound, out);
            under(x, k, bound, out);
        }
        Proc::Select(y, _, k) => {
            name(y, bound, out);
            collect_free(k, bound, out);
        }
        Proc::Case(y, arms) => {
            name(y, bound, out);
            arms.iter().for_each(|(_, k)| collect_free(k, bound, out));
        }
    }
}

/// Whether `n` occurs free in `p`, without collecting the whole set.
pub(crate) fn occurs_free(n: &Name, p: &Proc) -> bool {
    free_names(p).contains(n)
}

struct Subst<'a> {
    map: Substitution,
    range: BTreeSet<Name>,
    supply: &'a mut NameSupply,
}

impl Subst<'_> {
    fn subject(&self, y: &Name) -> Name {
        match self.map.get(y) {
            None => y.clone(),
            Some(Value::Name(n)) => n.clone(),
            // A non-name payload received into a subject position leaves a
            // channel that nothing else mentions.
            Some(v) => Name::new(v.to_string()),
        }
    }

    fn value(&self, v: &Value) -> Value {
        v.map_names(&mut |n| self.map.get(n).cloned().unwrap_or_else(|| Value::Name(n.clone())))
    }

    /// Enters the scope of `xs`; returns the renamed binders, or `None` when
    /// nothing in the map survives so the body is unchanged.
    fn enter(&mut self, xs: &[&Name]) -> Option<(Vec<Name>, Substitution)> {
        let saved = self.map.clone();
        for x in xs {
            self.map.remove(*x);
        }
        if self.map.is_empty() {
            self.map = saved;
            return None;
        }
        let mut renamed = Vec::with_capacity(xs.len());
        for x in xs {
            if self.range.contains(*x) {
                let fresh = self.supply.fresh(x.base());
                self.range.insert(fresh.clone());
                self.map.insert((*x).clone(), Value::Name(fresh.clone()));
                renamed.push(fresh);
            } else {
                renamed.push((*x).clone());
            }
        }
        Some((renamed, saved))
    }

    fn bind(&mut self, x: &Name, k: &Proc) -> (Name, Proc) {
        match self.enter(&[x]) {
            None => (x.clone(), k.clone()),
            Some((mut xs, saved)) => {
                let body = self.proc(k);
                self.map = saved;
                (xs.pop().unwrap(), body)
            }
        }
    }

    fn proc(&mut self, p: &Proc) -> Proc {
        match p {
            Proc::Nil => Proc::Nil,
            Proc::Par(ps) => Proc::Par(ps.iter().map(|q| self.proc(q)).collect()),
            Proc::New(b, body) => {
                let names = b.names();
                match self.enter(&names) {
                    None => p.clone(),
                    Some((xs, saved)) => {
                        let body = self.proc(body);
                        self.map = saved;
                        let mut it = xs.into_iter();
                        let b = b.map_names(|_| it.next().unwrap());
                        Proc::New(b, Box::new(body))
                    }
                }
            }
            Proc::Rep(body) => Proc::Rep(Box::new(self.proc(body))),
            Proc::Sum(ss) => Proc::Sum(
                ss.iter()
                    .map(|s| match &s.prefix {
                        Prefix::Out(y, v) => Summand {
                            prefix: Prefix::Out(self.subject(y), self.value(v)),
                            cont: self.proc(&s.cont),
                        },
                        Prefix::In(y, x) => {
                            let y = self.subject(y);
                            let (x, cont) = self.bind(x, &s.cont);
                            Summand { prefix: Prefix::In(y, x), cont }
                        }
                        Prefix::Tau => Summand { prefix: Prefix::Tau, cont: self.proc(&s.cont) },
                    })
                    .collect(),
            ),
            Proc::Choice(y, bs) => Proc::Choice(
                self.subject(y),
                bs.iter()
                    .map(|b| match &b.payload {
                        Payload::Send(v) => Branch {
                            label: b.label.clone(),
                            payload: Payload::Send(self.value(v)),
                            cont: self.proc(&b.cont),
                        },
                        Payload::Recv(x) => {
                            let (x, cont) = self.bind(x, &b.cont);
                            Branch { label: b.label.clone(), payload: Payload::Recv(x), cont }
                        }
                    })
                    .collect(),
            ),
            Proc::If(v, a, b) => {
                Proc::If(self.value(v), Box::new(self.proc(a)), Box::new(self.proc(b)))
            }
            Proc::Send(y, v, k) => Proc::Send(self.subject(y), self.value(v), Box::new(self.proc(k))),
            Proc::Recv(y, x, k) => {
                let y = self.subject(y);
                let (x, k) = self.bind(x, k);
                Proc::Recv(y, x, Box::new(k))
            }
            Proc::Select(y, l, k) => Proc::Select(self.subject(y), l.clone(), Box::new(self.proc(k))),
            Proc::Case(y, arms) => Proc::Case(
                self.subject(y),
                arms.iter().map(|(l, k)| (l.clone(), self.proc(k))).collect(),
            ),
        }
    }
}

/// Capture-avoiding simultaneous substitution.
pub fn substitute(p: &Proc, map: &Substitution) -> Proc {
    let mut supply = NameSupply::seeded(p);
    map.values().for_each(|v| supply.seed_value(v));
    substitute_with(p, map, &mut supply)
}

/// Like [`substitute`], drawing fresh binder names from `supply`, which must
/// already cover `p` and the range of `map`.
pub fn substitute_with(p: &Proc, map: &Substitution, supply: &mut NameSupply) -> Proc {
    let map: Substitution = map
        .iter()
        .filter(|(k, v)| !matches!(v, Value::Name(n) if n == *k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    if map.is_empty() {
        return p.clone();
    }
    let mut range = Vec::new();
    map.values().for_each(|v| v.names(&mut range));
    let mut s = Subst { map, range: range.into_iter().collect(), supply };
    s.proc(p)
}

/// Renames the free name `from` to `to`.
pub fn rename(p: &Proc, from: &Name, to: &Name) -> Proc {
    let mut m = Substitution::new();
    m.insert(from.clone(), Value::Name(to.clone()));
    substitute(p, &m)
}

/// Renames every name occurrence, binders included, with no capture checks.
/// Only sound when `f` is injective on the names it changes and the new
/// names do not occur in `p`.
pub(crate) fn map_all_names(p: &Proc, f: &mut impl FnMut(&Name) -> Name) -> Proc {
    let val = |v: &Value, f: &mut dyn FnMut(&Name) -> Name| v.map_names(&mut |n| Value::Name(f(n)));
    match p {
        Proc::Nil => Proc::Nil,
        Proc::Par(ps) => Proc::Par(ps.iter().map(|q| map_all_names(q, f)).collect()),
        Proc::New(b, body) => Proc::New(b.map_names(|n| f(n)), Box::new(map_all_names(body, f))),
        Proc::Rep(body) => Proc::Rep(Box::new(map_all_names(body, f))),
        Proc::Sum(ss) => Proc::Sum(
            ss.iter()
                .map(|s| Summand {
                    prefix: match &s.prefix {
                        Prefix::Out(y, v) => Prefix::Out(f(y), val(v, f)),
                        Prefix::In(y, x) => Prefix::In(f(y), f(x)),
                        Prefix::Tau => Prefix::Tau,
                    },
                    cont: map_all_names(&s.cont, f),
                })
                .collect(),
        ),
        Proc::Choice(y, bs) => Proc::Choice(
            f(y),
            bs.iter()
                .map(|b| Branch {
                    label: b.label.clone(),
                    payload: match &b.payload {
                        Payload::Send(v) => Payload::Send(val(v, f)),
                        Payload::Recv(x) => Payload::Recv(f(x)),
                    },
                    cont: map_all_names(&b.cont, f),
                })
                .collect(),
        ),
        Proc::If(v, a, b) => Proc::If(val(v, f), Box::new(map_all_names(a, f)), Box::new(map_all_names(b, f))),
        Proc::Send(y, v, k) => Proc::Send(f(y), val(v, f), Box::new(map_all_names(k, f))),
        Proc::Recv(y, x, k) => Proc::Recv(f(y), f(x), Box::new(map_all_names(k, f))),
        Proc::Select(y, l, k) => Proc::Select(f(y), l.clone(), Box::new(map_all_names(k, f))),
        Proc::Case(y, arms) => Proc::Case(
            f(y),
            arms.iter().map(|(l, k)| (l.clone(), map_all_names(k, f))).collect(),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, Calculus};

    fn pi(s: &str) -> Proc {
        parse(Calculus::Pi, s).unwrap()
    }

    fn map(pairs: &[(&str, &str)]) -> Substitution {
        pairs
            .iter()
            .map(|(a, b)| (Name::new(a), Value::Name(Name::new(b))))
            .collect()
    }

    #[test]
    fn restriction_binds() {
        let fv = free_names(&pi("new x in x!y.0"));
        assert_eq!(fv, [Name::new("y")].into_iter().collect());
    }

    #[test]
    fn bound_parameter_untouched() {
        let p = substitute(&pi("x?(z).z!().0"), &map(&[("x", "a")]));
        assert_eq!(p, pi("a?(z).z!().0"));
    }

    #[test]
    fn capture_is_avoided() {
        let p = substitute(&pi("new y in x!y.0"), &map(&[("x", "y")]));
        assert_eq!(p.to_string(), "new y'1 in y!(y'1)");
    }

    #[test]
    fn value_flows_into_payload() {
        let q = parse(Calculus::CmvPlus, "w (l!z.0) | if z then 0 else 0").unwrap();
        let mut m = Substitution::new();
        m.insert(Name::new("z"), Value::Bool(true));
        let r = substitute(&q, &m);
        assert_eq!(r, parse(Calculus::CmvPlus, "w (l!true.0) | if true then 0 else 0").unwrap());
    }

    #[test]
    fn supply_avoids_seeded_names() {
        let p = pi("a'3!.0 | new a in a?.0");
        let mut s = NameSupply::seeded(&p);
        let f = s.fresh("a");
        assert!(!free_names(&p).contains(&f));
        assert_eq!(f, Name::tagged("a", 4));
    }
}
