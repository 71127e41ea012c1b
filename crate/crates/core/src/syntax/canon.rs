//! Structural-congruence normal forms and standard-form decomposition.
//!
//! A term is flattened into restrictions over a multiset of components.
//! Components that share restricted names form clusters; every cluster gets
//! an exact canonical numbering of its binders (colour refinement followed by
//! individualization, keeping the least candidate), and the clusters are then
//! laid out in sorted order.

use std::collections::{BTreeMap, BTreeSet};

use super::name::{HOLE_BASE, MARK_BASE, TEMP_BASE};
use super::subst::{map_all_names, substitute, substitute_with, NameSupply, Substitution};
use super::{free_names, Binder, Branch, Name, Payload, Prefix, Proc, Summand, Value};

/// The normal form of `p` modulo structural congruence without replication
/// unfolding.
pub fn canonicalize(p: &Proc) -> Proc {
    let d = free_names(p)
        .iter()
        .filter_map(Name::bound_index)
        .max()
        .map_or(0, |k| k + 1);
    Canon::default().at(p, d)
}

#[derive(Default)]
struct Canon {
    next_temp: u32,
}

struct Cluster {
    binders: Vec<Binder>,
    comps: Vec<Proc>,
    width: u32,
}

impl Canon {
    fn temp(&mut self) -> Name {
        self.next_temp += 1;
        Name::special(TEMP_BASE, self.next_temp)
    }

    fn flatten(&mut self, p: &Proc, binders: &mut Vec<Binder>, comps: &mut Vec<Proc>) {
        match p {
            Proc::Nil => {}
            Proc::Par(ps) => ps.iter().for_each(|q| self.flatten(q, binders, comps)),
            Proc::New(b, body) => {
                let mut m = Substitution::new();
                let nb = b.map_names(|n| {
                    let t = self.temp();
                    m.insert(n.clone(), Value::Name(t.clone()));
                    t
                });
                let body = substitute(body, &m);
                binders.push(nb);
                self.flatten(&body, binders, comps);
            }
            Proc::Sum(ss) if ss.is_empty() => {}
            Proc::Choice(_, bs) if bs.is_empty() => {}
            _ => comps.push(p.clone()),
        }
    }

    /// Canonical form of `p`, numbering its binders from `d` upwards.
    fn at(&mut self, p: &Proc, d: u32) -> Proc {
        let mut binders = Vec::new();
        let mut comps = Vec::new();
        self.flatten(p, &mut binders, &mut comps);
        if binders.is_empty() && comps.len() <= 1 {
            return match comps.pop() {
                None => Proc::Nil,
                Some(c) => self.comp(&c, d),
            };
        }
        let fvs: Vec<BTreeSet<Name>> = comps.iter().map(free_names).collect();
        binders.retain(|b| b.names().iter().any(|n| fvs.iter().any(|s| s.contains(*n))));

        // union-find over components (0..nc) and binders (nc..)
        let nc = comps.len();
        let mut parent: Vec<usize> = (0..nc + binders.len()).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let owner: BTreeMap<&Name, usize> = binders
            .iter()
            .enumerate()
            .flat_map(|(j, b)| b.names().into_iter().map(move |n| (n, j)))
            .collect();
        for (i, fv) in fvs.iter().enumerate() {
            for n in fv {
                if let Some(&j) = owner.get(n) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, nc + j));
                    parent[a] = b;
                }
            }
        }
        let mut groups: BTreeMap<usize, (Vec<Binder>, Vec<Proc>)> = BTreeMap::new();
        for (j, b) in binders.iter().enumerate() {
            let r = find(&mut parent, nc + j);
            groups.entry(r).or_default().0.push(b.clone());
        }
        for (i, c) in comps.into_iter().enumerate() {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().1.push(c);
        }

        let mut clusters: Vec<Cluster> = groups
            .into_values()
            .map(|(bs, cs)| self.cluster(bs, cs, d))
            .collect();
        clusters.sort_by(|a, b| (&a.comps, &a.binders).cmp(&(&b.comps, &b.binders)));

        let mut all_binders = Vec::new();
        let mut all_comps = Vec::new();
        let mut offset = 0u32;
        for c in clusters {
            if offset == 0 {
                all_binders.extend(c.binders);
                all_comps.extend(c.comps);
            } else {
                let mut shift = |n: &Name| match n.bound_index() {
                    Some(k) if k >= d => Name::bound(k + offset),
                    _ => n.clone(),
                };
                all_binders.extend(c.binders.iter().map(|b| b.map_names(&mut shift)));
                all_comps.extend(c.comps.iter().map(|p| map_all_names(p, &mut shift)));
            }
            offset += c.width;
        }
        all_comps.sort();
        all_binders.sort_by_key(|b| b.names()[0].bound_index());
        Proc::new_binders(all_binders, Proc::par(all_comps))
    }

    fn cluster(&mut self, binders: Vec<Binder>, comps: Vec<Proc>, d: u32) -> Cluster {
        let names: Vec<Name> = binders.iter().flat_map(|b| b.names()).cloned().collect();
        let m = names.len();
        let inner = d + m as u32;
        let pre: Vec<Proc> = comps.iter().map(|c| self.comp(c, inner)).collect();
        if m == 0 {
            let mut comps = pre;
            comps.sort();
            return Cluster { binders, comps, width: 0 };
        }
        let index: BTreeMap<&Name, usize> = names.iter().enumerate().map(|(i, n)| (n, i)).collect();
        let mut partner = vec![None; m];
        let mut kind = Vec::with_capacity(m);
        for b in &binders {
            match b {
                Binder::Single(_) => kind.push((0u8, None)),
                Binder::Pair(x, y) => {
                    let (i, j) = (index[&x.name], index[&y.name]);
                    partner[i] = Some(j);
                    partner[j] = Some(i);
                    kind.push((1, x.side));
                    kind.push((1, y.side));
                }
            }
        }
        let occ: Vec<Vec<usize>> = names
            .iter()
            .map(|n| {
                (0..pre.len())
                    .filter(|&c| free_names(&pre[c]).contains(n))
                    .collect()
            })
            .collect();
        let ctx = ClusterCtx { names: &names, partner: &partner, occ: &occ, pre: &pre, inner, d };
        let colours = rank(&kind);
        let colours = self.refine(&ctx, colours);
        let mut best = None;
        self.search(&ctx, &binders, colours, &mut best);
        let (comps, binders) = best.unwrap();
        Cluster { binders, comps, width: m as u32 }
    }

    fn refine(&mut self, ctx: &ClusterCtx<'_>, mut colours: Vec<u32>) -> Vec<u32> {
        let mut classes = count_classes(&colours);
        loop {
            let sigs: Vec<(u32, u32, Vec<Proc>)> = (0..ctx.names.len())
                .map(|i| {
                    let pc = ctx.partner[i].map_or(u32::MAX, |j| colours[j]);
                    let mut shapes: Vec<Proc> = ctx.occ[i]
                        .iter()
                        .map(|&c| {
                            let mut f = |n: &Name| {
                                if *n == ctx.names[i] {
                                    Name::special(MARK_BASE, 0)
                                } else if let Some(j) = ctx.names.iter().position(|x| x == n) {
                                    Name::special(HOLE_BASE, colours[j])
                                } else {
                                    n.clone()
                                }
                            };
                            let marked = map_all_names(&ctx.pre[c], &mut f);
                            self.comp(&marked, ctx.inner)
                        })
                        .collect();
                    shapes.sort();
                    (colours[i], pc, shapes)
                })
                .collect();
            colours = rank(&sigs);
            let now = count_classes(&colours);
            if now == classes {
                return colours;
            }
            classes = now;
        }
    }

    fn search(
        &mut self,
        ctx: &ClusterCtx<'_>,
        binders: &[Binder],
        colours: Vec<u32>,
        best: &mut Option<(Vec<Proc>, Vec<Binder>)>,
    ) {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for &c in &colours {
            *counts.entry(c).or_default() += 1;
        }
        let cell = counts.iter().find(|(_, &k)| k > 1).map(|(&c, _)| c);
        match cell {
            None => {
                let cand = self.labelled(ctx, binders, &colours);
                if best.as_ref().is_none_or(|b| cand < *b) {
                    *best = Some(cand);
                }
            }
            Some(c) => {
                for i in 0..colours.len() {
                    if colours[i] != c {
                        continue;
                    }
                    let mut next: Vec<u32> = colours.iter().map(|&x| 2 * x + 1).collect();
                    next[i] = 2 * c;
                    let next = self.refine(ctx, rank(&next));
                    self.search(ctx, binders, next, best);
                }
            }
        }
    }

    fn labelled(
        &mut self,
        ctx: &ClusterCtx<'_>,
        binders: &[Binder],
        colours: &[u32],
    ) -> (Vec<Proc>, Vec<Binder>) {
        let mut f = |n: &Name| match ctx.names.iter().position(|x| x == n) {
            Some(i) => Name::bound(ctx.d + colours[i]),
            None => n.clone(),
        };
        let mut comps: Vec<Proc> = ctx
            .pre
            .iter()
            .map(|c| map_all_names(c, &mut f))
            .collect::<Vec<_>>()
            .into_iter()
            .map(|c| self.comp(&c, ctx.inner))
            .collect();
        comps.sort();
        let mut bs: Vec<Binder> = binders
            .iter()
            .map(|b| match b.map_names(&mut f) {
                Binder::Pair(x, y) if y.name < x.name => Binder::Pair(y, x),
                other => other,
            })
            .collect();
        bs.sort_by_key(|b| b.names()[0].bound_index());
        (comps, bs)
    }

    fn param(&mut self, x: &Name, k: &Proc, inner: u32) -> (Name, Proc) {
        let b = Name::bound(inner);
        let k = if *x == b {
            k.clone()
        } else {
            let mut m = Substitution::new();
            m.insert(x.clone(), Value::Name(b.clone()));
            substitute(k, &m)
        };
        (b, self.at(&k, inner + 1))
    }

    /// Normal form of a single guarded (or replicated) component whose inner
    /// binders are numbered from `inner`.
    fn comp(&mut self, c: &Proc, inner: u32) -> Proc {
        match c {
            Proc::Nil | Proc::Par(_) | Proc::New(..) => self.at(c, inner),
            Proc::Rep(body) => Proc::Rep(Box::new(self.at(body, inner))),
            Proc::Sum(ss) => Proc::Sum(
                ss.iter()
                    .map(|s| match &s.prefix {
                        Prefix::In(y, x) => {
                            let (x, cont) = self.param(x, &s.cont, inner);
                            Summand { prefix: Prefix::In(y.clone(), x), cont }
                        }
                        prefix => Summand { prefix: prefix.clone(), cont: self.at(&s.cont, inner) },
                    })
                    .collect(),
            ),
            Proc::Choice(y, bs) => Proc::Choice(
                y.clone(),
                bs.iter()
                    .map(|b| match &b.payload {
                        Payload::Recv(x) => {
                            let (x, cont) = self.param(x, &b.cont, inner);
                            Branch { label: b.label.clone(), payload: Payload::Recv(x), cont }
                        }
                        Payload::Send(v) => Branch {
                            label: b.label.clone(),
                            payload: Payload::Send(v.clone()),
                            cont: self.at(&b.cont, inner),
                        },
                    })
                    .collect(),
            ),
            Proc::If(v, a, b) => Proc::If(
                v.clone(),
                Box::new(self.at(a, inner)),
                Box::new(self.at(b, inner)),
            ),
            Proc::Send(y, v, k) => Proc::Send(y.clone(), v.clone(), Box::new(self.at(k, inner))),
            Proc::Recv(y, x, k) => {
                let (x, k) = self.param(x, k, inner);
                Proc::Recv(y.clone(), x, Box::new(k))
            }
            Proc::Select(y, l, k) => Proc::Select(y.clone(), l.clone(), Box::new(self.at(k, inner))),
            Proc::Case(y, arms) => {
                let mut arms: Vec<(_, Proc)> = arms
                    .iter()
                    .map(|(l, k)| (l.clone(), self.at(k, inner)))
                    .collect();
                arms.sort_by(|a, b| a.0.cmp(&b.0));
                Proc::Case(y.clone(), arms)
            }
        }
    }
}

struct ClusterCtx<'a> {
    names: &'a [Name],
    partner: &'a [Option<usize>],
    occ: &'a [Vec<usize>],
    pre: &'a [Proc],
    inner: u32,
    d: u32,
}

fn rank<T: Ord>(keys: &[T]) -> Vec<u32> {
    let mut sorted: Vec<&T> = keys.iter().collect();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(&k).unwrap() as u32)
        .collect()
}

fn count_classes(colours: &[u32]) -> usize {
    colours.iter().collect::<BTreeSet<_>>().len()
}

/// A term split into its outermost restrictions and parallel components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub restricted: Vec<Binder>,
    pub components: Vec<Proc>,
}

impl Decomposition {
    pub fn restricted_names(&self) -> Vec<Name> {
        self.restricted.iter().flat_map(|b| b.names()).cloned().collect()
    }
}

/// Standard form of `t` as written: restrictions are extruded to the top,
/// `0` components and unused restrictions disappear, and bound names are
/// renamed only where extrusion would clash.
pub fn decompose(t: &Proc) -> Decomposition {
    fn go(
        p: &Proc,
        used: &mut BTreeSet<Name>,
        supply: &mut NameSupply,
        out: &mut Decomposition,
    ) {
        match p {
            Proc::Nil => {}
            Proc::Par(ps) => ps.iter().for_each(|q| go(q, used, supply, out)),
            Proc::New(b, body) => {
                let mut m = Substitution::new();
                let nb = b.map_names(|n| {
                    if used.contains(n) {
                        let f = supply.fresh(n.base());
                        m.insert(n.clone(), Value::Name(f.clone()));
                        used.insert(f.clone());
                        f
                    } else {
                        used.insert(n.clone());
                        n.clone()
                    }
                });
                let body = if m.is_empty() {
                    (**body).clone()
                } else {
                    substitute_with(body, &m, supply)
                };
                out.restricted.push(nb);
                go(&body, used, supply, out);
            }
            Proc::Sum(ss) if ss.is_empty() => {}
            Proc::Choice(_, bs) if bs.is_empty() => {}
            _ => out.components.push(p.clone()),
        }
    }
    let mut used = free_names(t);
    let mut supply = NameSupply::seeded(t);
    let mut out = Decomposition { restricted: Vec::new(), components: Vec::new() };
    go(t, &mut used, &mut supply, &mut out);
    let fv: BTreeSet<Name> = out.components.iter().flat_map(free_names).collect();
    out.restricted
        .retain(|b| b.names().iter().any(|n| fv.contains(*n)));
    out
}

/// `(ν restricted)(components₁ | … | componentsₙ)`
pub fn recompose(d: &Decomposition) -> Proc {
    Proc::new_binders(d.restricted.iter().cloned(), Proc::par(d.components.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, Calculus};

    fn c(calc: Calculus, s: &str) -> Proc {
        canonicalize(&parse(calc, s).unwrap())
    }

    fn same(calc: Calculus, a: &str, b: &str) {
        assert_eq!(c(calc, a), c(calc, b), "{a}  vs  {b}");
    }

    fn differ(calc: Calculus, a: &str, b: &str) {
        assert_ne!(c(calc, a), c(calc, b), "{a}  vs  {b}");
    }

    #[test]
    fn congruence_rules() {
        use Calculus::*;
        same(Pi, "a!.b? | 0", "a!.b?");
        same(CmvPlus, "new x y in x (l!true.0) | y (l?(z).0)", "new y x in x (l!true.0) | y (l?(z).0)");
        same(Pi, "a! | (b! | c?)", "(a! | b!) | c?");
        same(Pi, "a! | b?", "b? | a!");
        same(Pi, "new x in new y in x!(y) | y?", "new y in new x in x!(y) | y?");
        same(Pi, "a! | new x in x!", "new x in (a! | x!)");
        same(Pi, "new x in 0", "0");
        same(Pi, "new x in a!", "a!");
        same(Pi, "a?(x).x!", "a?(y).y!");
        same(Pi, "a?(x).(b! | 0 | x?)", "a?(y).(y? | b!)");
        same(Cmv, "x case { m: 0, l: a! }", "x case { l: a!, m: 0 }");
    }

    #[test]
    fn distinctions_are_kept() {
        use Calculus::*;
        differ(Pi, "new x in (x! | x?)", "new x in x! | new y in y?");
        differ(Pi, "a! + b!", "b! + a!");
        differ(Pi, "a?(x).x!", "a?(x).a!");
        differ(CmvPlus, "new x:int y:ext in x (l!.0) | y (l?.0)", "new x:ext y:int in x (l!.0) | y (l?.0)");
        differ(Cmv, "new x y in x!(true).y?", "new x y in x!(true).x?");
    }

    #[test]
    fn symmetric_ring_is_stable_under_rotation() {
        let ring = "new a b c in (a! + b? | b! + c? | c! + a?)";
        let rotated = "new a b c in (c! + a? | b! + c? | a! + b?)";
        same(Calculus::Pi, ring, rotated);
        same(Calculus::Pi, ring, "new b c a in (b! + c? | a! + b? | c! + a?)");
    }

    #[test]
    fn idempotent_on_samples() {
        for (calc, s) in [
            (Calculus::Pi, "new a b in (a! + b?.o! | b! + a?.p!) | rep new c in c!(q)"),
            (Calculus::CmvPlus, "new x y u v in (x (l!true.0) | u (l?(z).if z then y (l!.0) else 0) | v (m!false) | 0)"),
            (Calculus::Cmv, "new s t in s case { a: new c d in x!(c).d sel l'!, b: 0 } | t sel a | new s t in t sel b"),
        ] {
            let once = c(calc, s);
            assert_eq!(canonicalize(&once), once, "{s}");
            assert_eq!(parse(calc, &once.to_string()).map(|p| canonicalize(&p)), Ok(once.clone()));
        }
    }

    #[test]
    fn free_bound_indices_are_not_captured() {
        let p = parse(Calculus::Pi, "new x in x!(_'0)").unwrap();
        let q = canonicalize(&p);
        assert!(free_names(&q).contains(&Name::bound(0)));
    }

    #[test]
    fn decompose_examples() {
        let star = parse(
            Calculus::Pi,
            "a! + b?.o_b! | b! + c?.o_c! | c! + d?.o_d! | d! + e?.o_e! | e! + a?.o_a!",
        )
        .unwrap();
        let d = decompose(&star);
        assert!(d.restricted.is_empty());
        assert_eq!(d.components.len(), 5);
        assert_eq!(decompose(&Proc::Nil), Decomposition { restricted: vec![], components: vec![] });
    }

    #[test]
    fn decompose_renames_on_clash() {
        let p = parse(Calculus::Pi, "x! | new x in x?").unwrap();
        let d = decompose(&p);
        assert_eq!(d.restricted, vec![Binder::Single(Name::tagged("x", 1))]);
        assert_eq!(canonicalize(&recompose(&d)), canonicalize(&p));
    }
}
