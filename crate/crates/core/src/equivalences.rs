//! Weak reduction barbed bisimilarity and coupled similarity on complete
//! reduction graphs.
//!
//! Both checks work on the component graphs: states that reach each other
//! are weakly bisimilar, and weak steps are the reachability relation
//! between components. The greatest relation is found by deleting pairs
//! that violate a clause until nothing changes.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use crate::error::Result;
use crate::semantics::{barbs, candidates, BitSet, ReductionGraph};
use crate::syntax::{canonicalize, Calculus, Proc};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationKind {
    Bisimulation,
    CoupledSimulation,
}

/// A relation between the states of two graphs, as state-id pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelationWitness {
    pub kind: RelationKind,
    pub pairs: Vec<(usize, usize)>,
}

/// One coupled simulation over the disjoint union of two graphs, split by
/// orientation: `forward` pairs an A state with a B state, `backward` a B
/// state with an A state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoupledWitness {
    pub forward: RelationWitness,
    pub backward: RelationWitness,
}

struct Rel {
    rows: Vec<BitSet>,
    cols: Vec<BitSet>,
}

impl Rel {
    fn new(n: usize, m: usize, keep: impl Fn(usize, usize) -> bool) -> Rel {
        let mut rows = vec![BitSet::new(m); n];
        let mut cols = vec![BitSet::new(n); m];
        for p in 0..n {
            for q in 0..m {
                if keep(p, q) {
                    rows[p].insert(q);
                    cols[q].insert(p);
                }
            }
        }
        Rel { rows, cols }
    }

    fn remove(&mut self, p: usize, q: usize) {
        self.rows[p].remove(q);
        self.cols[q].remove(p);
    }

    fn contains(&self, p: usize, q: usize) -> bool {
        self.rows[p].contains(q)
    }
}

fn bisim_relation(ga: &ReductionGraph, gb: &ReductionGraph) -> Rel {
    let (x, y) = (ga.analysis(), gb.analysis());
    let (n, m) = (x.reach.len(), y.reach.len());
    let mut r = Rel::new(n, m, |p, q| x.weak[p] == y.weak[q]);
    loop {
        let mut changed = false;
        for p in 0..n {
            let qs: Vec<usize> = r.rows[p].iter().collect();
            for q in qs {
                let ok = x.succ[p].iter().all(|&p2| y.reach[q].intersects(&r.rows[p2]))
                    && y.succ[q].iter().all(|&q2| x.reach[p].intersects(&r.cols[q2]));
                if !ok {
                    r.remove(p, q);
                    changed = true;
                }
            }
        }
        if !changed {
            return r;
        }
    }
}

fn coupled_relations(ga: &ReductionGraph, gb: &ReductionGraph) -> (Rel, Rel) {
    let (x, y) = (ga.analysis(), gb.analysis());
    let (n, m) = (x.reach.len(), y.reach.len());
    let mut fwd = Rel::new(n, m, |p, q| x.weak[p].is_subset(&y.weak[q]));
    let mut bwd = Rel::new(m, n, |q, p| y.weak[q].is_subset(&x.weak[p]));
    loop {
        let mut changed = false;
        for p in 0..n {
            let qs: Vec<usize> = fwd.rows[p].iter().collect();
            for q in qs {
                let ok = x.succ[p].iter().all(|&p2| y.reach[q].intersects(&fwd.rows[p2]))
                    && y.reach[q].intersects(&bwd.cols[p]);
                if !ok {
                    fwd.remove(p, q);
                    changed = true;
                }
            }
        }
        for q in 0..m {
            let ps: Vec<usize> = bwd.rows[q].iter().collect();
            for p in ps {
                let ok = y.succ[q].iter().all(|&q2| x.reach[p].intersects(&bwd.rows[q2]))
                    && x.reach[p].intersects(&fwd.cols[q]);
                if !ok {
                    bwd.remove(q, p);
                    changed = true;
                }
            }
        }
        if !changed {
            return (fwd, bwd);
        }
    }
}

/// State pairs below `(a, b)` whose components are related.
fn expand(ga: &ReductionGraph, gb: &ReductionGraph, a: usize, b: usize, r: &Rel, kind: RelationKind) -> RelationWitness {
    let (x, y) = (ga.analysis(), gb.analysis());
    let ra = ga.reachable(a);
    let rb = gb.reachable(b);
    let mut pairs = Vec::new();
    for &s in &ra {
        for &t in &rb {
            if r.contains(x.comp[s], y.comp[t]) {
                pairs.push((s, t));
            }
        }
    }
    RelationWitness { kind, pairs }
}

pub fn weakly_bisimilar(
    ga: &ReductionGraph,
    gb: &ReductionGraph,
    a: usize,
    b: usize,
) -> Result<(bool, Option<RelationWitness>)> {
    ga.require_complete()?;
    gb.require_complete()?;
    let r = bisim_relation(ga, gb);
    if !r.contains(ga.analysis().comp[a], gb.analysis().comp[b]) {
        return Ok((false, None));
    }
    Ok((true, Some(expand(ga, gb, a, b, &r, RelationKind::Bisimulation))))
}

pub fn coupled_similar(
    ga: &ReductionGraph,
    gb: &ReductionGraph,
    a: usize,
    b: usize,
) -> Result<(bool, Option<CoupledWitness>)> {
    ga.require_complete()?;
    gb.require_complete()?;
    let (fwd, bwd) = coupled_relations(ga, gb);
    let (ca, cb) = (ga.analysis().comp[a], gb.analysis().comp[b]);
    if !(fwd.contains(ca, cb) && bwd.contains(cb, ca)) {
        return Ok((false, None));
    }
    Ok((
        true,
        Some(CoupledWitness {
            forward: expand(ga, gb, a, b, &fwd, RelationKind::CoupledSimulation),
            backward: expand(gb, ga, b, a, &bwd, RelationKind::CoupledSimulation),
        }),
    ))
}

/// Weak bisimilarity between any two states of one complete graph.
pub struct BisimTable {
    comp: Vec<usize>,
    rel: Rel,
}

impl BisimTable {
    pub fn new(g: &ReductionGraph) -> Result<Self> {
        g.require_complete()?;
        Ok(BisimTable { comp: g.analysis().comp.clone(), rel: bisim_relation(g, g) })
    }

    pub fn related(&self, s: usize, t: usize) -> bool {
        self.rel.contains(self.comp[s], self.comp[t])
    }
}

/// Classes of weakly bisimilar states of one graph.
pub fn bisimilarity_classes(g: &ReductionGraph) -> Result<Vec<Vec<usize>>> {
    g.require_complete()?;
    let r = bisim_relation(g, g);
    let comp = &g.analysis().comp;
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for s in 0..g.len() {
        let key = r.rows[comp[s]].iter().next().unwrap_or(comp[s]);
        classes.entry(key).or_default().push(s);
    }
    Ok(classes.into_values().collect())
}

struct Checker<'a> {
    g: &'a ReductionGraph,
    reach: HashMap<usize, HashSet<usize>>,
}

impl<'a> Checker<'a> {
    fn new(g: &'a ReductionGraph) -> Self {
        Checker { g, reach: HashMap::new() }
    }

    fn reach(&mut self, s: usize) -> &HashSet<usize> {
        let g = self.g;
        self.reach.entry(s).or_insert_with(|| g.reachable(s).into_iter().collect())
    }
}

/// Checks the clauses of a weak barbed simulation from `ga` into `gb` for
/// every pair in `r`. `coupled` asks the coupling clause against `back`.
fn simulates(
    ga: &ReductionGraph,
    ca: &mut Checker<'_>,
    cb: &mut Checker<'_>,
    r: &HashSet<(usize, usize)>,
    back: &HashSet<(usize, usize)>,
    barbs_equal: bool,
    coupled: bool,
) -> bool {
    let gb = cb.g;
    r.iter().all(|&(p, q)| {
        let (wp, wq) = (ga.weak_barbs(p), gb.weak_barbs(q));
        if (barbs_equal && wp != wq) || !wp.is_subset(wq) {
            return false;
        }
        let rq: Vec<usize> = cb.reach(q).iter().copied().collect();
        let steps = ca.reach(p).clone();
        let sim = steps.iter().all(|&p2| rq.iter().any(|&q2| r.contains(&(p2, q2))));
        let couple = !coupled || rq.iter().any(|&q2| back.contains(&(q2, p)));
        sim && couple
    })
}

/// Re-checks a bisimulation witness clause by clause.
pub fn validate_bisimulation(ga: &ReductionGraph, gb: &ReductionGraph, w: &RelationWitness) -> bool {
    let r: HashSet<(usize, usize)> = w.pairs.iter().copied().collect();
    let inv: HashSet<(usize, usize)> = r.iter().map(|&(p, q)| (q, p)).collect();
    let (mut ca, mut cb) = (Checker::new(ga), Checker::new(gb));
    simulates(ga, &mut ca, &mut cb, &r, &inv, true, false)
        && simulates(gb, &mut cb, &mut ca, &inv, &r, true, false)
}

/// Re-checks a coupled simulation witness clause by clause.
pub fn validate_coupled(ga: &ReductionGraph, gb: &ReductionGraph, w: &CoupledWitness) -> bool {
    let f: HashSet<(usize, usize)> = w.forward.pairs.iter().copied().collect();
    let b: HashSet<(usize, usize)> = w.backward.pairs.iter().copied().collect();
    let (mut ca, mut cb) = (Checker::new(ga), Checker::new(gb));
    simulates(ga, &mut ca, &mut cb, &f, &b, false, true)
        && simulates(gb, &mut cb, &mut ca, &b, &f, false, true)
}

/// Stuck and without barbs.
pub fn is_junk(calculus: Calculus, t: &Proc) -> bool {
    let c = canonicalize(t);
    barbs(calculus, &c).is_empty() && candidates(calculus, &c).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::Limits;
    use crate::syntax::parse;

    fn g(calc: Calculus, s: &str) -> ReductionGraph {
        ReductionGraph::explore(calc, &[parse(calc, s).unwrap()], Limits::states(10_000))
    }

    fn bisim(calc: Calculus, a: &str, b: &str) -> bool {
        let (ga, gb) = (g(calc, a), g(calc, b));
        let (ok, w) = weakly_bisimilar(&ga, &gb, 0, 0).unwrap();
        if let Some(w) = w {
            assert!(validate_bisimulation(&ga, &gb, &w));
        }
        ok
    }

    fn coupled(calc: Calculus, a: &str, b: &str) -> bool {
        let (ga, gb) = (g(calc, a), g(calc, b));
        let (ok, w) = coupled_similar(&ga, &gb, 0, 0).unwrap();
        if let Some(w) = w {
            assert!(validate_coupled(&ga, &gb, &w));
        }
        ok
    }

    #[test]
    fn tau_is_invisible() {
        assert!(bisim(Calculus::Pi, "tau.0", "0"));
        assert!(bisim(Calculus::Pi, "tau.a!", "a!"));
        assert!(!bisim(Calculus::Pi, "a!", "b!"));
        assert!(!bisim(Calculus::Pi, "a!", "a?"));
    }

    #[test]
    fn internal_choice_is_not_bisimilar_to_its_commitment() {
        assert!(!bisim(Calculus::Pi, "tau.a! + tau.b!", "a! | b!"));
        assert!(bisim(Calculus::Pi, "tau.a! + tau.b!", "tau.b! + tau.a!"));
        // a gradual commitment
        let p = "tau.a! + tau.b! + tau.c!";
        let q = "tau.a! + tau.(tau.b! + tau.c!)";
        assert!(!bisim(Calculus::Pi, p, q));
        assert!(coupled(Calculus::Pi, p, q));
    }

    #[test]
    fn coupled_similarity_is_weaker() {
        assert!(!coupled(Calculus::Pi, "tau.a! + tau.b!", "a!"));
        assert!(coupled(Calculus::Pi, "tau.0", "0"));
        assert!(coupled(Calculus::Pi, "a! | tau.b!", "tau.(a! | b!)") == bisim(Calculus::Pi, "a! | tau.b!", "tau.(a! | b!)"));
    }

    #[test]
    fn truncated_graphs_are_inconclusive() {
        let ga = ReductionGraph::explore(
            Calculus::Pi,
            &[parse(Calculus::Pi, "new a in (a! | rep a?(x).(a! | a!))").unwrap()],
            Limits::states(3),
        );
        assert!(weakly_bisimilar(&ga, &ga, 0, 0).is_err());
        assert!(coupled_similar(&ga, &ga, 0, 0).is_err());
    }

    #[test]
    fn classes_partition_states() {
        let gr = g(Calculus::Pi, "a! | b! | tau.c!");
        assert_eq!(bisimilarity_classes(&gr).unwrap().len(), 1);
        let gr = g(Calculus::Pi, "a! | tau.0 + tau.b! | tau.0");
        let classes = bisimilarity_classes(&gr).unwrap();
        assert_eq!(classes.iter().map(Vec::len).sum::<usize>(), gr.len());
        assert_eq!(gr.len(), 6);
        assert_eq!(classes.len(), 3);
    }

    #[test]
    fn junk() {
        assert!(is_junk(Calculus::Cmv, &Proc::Nil));
        assert!(is_junk(Calculus::Cmv, &parse(Calculus::Cmv, "new s t in t sel lam'2.0").unwrap()));
        assert!(!is_junk(Calculus::Cmv, &parse(Calculus::Cmv, "x!(true).0").unwrap()));
    }
}
