//! Networks, their hypergraphs and automorphisms, symmetry, and leader
//! election checked over complete reduction graphs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::equivalences::weakly_bisimilar;
use crate::error::{Error, Result};
use crate::semantics::{Barb, BarbDirection, BitSet, Limits, ReductionGraph};
use crate::syntax::{
    canonicalize, free_names, substitute, AutomorphismSpec, Binder, Calculus, Document, Name, Proc,
    Substitution, Value,
};

/// `new x~ in (P1 | ... | Pk)` as written. Node `i` (from 1) is component
/// `i - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    pub calculus: Calculus,
    pub restricted: Vec<Binder>,
    pub components: Vec<Proc>,
    pub ids: Vec<Name>,
}

impl Network {
    /// Peels the outer restrictions and splits the parallel composition
    /// below them, without normalizing.
    pub fn new(calculus: Calculus, term: &Proc, ids: Vec<Name>) -> Network {
        let mut restricted = Vec::new();
        let mut cur = term;
        while let Proc::New(b, body) = cur {
            restricted.push(b.clone());
            cur = body;
        }
        let components = match cur {
            Proc::Par(ps) => ps.clone(),
            other => vec![other.clone()],
        };
        Network { calculus, restricted, components, ids }
    }

    pub fn from_document(doc: &Document) -> Network {
        Network::new(doc.calculus, &doc.term, doc.ids.clone())
    }

    pub fn size(&self) -> usize {
        self.components.len()
    }

    pub fn term(&self) -> Proc {
        Proc::new_binders(self.restricted.iter().cloned(), Proc::par(self.components.clone()))
    }

    fn is_node_name(&self, n: &Name) -> bool {
        self.ids.contains(n) || node_number(n).is_some_and(|i| (1..=self.size()).contains(&i))
    }

    fn announcement(&self, id: &Name) -> Barb {
        let direction = if self.calculus == Calculus::Pi {
            BarbDirection::Output
        } else {
            BarbDirection::Endpoint
        };
        Barb { name: id.clone(), direction }
    }
}

fn node_number(n: &Name) -> Option<usize> {
    if n.is_id() {
        n.base().parse().ok()
    } else {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Hypergraph {
    pub nodes: usize,
    pub arcs: BTreeSet<Name>,
    pub incidence: BTreeMap<Name, BTreeSet<usize>>,
}

/// Arcs are the free names of the components other than node names; outer
/// restrictions are ignored.
pub fn hypergraph(n: &Network) -> Hypergraph {
    let mut incidence: BTreeMap<Name, BTreeSet<usize>> = BTreeMap::new();
    for (i, c) in n.components.iter().enumerate() {
        for x in free_names(c) {
            if !n.is_node_name(&x) {
                incidence.entry(x).or_default().insert(i + 1);
            }
        }
    }
    Hypergraph { nodes: n.size(), arcs: incidence.keys().cloned().collect(), incidence }
}

/// A pair of permutations on nodes and arcs. Unlisted elements are fixed.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize)]
pub struct Automorphism {
    pub nodes: BTreeMap<usize, usize>,
    pub arcs: BTreeMap<Name, Name>,
}

impl Automorphism {
    pub fn identity() -> Self {
        Automorphism::default()
    }

    pub fn from_spec(spec: &AutomorphismSpec) -> Result<Self> {
        let mut nodes = BTreeMap::new();
        for (a, b) in &spec.nodes {
            let (Some(i), Some(j)) = (node_number(a), node_number(b)) else {
                return Err(Error::Argument(format!("node {a}->{b} is not numeric")));
            };
            nodes.insert(i, j);
        }
        Ok(Automorphism { nodes, arcs: spec.arcs.clone() })
    }

    pub fn node(&self, i: usize) -> usize {
        self.nodes.get(&i).copied().unwrap_or(i)
    }

    pub fn arc(&self, x: &Name) -> Name {
        self.arcs.get(x).cloned().unwrap_or_else(|| x.clone())
    }

    /// The substitution that applies the automorphism to a process.
    pub fn substitution(&self) -> Substitution {
        let mut m = Substitution::new();
        for (x, y) in &self.arcs {
            m.insert(x.clone(), Value::Name(y.clone()));
        }
        for (i, j) in &self.nodes {
            m.insert(Name::new(i.to_string()), Value::Name(Name::new(j.to_string())));
        }
        m
    }

    pub fn apply(&self, p: &Proc) -> Proc {
        substitute(p, &self.substitution())
    }
}

pub fn is_automorphism(h: &Hypergraph, sigma: &Automorphism) -> bool {
    let nodes_ok = sigma.nodes.iter().all(|(i, j)| (1..=h.nodes).contains(i) && (1..=h.nodes).contains(j));
    let arcs_ok = sigma.arcs.iter().all(|(x, y)| h.arcs.contains(x) && h.arcs.contains(y));
    if !nodes_ok || !arcs_ok {
        return false;
    }
    let images: BTreeSet<usize> = (1..=h.nodes).map(|i| sigma.node(i)).collect();
    let arc_images: BTreeSet<Name> = h.arcs.iter().map(|x| sigma.arc(x)).collect();
    if images.len() != h.nodes || arc_images.len() != h.arcs.len() {
        return false;
    }
    h.arcs.iter().all(|x| {
        let mapped: BTreeSet<usize> = h.incidence[x].iter().map(|&i| sigma.node(i)).collect();
        h.incidence[&sigma.arc(x)] == mapped
    })
}

pub fn orbits(sigma: &Automorphism, nodes: usize) -> Vec<BTreeSet<usize>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for n in 1..=nodes {
        if seen.contains(&n) {
            continue;
        }
        let mut orbit = BTreeSet::new();
        let mut m = n;
        while orbit.insert(m) {
            m = sigma.node(m);
        }
        seen.extend(orbit.iter().copied());
        out.push(orbit);
    }
    out
}

/// All automorphisms of `h`, by backtracking over node permutations and
/// arcs with matching incidence. Factorial in the number of nodes.
pub fn automorphisms(h: &Hypergraph) -> Vec<Automorphism> {
    fn arcs_for(h: &Hypergraph, perm: &[usize]) -> Vec<BTreeMap<Name, Name>> {
        let arcs: Vec<&Name> = h.arcs.iter().collect();
        let mut out = Vec::new();
        let mut used = BTreeSet::new();
        let mut cur = BTreeMap::new();
        fn go<'a>(
            h: &'a Hypergraph,
            arcs: &[&'a Name],
            perm: &[usize],
            k: usize,
            used: &mut BTreeSet<&'a Name>,
            cur: &mut BTreeMap<Name, Name>,
            out: &mut Vec<BTreeMap<Name, Name>>,
        ) {
            if k == arcs.len() {
                out.push(cur.clone());
                return;
            }
            let x = arcs[k];
            let want: BTreeSet<usize> = h.incidence[x].iter().map(|&i| perm[i - 1]).collect();
            for y in arcs {
                if !used.contains(y) && h.incidence[*y] == want {
                    used.insert(y);
                    if x != *y {
                        cur.insert(x.clone(), (*y).clone());
                    }
                    go(h, arcs, perm, k + 1, used, cur, out);
                    cur.remove(x);
                    used.remove(y);
                }
            }
        }
        go(h, &arcs, perm, 0, &mut used, &mut cur, &mut out);
        out
    }
    fn perms(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in 1..=k {
            if !cur.contains(&i) {
                cur.push(i);
                perms(k, cur, out);
                cur.pop();
            }
        }
    }
    let mut node_perms = Vec::new();
    perms(h.nodes, &mut Vec::new(), &mut node_perms);
    let mut out = Vec::new();
    for p in node_perms {
        for arcs in arcs_for(h, &p) {
            let nodes = (1..=h.nodes).filter(|&i| p[i - 1] != i).map(|i| (i, p[i - 1])).collect();
            out.push(Automorphism { nodes, arcs });
        }
    }
    out
}

/// `P_sigma(i)` weakly bisimilar to `P_i sigma` for every node.
///
/// A component mismatch answers `false` even when `sigma` does not preserve
/// the hypergraph; otherwise a non-automorphism is an argument error.
pub fn symmetric_wrt(n: &Network, sigma: &Automorphism, limits: Limits) -> Result<bool> {
    if (1..=n.size()).any(|i| !(1..=n.size()).contains(&sigma.node(i))) {
        return Err(Error::Argument("node permutation leaves the network".into()));
    }
    for i in 1..=n.size() {
        let lhs = &n.components[sigma.node(i) - 1];
        let rhs = sigma.apply(&n.components[i - 1]);
        if canonicalize(lhs) == canonicalize(&rhs) {
            continue;
        }
        let ga = ReductionGraph::explore(n.calculus, std::slice::from_ref(lhs), limits);
        let gb = ReductionGraph::explore(n.calculus, &[rhs], limits);
        if !weakly_bisimilar(&ga, &gb, ga.roots()[0], gb.roots()[0])?.0 {
            return Ok(false);
        }
    }
    if !is_automorphism(&hypergraph(n), sigma) {
        return Err(Error::Argument("not an automorphism of the network's hypergraph".into()));
    }
    Ok(true)
}

/// A path through the reduction graph, as canonical states.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Execution {
    pub states: Vec<String>,
    #[serde(skip)]
    pub ids: Vec<usize>,
}

impl Execution {
    fn of(g: &ReductionGraph, ids: Vec<usize>) -> Self {
        Execution { states: ids.iter().map(|&s| g.state(s).to_string()).collect(), ids }
    }

    pub fn len(&self) -> usize {
        self.ids.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum ElectionVerdict {
    /// The leader of each maximal execution; empty when the graph has cycles.
    Electoral { leaders: Vec<(Execution, Name)> },
    NotElectoral { counterexample: Execution },
    Inconclusive { reason: String },
}

impl ElectionVerdict {
    pub fn is_electoral(&self) -> bool {
        matches!(self, ElectionVerdict::Electoral { .. })
    }
}

/// States from which a single leader is announced for good.
fn decided(n: &Network, g: &ReductionGraph) -> Vec<Option<Name>> {
    (0..g.len())
        .map(|s| {
            let pers = g.persistent_barbs(s);
            let weak = g.weak_barbs(s);
            let mut leaders = n.ids.iter().filter(|id| pers.contains(&n.announcement(id)));
            let leader = leaders.next()?;
            let others_silent = n
                .ids
                .iter()
                .filter(|m| *m != leader)
                .all(|m| !weak.contains(&n.announcement(m)));
            others_silent.then(|| leader.clone())
        })
        .collect()
}

fn path_to(g: &ReductionGraph, target: usize) -> Vec<usize> {
    let mut parent = vec![usize::MAX; g.len()];
    let mut queue: VecDeque<usize> = g.roots().iter().copied().collect();
    for &r in g.roots() {
        parent[r] = r;
    }
    while let Some(s) = queue.pop_front() {
        if s == target {
            break;
        }
        for t in g.successors(s) {
            if parent[t] == usize::MAX {
                parent[t] = s;
                queue.push_back(t);
            }
        }
    }
    let mut path = vec![target];
    let mut cur = target;
    while parent[cur] != cur {
        cur = parent[cur];
        path.push(cur);
    }
    path.reverse();
    path
}

pub fn network_graph(n: &Network, limits: Limits) -> ReductionGraph {
    ReductionGraph::explore(n.calculus, &[n.term()], limits)
}

/// Every reachable state must be able to reach a state where exactly one
/// leader is announced persistently and no other id is ever announced.
pub fn verify_electoral(n: &Network, limits: Limits) -> ElectionVerdict {
    let g = network_graph(n, limits);
    if g.truncated() {
        return ElectionVerdict::Inconclusive { reason: "reduction graph truncated".into() };
    }
    let leader = decided(n, &g);
    let a = g.analysis();
    let mut good = BitSet::new(a.reach.len());
    for (s, l) in leader.iter().enumerate() {
        if l.is_some() {
            good.insert(a.comp[s]);
        }
    }
    let root = g.roots()[0];
    for s in g.reachable(root) {
        if !a.reach[a.comp[s]].intersects(&good) {
            return ElectionVerdict::NotElectoral { counterexample: Execution::of(&g, path_to(&g, s)) };
        }
    }
    let leaders = match maximal_paths(&g, EXECUTION_CAP) {
        Ok((_, paths)) => paths
            .into_iter()
            .map(|p| {
                let last = *p.last().unwrap();
                (Execution::of(&g, p), leader[last].clone().unwrap())
            })
            .collect(),
        Err(_) => Vec::new(),
    };
    ElectionVerdict::Electoral { leaders }
}

/// Re-checks a counterexample: consecutive states are steps, and the last
/// one cannot reach a decided state.
pub fn validate_counterexample(n: &Network, e: &Execution, limits: Limits) -> bool {
    let g = network_graph(n, limits);
    if g.truncated() || e.ids.first() != g.roots().first() {
        return false;
    }
    let steps_ok = e.ids.windows(2).all(|w| g.successors(w[0]).contains(&w[1]));
    let leader = decided(n, &g);
    let last = *e.ids.last().unwrap();
    steps_ok && g.reachable(last).iter().all(|&s| leader[s].is_none())
}

/// Executions listed at most; the count is exact regardless.
pub const EXECUTION_CAP: usize = 10_000;

fn maximal_paths(g: &ReductionGraph, cap: usize) -> Result<(u128, Vec<Vec<usize>>)> {
    g.require_complete()?;
    if g.has_cycle() {
        return Err(Error::CyclicGraph);
    }
    let root = g.roots()[0];
    let mut count = vec![None::<u128>; g.len()];
    fn paths_from(g: &ReductionGraph, s: usize, memo: &mut Vec<Option<u128>>) -> u128 {
        if let Some(c) = memo[s] {
            return c;
        }
        let succ = g.successors(s);
        let c = if succ.is_empty() {
            1
        } else {
            succ.iter().fold(0u128, |acc, &t| acc.saturating_add(paths_from(g, t, memo)))
        };
        memo[s] = Some(c);
        c
    }
    let total = paths_from(g, root, &mut count);
    let mut out = Vec::new();
    let mut stack = vec![(vec![root], 0usize)];
    while let Some((path, _)) = stack.pop() {
        if out.len() >= cap {
            break;
        }
        let last = *path.last().unwrap();
        let succ = g.successors(last);
        if succ.is_empty() {
            out.push(path);
            continue;
        }
        for &t in succ.iter().rev() {
            let mut p = path.clone();
            p.push(t);
            stack.push((p, 0));
        }
    }
    Ok((total, out))
}

/// Maximal reduction sequences from the network, as sequences of canonical
/// states. Fails on cyclic or truncated graphs.
pub fn maximal_executions(n: &Network, limits: Limits) -> Result<(u128, Vec<Execution>)> {
    let g = network_graph(n, limits);
    let (count, paths) = maximal_paths(&g, EXECUTION_CAP)?;
    Ok((count, paths.into_iter().map(|p| Execution::of(&g, p)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::tests::LE_PI;
    use crate::syntax::parse;

    fn le() -> Network {
        let ids = (1..=5).map(|i| Name::new(i.to_string())).collect();
        Network::new(Calculus::Pi, &parse(Calculus::Pi, LE_PI).unwrap(), ids)
    }

    fn rotation() -> Automorphism {
        let mut arcs = BTreeMap::new();
        for ring in [["a", "b", "c", "d", "e"], ["v", "w", "x", "y", "z"]] {
            for i in 0..5 {
                arcs.insert(Name::new(ring[i]), Name::new(ring[(i + 1) % 5]));
            }
        }
        let nodes = (1..=5).map(|i| (i, i % 5 + 1)).collect();
        Automorphism { nodes, arcs }
    }

    #[test]
    fn leader_election_hypergraph() {
        let h = hypergraph(&le());
        assert_eq!(h.nodes, 5);
        assert_eq!(h.arcs.len(), 10);
        assert!(h.incidence.values().all(|t| t.len() == 2));
        assert!(is_automorphism(&h, &rotation()));
        assert!(is_automorphism(&h, &Automorphism::identity()));
        let mut swap = Automorphism::identity();
        swap.arcs.insert(Name::new("a"), Name::new("b"));
        swap.arcs.insert(Name::new("b"), Name::new("a"));
        assert!(!is_automorphism(&h, &swap));
        assert_eq!(orbits(&rotation(), 5).len(), 1);
        assert_eq!(orbits(&Automorphism::identity(), 5).len(), 5);
        let found = automorphisms(&h);
        assert!(found.contains(&rotation()));
    }

    #[test]
    fn orbit_sizes() {
        let sigma = Automorphism { nodes: [(1, 2), (2, 1), (3, 4), (4, 5), (5, 3)].into_iter().collect(), arcs: BTreeMap::new() };
        let sizes: Vec<usize> = orbits(&sigma, 5).iter().map(BTreeSet::len).collect();
        assert_eq!(sizes, vec![2, 3]);
    }

    #[test]
    fn leader_election_is_symmetric_and_electoral() {
        let n = le();
        assert!(symmetric_wrt(&n, &rotation(), Limits::default()).unwrap());
        let mut broken = n.clone();
        broken.components[0] = Proc::Nil;
        assert!(!symmetric_wrt(&broken, &rotation(), Limits::default()).unwrap());
        let v = verify_electoral(&n, Limits::default());
        let ElectionVerdict::Electoral { leaders } = v else { panic!("{v:?}") };
        assert_eq!(leaders.len(), 10);
        let mut wins: BTreeMap<Name, usize> = BTreeMap::new();
        for (_, l) in &leaders {
            *wins.entry(l.clone()).or_default() += 1;
        }
        assert_eq!(wins.len(), 5);
        assert!(wins.values().all(|&w| w == 2));
        assert_eq!(maximal_executions(&n, Limits::default()).unwrap().0, 10);
    }

    #[test]
    fn trivial_networks() {
        let one = Network::new(Calculus::Pi, &parse(Calculus::Pi, "1!").unwrap(), vec![Name::new("1")]);
        assert!(verify_electoral(&one, Limits::default()).is_electoral());
        let zero = Network::new(Calculus::Pi, &Proc::Nil, vec![]);
        let (count, execs) = maximal_executions(&zero, Limits::default()).unwrap();
        assert_eq!(count, 1);
        assert!(execs[0].is_empty());
        let two = Network::new(Calculus::Pi, &parse(Calculus::Pi, "1! | 2!").unwrap(), vec![Name::new("1"), Name::new("2")]);
        let v = verify_electoral(&two, Limits::default());
        let ElectionVerdict::NotElectoral { counterexample } = &v else { panic!("{v:?}") };
        assert!(validate_counterexample(&two, counterexample, Limits::default()));
    }

    #[test]
    fn cyclic_graphs_have_no_execution_count() {
        let n = Network::new(Calculus::Pi, &parse(Calculus::Pi, "rep tau.0").unwrap(), vec![]);
        assert!(matches!(maximal_executions(&n, Limits::default()), Err(Error::CyclicGraph)));
    }
}
