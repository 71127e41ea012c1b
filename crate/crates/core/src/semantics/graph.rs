use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::Serialize;

use super::{barbs, candidates, steps_of_canonical, Barb, BitSet, Footprint, Occurrence, StepKind};
use crate::error::{Error, Result};
use crate::syntax::{canonicalize, Calculus, Proc};

/// Exploration bounds. Hitting either marks the graph as truncated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_depth: Option<usize>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 100_000, max_depth: None }
    }
}

impl Limits {
    pub fn states(max_states: usize) -> Self {
        Limits { max_states, max_depth: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepEdge {
    pub from: usize,
    pub to: usize,
    pub footprint: Footprint,
}

/// The graph of strongly connected components, numbered sinks first.
#[derive(Clone, Debug)]
pub(crate) struct Analysis {
    pub(crate) comp: Vec<usize>,
    pub(crate) comp_size: Vec<usize>,
    /// Successor components, excluding the component itself.
    pub(crate) succ: Vec<Vec<usize>>,
    /// Per component: the components reachable from it, itself included.
    pub(crate) reach: Vec<BitSet>,
    pub(crate) weak: Vec<BTreeSet<Barb>>,
    pub(crate) persistent: Vec<BTreeSet<Barb>>,
}

/// States reachable from a set of roots, up to structural congruence.
#[derive(Clone, Debug)]
pub struct ReductionGraph {
    calculus: Calculus,
    states: Vec<Proc>,
    index: HashMap<Proc, usize>,
    edges: Vec<StepEdge>,
    out: Vec<Vec<usize>>,
    barbs: Vec<BTreeSet<Barb>>,
    depth: Vec<usize>,
    roots: Vec<usize>,
    truncated: bool,
    analysis: OnceLock<Analysis>,
}

impl ReductionGraph {
    pub fn explore(calculus: Calculus, roots: &[Proc], limits: Limits) -> ReductionGraph {
        let mut g = ReductionGraph {
            calculus,
            states: Vec::new(),
            index: HashMap::new(),
            edges: Vec::new(),
            out: Vec::new(),
            barbs: Vec::new(),
            depth: Vec::new(),
            roots: Vec::new(),
            truncated: false,
            analysis: OnceLock::new(),
        };
        let mut queue = VecDeque::new();
        for r in roots {
            let c = canonicalize(r);
            let id = match g.index.get(&c) {
                Some(&id) => id,
                None => {
                    if g.states.len() >= limits.max_states.max(1) {
                        g.truncated = true;
                        continue;
                    }
                    let id = g.add(c, 0);
                    queue.push_back(id);
                    id
                }
            };
            g.roots.push(id);
        }
        while let Some(id) = queue.pop_front() {
            let d = g.depth[id];
            if limits.max_depth.is_some_and(|m| d >= m) {
                if !candidates(calculus, &g.states[id]).is_empty() {
                    g.truncated = true;
                }
                continue;
            }
            for step in steps_of_canonical(calculus, &g.states[id]) {
                let to = match g.index.get(&step.target) {
                    Some(&to) => to,
                    None if g.states.len() >= limits.max_states => {
                        g.truncated = true;
                        continue;
                    }
                    None => {
                        let to = g.add(step.target, d + 1);
                        queue.push_back(to);
                        to
                    }
                };
                g.out[id].push(g.edges.len());
                g.edges.push(StepEdge { from: id, to, footprint: step.footprint });
            }
        }
        g
    }

    fn add(&mut self, p: Proc, depth: usize) -> usize {
        let id = self.states.len();
        self.barbs.push(barbs(self.calculus, &p));
        self.index.insert(p.clone(), id);
        self.states.push(p);
        self.out.push(Vec::new());
        self.depth.push(depth);
        id
    }

    pub fn calculus(&self) -> Calculus {
        self.calculus
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Proc] {
        &self.states
    }

    pub fn state(&self, id: usize) -> &Proc {
        &self.states[id]
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn edges(&self) -> &[StepEdge] {
        &self.edges
    }

    pub fn depth(&self, id: usize) -> usize {
        self.depth[id]
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Fails with an inconclusive error when the exploration was cut short.
    pub fn require_complete(&self) -> Result<()> {
        if self.truncated {
            Err(Error::truncated())
        } else {
            Ok(())
        }
    }

    pub fn id_of(&self, t: &Proc) -> Option<usize> {
        self.index.get(&canonicalize(t)).copied()
    }

    pub fn id_of_canonical(&self, t: &Proc) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn out_edges(&self, id: usize) -> impl Iterator<Item = &StepEdge> + '_ {
        self.out[id].iter().map(move |&e| &self.edges[e])
    }

    /// Distinct successor states.
    pub fn successors(&self, id: usize) -> Vec<usize> {
        let set: BTreeSet<usize> = self.out_edges(id).map(|e| e.to).collect();
        set.into_iter().collect()
    }

    pub fn is_terminal(&self, id: usize) -> bool {
        self.out[id].is_empty()
    }

    pub fn barbs(&self, id: usize) -> &BTreeSet<Barb> {
        &self.barbs[id]
    }

    pub(crate) fn analysis(&self) -> &Analysis {
        self.analysis.get_or_init(|| analyse(self))
    }

    /// Barbs of every state reachable from `id` in zero or more steps.
    pub fn weak_barbs(&self, id: usize) -> &BTreeSet<Barb> {
        let a = self.analysis();
        &a.weak[a.comp[id]]
    }

    /// Barbs present in every state reachable from `id`.
    pub fn persistent_barbs(&self, id: usize) -> &BTreeSet<Barb> {
        let a = self.analysis();
        &a.persistent[a.comp[id]]
    }

    pub fn reaches(&self, from: usize, to: usize) -> bool {
        let a = self.analysis();
        a.reach[a.comp[from]].contains(a.comp[to])
    }

    /// All states reachable from `id`, itself included.
    pub fn reachable(&self, id: usize) -> Vec<usize> {
        let a = self.analysis();
        let r = &a.reach[a.comp[id]];
        (0..self.len()).filter(|&s| r.contains(a.comp[s])).collect()
    }

    /// Whether some reduction sequence from a root never ends.
    pub fn has_cycle(&self) -> bool {
        let a = self.analysis();
        a.comp_size.iter().any(|&n| n > 1) || self.edges.iter().any(|e| e.from == e.to)
    }

    pub fn export(&self) -> GraphExport {
        GraphExport {
            calculus: self.calculus,
            truncated: self.truncated,
            roots: self.roots.clone(),
            states: self
                .states
                .iter()
                .enumerate()
                .map(|(id, p)| StateExport {
                    id,
                    term: p.to_string(),
                    barbs: self.barbs[id].iter().map(|b| b.to_string()).collect(),
                    depth: self.depth[id],
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeExport {
                    from: e.from,
                    to: e.to,
                    kind: e.footprint.kind,
                    endpoints: e.footprint.endpoints.iter().map(|n| n.to_string()).collect(),
                    consumed: e.footprint.consumed.iter().cloned().collect(),
                })
                .collect(),
        }
    }

    pub fn to_dot(&self) -> String {
        let esc = |s: String| s.replace('\\', "\\\\").replace('"', "\\\"");
        let mut out = String::from("digraph reductions {\n  node [shape=box, fontname=monospace];\n");
        for (id, p) in self.states.iter().enumerate() {
            let root = if self.roots.contains(&id) { ", penwidth=2" } else { "" };
            let _ = writeln!(out, "  s{id} [label=\"{}\"{root}];", esc(p.to_string()));
        }
        for e in &self.edges {
            let label = match e.footprint.kind {
                StepKind::Communication => {
                    e.footprint.endpoints.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
                }
                k => k.to_string(),
            };
            let _ = writeln!(out, "  s{} -> s{} [label=\"{}\"];", e.from, e.to, esc(label));
        }
        out.push_str("}\n");
        out
    }
}

/// Tarjan's algorithm without recursion; components come out sinks first.
fn sccs(n: usize, succ: impl Fn(usize) -> Vec<usize>) -> (Vec<usize>, usize) {
    const NONE: usize = usize::MAX;
    let mut index = vec![NONE; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![NONE; n];
    let mut stack = Vec::new();
    let mut next = 0;
    let mut ncomp = 0;
    for start in 0..n {
        if index[start] != NONE {
            continue;
        }
        let mut call: Vec<(usize, Vec<usize>, usize)> = vec![(start, succ(start), 0)];
        index[start] = next;
        low[start] = next;
        next += 1;
        stack.push(start);
        on_stack[start] = true;
        while let Some((v, ws, i)) = call.last_mut() {
            let v = *v;
            if *i < ws.len() {
                let w = ws[*i];
                *i += 1;
                if index[w] == NONE {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, succ(w), 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some((u, _, _)) = call.last() {
                    low[*u] = low[*u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    (comp, ncomp)
}

fn analyse(g: &ReductionGraph) -> Analysis {
    let n = g.len();
    let (comp, ncomp) = sccs(n, |v| g.successors(v));
    let mut members = vec![Vec::new(); ncomp];
    for v in 0..n {
        members[comp[v]].push(v);
    }
    let mut reach = vec![BitSet::new(ncomp); ncomp];
    let mut weak = vec![BTreeSet::new(); ncomp];
    let mut persistent: Vec<BTreeSet<Barb>> = vec![BTreeSet::new(); ncomp];
    let mut succ = vec![Vec::new(); ncomp];
    // Tarjan numbers every successor component before its predecessors.
    for c in 0..ncomp {
        reach[c].insert(c);
        let mut pers: Option<BTreeSet<Barb>> = None;
        let mut meet = |s: &BTreeSet<Barb>| {
            pers = Some(match pers.take() {
                None => s.clone(),
                Some(p) => p.intersection(s).cloned().collect(),
            })
        };
        for &v in &members[c] {
            weak[c].extend(g.barbs[v].iter().cloned());
            meet(&g.barbs[v]);
        }
        let succs: BTreeSet<usize> = members[c]
            .iter()
            .flat_map(|&v| g.successors(v))
            .map(|w| comp[w])
            .filter(|&d| d != c)
            .collect();
        succ[c] = succs.iter().copied().collect();
        for d in succs {
            let (lo, hi) = reach.split_at_mut(c);
            hi[0].union_with(&lo[d]);
            let w = weak[d].clone();
            weak[c].extend(w);
            meet(&persistent[d]);
        }
        persistent[c] = pers.unwrap_or_default();
    }
    let comp_size = members.iter().map(Vec::len).collect();
    Analysis { comp, comp_size, succ, reach, weak, persistent }
}

#[derive(Clone, Debug, Serialize)]
pub struct StateExport {
    pub id: usize,
    pub term: String,
    pub barbs: Vec<String>,
    pub depth: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeExport {
    pub from: usize,
    pub to: usize,
    pub kind: StepKind,
    pub endpoints: Vec<String>,
    pub consumed: Vec<Occurrence>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphExport {
    pub calculus: Calculus,
    pub truncated: bool,
    pub roots: Vec<usize>,
    pub states: Vec<StateExport>,
    pub edges: Vec<EdgeExport>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::tests::LE_PI;
    use crate::syntax::parse;

    fn graph(calc: Calculus, s: &str, max: usize) -> ReductionGraph {
        ReductionGraph::explore(calc, &[parse(calc, s).unwrap()], Limits::states(max))
    }

    #[test]
    fn replicated_tau_is_a_self_loop() {
        let g = graph(Calculus::Pi, "rep tau.0", 4);
        assert!(!g.truncated());
        assert_eq!(g.len(), 1);
        assert_eq!(g.successors(0), vec![0]);
        assert!(g.has_cycle());
    }

    #[test]
    fn truncation_is_reported() {
        let g = graph(Calculus::Pi, "new a in (a! | rep a?(x).(a! | a!))", 3);
        assert!(g.truncated());
        assert!(g.len() <= 3);
        assert!(g.require_complete().is_err());
    }

    #[test]
    fn leader_election_states() {
        let g = graph(Calculus::Pi, LE_PI, 10_000);
        assert!(!g.truncated());
        assert!(!g.has_cycle());
        let terminal: Vec<usize> = (0..g.len()).filter(|&s| g.is_terminal(s)).collect();
        let winners: BTreeSet<String> = terminal
            .iter()
            .flat_map(|&s| g.barbs(s).iter().map(|b| b.name.to_string()))
            .collect();
        assert_eq!(winners, ["1", "2", "3", "4", "5"].into_iter().map(String::from).collect());
        let w = g.weak_barbs(g.roots()[0]);
        assert_eq!(w.len(), 5);
        assert!(g.persistent_barbs(g.roots()[0]).is_empty());
        for &t in &terminal {
            assert_eq!(g.barbs(t).len(), 1);
            assert!(g.reaches(g.roots()[0], t));
            assert_eq!(g.persistent_barbs(t), g.barbs(t));
        }
    }

    #[test]
    fn export_and_dot() {
        let g = graph(Calculus::Pi, "a! | a?.b!", 10);
        let e = g.export();
        assert_eq!(e.states.len(), 2);
        assert_eq!(e.edges[0].endpoints, vec!["a".to_string()]);
        assert!(g.to_dot().contains("s0 -> s1 [label=\"a\"]"));
    }
}
