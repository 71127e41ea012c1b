//! Operational correspondence checks for the translation.
//!
//! Everything is computed over two graphs: the source graph of `S`, and one
//! target graph rooted at the translation of every source state, with a
//! single bisimilarity table over it.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use super::{encode_with, strip_junk, Mutation, PolarityAssignment};
use crate::equivalences::{coupled_similar, BisimTable};
use crate::error::{Error, Result};
use crate::semantics::{Limits, ReductionGraph, ReductionStep};
use crate::syntax::{Calculus, Proc};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    /// Number of obligations examined.
    pub checked: usize,
    pub detail: String,
    /// Terms replaying the witness or counterexample.
    pub witness: Vec<String>,
}

impl Verdict {
    fn ok(checked: usize, detail: impl Into<String>) -> Self {
        Verdict { pass: true, checked, detail: detail.into(), witness: Vec::new() }
    }

    fn fail(checked: usize, detail: impl Into<String>, witness: Vec<String>) -> Self {
        Verdict { pass: false, checked, detail: detail.into(), witness }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrespondenceReport {
    pub source: String,
    pub encoded: String,
    pub source_states: usize,
    pub target_states: usize,
    pub completeness: Verdict,
    pub soundness_gorla: Verdict,
    pub soundness_weak: Verdict,
    pub barb_sensitivity: Verdict,
    pub divergence: Verdict,
    pub coupled: Verdict,
    pub intermediate_states: Vec<String>,
}

impl CorrespondenceReport {
    /// All criteria except the single-step soundness form, which is only
    /// reported.
    pub fn passes(&self) -> bool {
        [&self.completeness, &self.soundness_gorla, &self.barb_sensitivity, &self.divergence, &self.coupled]
            .iter()
            .all(|v| v.pass)
    }
}

struct Setup {
    src: ReductionGraph,
    tgt: ReductionGraph,
    /// Target id of the translation of source state i.
    enc: Vec<usize>,
    table: BisimTable,
}

impl Setup {
    fn new(s: &Proc, pa: &PolarityAssignment, mutation: Option<Mutation>, limits: Limits) -> Result<Self> {
        let pa = PolarityAssignment::infer(s, pa);
        let s = pa.annotate(s);
        let src = ReductionGraph::explore(Calculus::CmvPlus, &[s], limits);
        src.require_complete()?;
        let encoded = src
            .states()
            .iter()
            .map(|t| encode_with(t, &pa, mutation))
            .collect::<Result<Vec<_>>>()?;
        let tgt = ReductionGraph::explore(Calculus::Cmv, &encoded, limits);
        tgt.require_complete()?;
        let enc = tgt.roots().to_vec();
        let table = BisimTable::new(&tgt)?;
        Ok(Setup { src, tgt, enc, table })
    }

    fn s(&self, i: usize) -> String {
        self.src.state(i).to_string()
    }

    fn t(&self, i: usize) -> String {
        self.tgt.state(i).to_string()
    }

    /// Target states bisimilar to the translation of some source state.
    fn good(&self) -> Vec<bool> {
        (0..self.tgt.len()).map(|t| self.enc.iter().any(|&e| self.table.related(t, e))).collect()
    }

    fn completeness(&self) -> Verdict {
        let mut checked = 0;
        for i in 0..self.src.len() {
            let reach = self.tgt.reachable(self.enc[i]);
            for j in self.src.reachable(i) {
                checked += 1;
                if !reach.iter().any(|&t| self.table.related(t, self.enc[j])) {
                    return Verdict::fail(
                        checked,
                        "a source derivative is not emulated",
                        vec![self.s(i), self.s(j)],
                    );
                }
            }
        }
        Verdict::ok(checked, "every source derivative is emulated")
    }

    fn gorla(&self) -> Verdict {
        let good = self.good();
        let reach = self.tgt.reachable(self.enc[0]);
        for (n, &t) in reach.iter().enumerate() {
            if !self.tgt.reachable(t).into_iter().any(|u| good[u]) {
                return Verdict::fail(n + 1, "a target state can no longer catch up with any source state", vec![self.t(t)]);
            }
        }
        Verdict::ok(reach.len(), "every reachable target state can catch up")
    }

    /// If the translation of S_i does one step to T, then either S_i stays
    /// (T reaches something like it) or S_i does one step to S_j and T
    /// reaches something like the translation of S_j.
    fn weak(&self) -> Verdict {
        let mut checked = 0;
        for i in 0..self.src.len() {
            let mut aims = vec![self.enc[i]];
            aims.extend(self.src.successors(i).into_iter().map(|j| self.enc[j]));
            for t in self.tgt.successors(self.enc[i]) {
                checked += 1;
                let reach = self.tgt.reachable(t);
                if !reach.iter().any(|&u| aims.iter().any(|&e| self.table.related(u, e))) {
                    return Verdict::fail(checked, "a single target step is not followed up", vec![self.s(i), self.t(t)]);
                }
            }
        }
        Verdict::ok(checked, "every single target step is followed up")
    }

    fn barbs(&self) -> Verdict {
        for i in 0..self.src.len() {
            let a = self.src.weak_barbs(i);
            let b = self.tgt.weak_barbs(self.enc[i]);
            if a != b {
                let diff: BTreeSet<String> = a.symmetric_difference(b).map(|x| x.to_string()).collect();
                return Verdict::fail(
                    i + 1,
                    format!("weak barbs differ on {}", diff.into_iter().collect::<Vec<_>>().join(" ")),
                    vec![self.s(i)],
                );
            }
        }
        Verdict::ok(self.src.len(), "weak barbs coincide")
    }

    fn divergence(&self) -> Verdict {
        let (s, t) = (self.src.has_cycle(), self.tgt.has_cycle());
        if t && !s {
            Verdict::fail(1, "the translation diverges but the source does not", vec![self.s(0)])
        } else {
            Verdict::ok(1, if t { "both diverge" } else { "no divergence" })
        }
    }

    fn coupled(&self) -> Result<Verdict> {
        let (ok, w) = coupled_similar(&self.src, &self.tgt, 0, self.enc[0])?;
        Ok(match w {
            Some(w) if ok => Verdict {
                pass: true,
                checked: w.forward.pairs.len() + w.backward.pairs.len(),
                detail: "coupled similar".into(),
                witness: Vec::new(),
            },
            _ => Verdict::fail(1, "not coupled similar", vec![self.s(0), self.t(self.enc[0])]),
        })
    }

    fn intermediate(&self) -> Vec<usize> {
        let mut aims = vec![self.enc[0]];
        aims.extend(self.src.reachable(0).into_iter().skip(1).map(|j| self.enc[j]));
        self.tgt
            .reachable(self.enc[0])
            .into_iter()
            .filter(|&t| !aims.iter().any(|&e| self.table.related(t, e)))
            .collect()
    }

    fn report(&self) -> Result<CorrespondenceReport> {
        Ok(CorrespondenceReport {
            source: self.s(0),
            encoded: self.t(self.enc[0]),
            source_states: self.src.len(),
            target_states: self.tgt.len(),
            completeness: self.completeness(),
            soundness_gorla: self.gorla(),
            soundness_weak: self.weak(),
            barb_sensitivity: self.barbs(),
            divergence: self.divergence(),
            coupled: self.coupled()?,
            intermediate_states: self.intermediate().into_iter().map(|t| self.t(t)).collect(),
        })
    }
}

pub fn correspondence(
    s: &Proc,
    pa: &PolarityAssignment,
    mutation: Option<Mutation>,
    limits: Limits,
) -> Result<CorrespondenceReport> {
    Setup::new(s, pa, mutation, limits)?.report()
}

pub fn check_completeness(s: &Proc, pa: &PolarityAssignment, limits: Limits) -> Result<Verdict> {
    Ok(Setup::new(s, pa, None, limits)?.completeness())
}

/// `(gorla, weak)`
pub fn check_soundness(s: &Proc, pa: &PolarityAssignment, limits: Limits) -> Result<(Verdict, Verdict)> {
    let st = Setup::new(s, pa, None, limits)?;
    Ok((st.gorla(), st.weak()))
}

pub fn check_barb_sensitivity(s: &Proc, pa: &PolarityAssignment, limits: Limits) -> Result<Verdict> {
    Ok(Setup::new(s, pa, None, limits)?.barbs())
}

pub fn check_divergence_reflection(s: &Proc, pa: &PolarityAssignment, limits: Limits) -> Result<Verdict> {
    Ok(Setup::new(s, pa, None, limits)?.divergence())
}

pub fn check_coupled_correspondence(s: &Proc, pa: &PolarityAssignment, limits: Limits) -> Result<Verdict> {
    Setup::new(s, pa, None, limits)?.coupled()
}

pub fn find_intermediate_states(s: &Proc, pa: &PolarityAssignment, limits: Limits) -> Result<Vec<Proc>> {
    let st = Setup::new(s, pa, None, limits)?;
    Ok(st.intermediate().into_iter().map(|t| st.tgt.state(t).clone()).collect())
}

/// A target trace emulating one source step.
#[derive(Clone, Debug)]
pub struct Emulation {
    /// From the translation of the source to the final state.
    pub states: Vec<Proc>,
    /// Whether the final state is the translation of the step's target up
    /// to junk, rather than only bisimilar to it.
    pub exact: bool,
    /// Indices into `states` of states that are bisimilar neither to the
    /// start nor to the translation of the step's target.
    pub intermediate: Vec<usize>,
}

impl Emulation {
    /// Indices into `states` of states bisimilar to the translation of the
    /// step's target.
    pub fn settled(&self) -> Vec<usize> {
        (0..self.states.len()).filter(|i| !self.intermediate.contains(i) && *i != 0).collect()
    }
}

pub fn emulate_trace(
    s: &Proc,
    step: &ReductionStep,
    pa: &PolarityAssignment,
    limits: Limits,
) -> Result<Emulation> {
    let pa = PolarityAssignment::infer(s, pa);
    let (from, to) = (encode_with(&pa.annotate(s), &pa, None)?, encode_with(&pa.annotate(&step.target), &pa, None)?);
    let g = ReductionGraph::explore(Calculus::Cmv, &[from, to.clone()], limits);
    g.require_complete()?;
    let table = BisimTable::new(&g)?;
    let (start, goal) = (g.roots()[0], g.roots()[1]);
    let want = strip_junk(&to);

    let mut prev = vec![usize::MAX; g.len()];
    let mut queue = VecDeque::from([start]);
    prev[start] = start;
    let mut order = Vec::new();
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for v in g.successors(u) {
            if prev[v] == usize::MAX {
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    let exact = order.iter().copied().find(|&u| u != start && strip_junk(g.state(u)) == want);
    let end = match exact {
        Some(u) => u,
        None => order
            .iter()
            .copied()
            .find(|&u| u != start && table.related(u, goal))
            .or_else(|| table.related(start, goal).then_some(start))
            .ok_or_else(|| Error::Encoding(format!("no emulation of the step to {}", step.target)))?,
    };
    let mut path = vec![end];
    while *path.last().unwrap() != start {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    let intermediate = path
        .iter()
        .enumerate()
        .filter(|&(_, &u)| !table.related(u, start) && !table.related(u, goal))
        .map(|(i, _)| i)
        .collect();
    Ok(Emulation {
        states: path.iter().map(|&u| g.state(u).clone()).collect(),
        exact: exact.is_some(),
        intermediate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::tests::S_EXAMPLE;
    use crate::semantics::enumerate_steps;
    use crate::syntax::{parse, parse_document};

    fn example() -> (Proc, PolarityAssignment) {
        let d = parse_document(Calculus::CmvPlus, S_EXAMPLE).unwrap();
        let pa = PolarityAssignment::from_document(&d);
        (d.term, pa)
    }

    #[test]
    fn example_passes() {
        let (s, pa) = example();
        let r = correspondence(&s, &pa, None, Limits::default()).unwrap();
        assert!(r.passes(), "{r:#?}");
        assert!(r.soundness_weak.pass);
        assert!(!r.intermediate_states.is_empty());
    }

    #[test]
    fn droppable_handshake_fails_only_the_full_soundness() {
        let (s, pa) = example();
        let r = correspondence(&s, &pa, Some(Mutation::DroppableHandshake), Limits::default()).unwrap();
        assert!(r.soundness_weak.pass, "{:?}", r.soundness_weak);
        assert!(!r.soundness_gorla.pass);
        assert!(!r.soundness_gorla.witness.is_empty());
    }

    #[test]
    fn trace_for_the_second_branch() {
        let (s, pa) = example();
        // x sends true to the receiving branch of the first choice on y
        let steps = enumerate_steps(Calculus::CmvPlus, &s);
        assert_eq!(steps.len(), 4);
        let step = steps
            .iter()
            .find(|st| st.target.to_string().contains("o2") && !st.target.to_string().contains("o1"))
            .unwrap();
        let e = emulate_trace(&s, step, &pa, Limits::default()).unwrap();
        assert!(e.exact);
        assert_eq!(e.states.len(), 5, "{:#?}", e.states);
        assert_eq!(e.intermediate, vec![1]);
        assert_eq!(e.settled(), vec![2, 3, 4]);
    }

    #[test]
    fn trivial_sources() {
        let pa = PolarityAssignment::default();
        let r = correspondence(&Proc::Nil, &pa, None, Limits::default()).unwrap();
        assert!(r.passes() && r.intermediate_states.is_empty());
        let c = parse(Calculus::CmvPlus, "if true then o (l!true.0) else 0").unwrap();
        let step = &enumerate_steps(Calculus::CmvPlus, &c)[0];
        let e = emulate_trace(&c, step, &pa, Limits::default()).unwrap();
        assert_eq!(e.states.len(), 2);
        assert!(correspondence(&c, &pa, None, Limits::default()).unwrap().passes());
    }
}
