//! Conflicts, distributability and the synchronisation patterns M and star.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::semantics::{candidates, enumerate_steps, Occurrence, ReductionStep, StepKind};
use crate::syntax::{canonicalize, decompose, recompose, Binder, Calculus, Name, Proc};

/// Two steps compete for a prefix when they consume a common occurrence.
/// Occurrences inside an unfolded replication are fresh copies and never
/// shared.
pub fn in_conflict(a: &ReductionStep, b: &ReductionStep) -> Result<bool> {
    if a.source != b.source {
        return Err(Error::Argument("steps have different sources".into()));
    }
    Ok(conflict(a, b))
}

fn conflict(a: &ReductionStep, b: &ReductionStep) -> bool {
    a.footprint
        .consumed
        .intersection(&b.footprint.consumed)
        .any(|o| !o.is_replicated())
}

fn apart(a: &ReductionStep, b: &ReductionStep) -> bool {
    a.footprint.components().is_disjoint(&b.footprint.components())
}

/// Whether the steps use pairwise disjoint sets of top-level components.
pub fn distributable(t: &Proc, steps: &[ReductionStep]) -> Result<bool> {
    let source = canonicalize(t);
    if steps.iter().any(|s| s.source != source) {
        return Err(Error::Argument("step source differs from the term".into()));
    }
    Ok(steps
        .iter()
        .enumerate()
        .all(|(i, a)| steps[i + 1..].iter().all(|b| apart(a, b))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PatternKind {
    M,
    #[serde(rename = "star")]
    Star,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternWitness {
    pub kind: PatternKind,
    /// Positions of the steps in the output of [`enumerate_steps`].
    pub step_ids: Vec<usize>,
    pub steps: Vec<ReductionStep>,
    /// Pairs of positions in `steps`.
    pub conflicts: Vec<(usize, usize)>,
    pub distributable: Vec<(usize, usize)>,
}

#[derive(Serialize)]
struct WitnessJson<'a> {
    kind: PatternKind,
    steps: &'a [usize],
    channels: Vec<Vec<String>>,
    targets: Vec<String>,
    conflicts: Vec<[usize; 2]>,
    distributable: Vec<[usize; 2]>,
}

impl Serialize for PatternWitness {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WitnessJson {
            kind: self.kind,
            steps: &self.step_ids,
            channels: self
                .steps
                .iter()
                .map(|st| st.footprint.endpoints.iter().map(Name::to_string).collect())
                .collect(),
            targets: self.steps.iter().map(|st| st.target.to_string()).collect(),
            conflicts: self.conflicts.iter().map(|&(a, b)| [a, b]).collect(),
            distributable: self.distributable.iter().map(|&(a, b)| [a, b]).collect(),
        }
        .serialize(s)
    }
}

impl PatternWitness {
    fn new(kind: PatternKind, all: &[ReductionStep], ids: &[usize]) -> Self {
        let steps: Vec<ReductionStep> = ids.iter().map(|&i| all[i].clone()).collect();
        let mut conflicts = Vec::new();
        let mut dist = Vec::new();
        for i in 0..steps.len() {
            for j in i + 1..steps.len() {
                if conflict(&steps[i], &steps[j]) {
                    conflicts.push((i, j));
                } else if apart(&steps[i], &steps[j]) {
                    dist.push((i, j));
                }
            }
        }
        PatternWitness { kind, step_ids: ids.to_vec(), steps, conflicts, distributable: dist }
    }

    /// Re-checks the defining conditions of the pattern.
    pub fn is_valid(&self) -> bool {
        let s = &self.steps;
        let c = |i: usize, j: usize| conflict(&s[i], &s[j]);
        let d = |i: usize, j: usize| apart(&s[i], &s[j]);
        let same_source = s.windows(2).all(|w| w[0].source == w[1].source);
        match self.kind {
            PatternKind::M => s.len() == 3 && same_source && c(0, 1) && c(1, 2) && d(0, 2),
            PatternKind::Star => {
                let targets: BTreeSet<&Proc> = s.iter().map(|x| &x.target).collect();
                s.len() == 5
                    && same_source
                    && targets.len() == 5
                    && (0..5).all(|i| c(i, (i + 1) % 5) && d(i, (i + 2) % 5))
            }
        }
    }
}

struct Table {
    steps: Vec<ReductionStep>,
    conflict: Vec<Vec<bool>>,
    apart: Vec<Vec<bool>>,
}

impl Table {
    fn new(calculus: Calculus, t: &Proc) -> Table {
        let steps = enumerate_steps(calculus, t);
        let n = steps.len();
        let mut conflict_m = vec![vec![false; n]; n];
        let mut apart_m = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                conflict_m[i][j] = i != j && conflict(&steps[i], &steps[j]);
                apart_m[i][j] = i != j && apart(&steps[i], &steps[j]);
            }
        }
        Table { steps, conflict: conflict_m, apart: apart_m }
    }
}

/// Every M in `t` as `[a, b, c]` step positions with `a < c`: `b` conflicts
/// with both, `a` and `c` are distributable.
pub fn m_witnesses(calculus: Calculus, t: &Proc) -> (Vec<ReductionStep>, Vec<[usize; 3]>) {
    let tb = Table::new(calculus, t);
    let n = tb.steps.len();
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if !tb.conflict[a][b] {
                continue;
            }
            for c in a + 1..n {
                if tb.conflict[b][c] && tb.apart[a][c] {
                    out.push([a, b, c]);
                }
            }
        }
    }
    (tb.steps, out)
}

/// Rank of each step of `steps` (the output of [`enumerate_steps`] on `t`)
/// when reductions are listed in the order components and branches are
/// written in `t` rather than in canonical order.
fn written_rank(calculus: Calculus, t: &Proc, steps: &[ReductionStep]) -> Vec<usize> {
    let mut rank = vec![usize::MAX; steps.len()];
    let mut next = 0;
    for c in candidates(calculus, &recompose(&decompose(t))) {
        let target = c.target();
        let hit = (0..steps.len()).find(|&j| {
            rank[j] == usize::MAX
                && steps[j].target == target
                && steps[j].footprint.kind == c.footprint.kind
                && steps[j].footprint.consumed.len() == c.footprint.consumed.len()
        });
        if let Some(j) = hit {
            rank[j] = next;
            next += 1;
        }
    }
    rank
}

/// The M that comes first in the order `t` is written, outer steps first.
pub fn find_pattern_m(calculus: Calculus, t: &Proc) -> Option<PatternWitness> {
    let (steps, ws) = m_witnesses(calculus, t);
    let rank = written_rank(calculus, t, &steps);
    ws.iter()
        .map(|&[a, b, c]| if rank[a] <= rank[c] { [a, b, c] } else { [c, b, a] })
        .min_by_key(|w| (rank[w[0]], rank[w[1]], rank[w[2]]))
        .map(|w| PatternWitness::new(PatternKind::M, &steps, &w))
}

/// The lexicographically least star, fixing its rotation by putting the
/// smallest step first and its reflection by `s1 < s4`.
pub fn find_pattern_star(calculus: Calculus, t: &Proc) -> Option<PatternWitness> {
    let tb = Table::new(calculus, t);
    let n = tb.steps.len();
    let c = &tb.conflict;
    let d = &tb.apart;
    let distinct = |ids: &[usize], k: usize| ids.iter().all(|&i| tb.steps[i].target != tb.steps[k].target);
    for s0 in 0..n {
        for s1 in s0 + 1..n {
            if !c[s0][s1] || !distinct(&[s0], s1) {
                continue;
            }
            for s2 in s0 + 1..n {
                if !c[s1][s2] || !d[s0][s2] || !distinct(&[s0, s1], s2) {
                    continue;
                }
                for s3 in s0 + 1..n {
                    if !c[s2][s3] || !d[s0][s3] || !d[s1][s3] || !distinct(&[s0, s1, s2], s3) {
                        continue;
                    }
                    for s4 in s1 + 1..n {
                        if c[s3][s4]
                            && c[s4][s0]
                            && d[s1][s4]
                            && d[s2][s4]
                            && distinct(&[s0, s1, s2, s3], s4)
                        {
                            return Some(PatternWitness::new(
                                PatternKind::Star,
                                &tb.steps,
                                &[s0, s1, s2, s3, s4],
                            ));
                        }
                    }
                }
            }
        }
    }
    None
}

/// The result of closing two steps of a mixed-session network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConfluenceOutcome {
    Diamond {
        b: Proc,
        c: Proc,
        d: Proc,
        /// Restrictions of `d` after extrusion.
        restricted: Vec<Binder>,
    },
    Counterexample {
        b: Proc,
        c: Proc,
    },
}

impl ConfluenceOutcome {
    pub fn is_diamond(&self) -> bool {
        matches!(self, ConfluenceOutcome::Diamond { .. })
    }
}

/// Whether a part `P` of the network can be chosen so that each step reduces
/// exactly one choice of `P`, and the two choices sit on different endpoints.
fn split_exists(src: &Proc, a: &ReductionStep, b: &ReductionStep) -> bool {
    let subject = |o: &Occurrence| o.resolve(src).and_then(|p| p.subject().cloned());
    a.footprint.consumed.iter().any(|ap| {
        b.footprint.consumed.iter().any(|bp| {
            let others_outside = a.footprint.consumed.iter().all(|o| o == ap || o != bp)
                && b.footprint.consumed.iter().all(|o| o == bp || o != ap);
            let (sa, sb) = (subject(ap), subject(bp));
            ap != bp && others_outside && sa.is_some() && sb.is_some() && sa != sb
        })
    })
}

/// Closes the two steps `a: A -> B` and `b: A -> C` to a common `D`.
pub fn check_confluence(network: &Proc, a: &ReductionStep, b: &ReductionStep) -> Result<ConfluenceOutcome> {
    let src = canonicalize(network);
    if a.source != src || b.source != src {
        return Err(Error::Argument("step source differs from the network".into()));
    }
    let comm = |s: &ReductionStep| s.footprint.kind == StepKind::Communication;
    if !comm(a) || !comm(b) {
        return Err(Error::Argument("both steps must reduce choices".into()));
    }
    if !split_exists(&src, a, b) {
        return Err(Error::Argument("the steps do not reduce choices on two different endpoints of one part".into()));
    }
    let from_b: BTreeSet<Proc> = enumerate_steps(Calculus::CmvPlus, &a.target)
        .into_iter()
        .map(|s| s.target)
        .collect();
    let common = enumerate_steps(Calculus::CmvPlus, &b.target)
        .into_iter()
        .map(|s| s.target)
        .find(|t| from_b.contains(t));
    Ok(match common {
        Some(d) => ConfluenceOutcome::Diamond {
            b: a.target.clone(),
            c: b.target.clone(),
            restricted: decompose(&d).restricted,
            d,
        },
        None => ConfluenceOutcome::Counterexample { b: a.target.clone(), c: b.target.clone() },
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::syntax::parse;

    pub(crate) const P_STAR: &str =
        "a! + b?.o_b! | b! + c?.o_c! | c! + d?.o_d! | d! + e?.o_e! | e! + a?.o_a!";
    pub(crate) const P_M: &str = "new x y in (
        x (l!true.p1 (l!.0) + l?(z).p2 (l!z.0)) | y (l?(z).p5 (l!z.0) + l!true.p6 (l!.0))
      | x (l!false.p3 (l!.0) + l?(z).p4 (l!z.0)) | y (l?(z).p7 (l!z.0) + l!false.p8 (l!.0)))";

    #[test]
    fn star_in_pi() {
        let t = parse(Calculus::Pi, P_STAR).unwrap();
        let w = find_pattern_star(Calculus::Pi, &t).unwrap();
        assert!(w.is_valid());
        let chans: BTreeSet<String> = w
            .steps
            .iter()
            .flat_map(|s| s.footprint.endpoints.iter().map(|n| n.to_string()))
            .collect();
        assert_eq!(chans, ["a", "b", "c", "d", "e"].into_iter().map(String::from).collect());
        assert!(find_pattern_m(Calculus::Pi, &t).unwrap().is_valid());
    }

    #[test]
    fn star_on_one_channel() {
        let t = parse(
            Calculus::Pi,
            "a! + a?.o_b! | a! + a?.o_c! | a! + a?.o_d! | a! + a?.o_e! | a! + a?.o_a!",
        )
        .unwrap();
        assert!(find_pattern_star(Calculus::Pi, &t).unwrap().is_valid());
    }

    #[test]
    fn m_in_mixed_sessions() {
        let t = parse(Calculus::CmvPlus, P_M).unwrap();
        let w = find_pattern_m(Calculus::CmvPlus, &t).unwrap();
        assert!(w.is_valid());
        assert!(find_pattern_star(Calculus::CmvPlus, &t).is_none());
        assert!(find_pattern_m(Calculus::CmvPlus, &Proc::Nil).is_none());
    }

    #[test]
    fn conflict_requires_a_shared_source() {
        let p = parse(Calculus::Pi, "a! | a?").unwrap();
        let q = parse(Calculus::Pi, "b! | b?").unwrap();
        let (sp, sq) = (enumerate_steps(Calculus::Pi, &p), enumerate_steps(Calculus::Pi, &q));
        assert!(in_conflict(&sp[0], &sq[0]).is_err());
        assert!(in_conflict(&sp[0], &sp[0]).unwrap());
        assert!(distributable(&p, &sp).unwrap());
        assert!(distributable(&p, &sq).is_err());
    }

    #[test]
    fn replicated_copies_do_not_conflict() {
        let p = parse(Calculus::Pi, "rep a! | a? | a?").unwrap();
        let s = enumerate_steps(Calculus::Pi, &p);
        assert_eq!(s.len(), 2);
        assert!(!in_conflict(&s[0], &s[1]).unwrap());
        assert!(!distributable(&p, &s).unwrap());
    }

    #[test]
    fn confluence_on_disjoint_sessions() {
        let t = parse(
            Calculus::CmvPlus,
            "new x y in new u v in x (l!true.0) | y (l?(z).o (m!z.0)) | u (k!false.0) | v (k?(w).q (m!w.0))",
        )
        .unwrap();
        let s = enumerate_steps(Calculus::CmvPlus, &t);
        assert_eq!(s.len(), 2);
        assert!(check_confluence(&t, &s[0], &s[1]).unwrap().is_diamond());
        assert!(check_confluence(&t, &s[0], &s[0]).is_err());
        let m = parse(Calculus::CmvPlus, P_M).unwrap();
        let (steps, ws) = m_witnesses(Calculus::CmvPlus, &m);
        let [a, b, _] = ws[0];
        assert!(check_confluence(&m, &steps[a], &steps[b]).is_err());
    }
}
