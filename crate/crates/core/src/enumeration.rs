//! Bounded exhaustive term generation and the property campaigns run over it.
//!
//! Terms are parallel compositions of guarded components over a fixed pool
//! of names: `a, b, ..` for pi (free), restricted pairs `x1 y1, ..` plus free
//! observables `o1, ..` for the session calculi. Parallel composition is
//! generated as a multiset and the summands of a choice as a set, so most
//! structural duplicates never arise; the rest are removed by canonical form.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::election::{hypergraph, verify_electoral, Automorphism, ElectionVerdict, Network};
use crate::encoding::{correspondence, emulate_trace, PolarityAssignment};
use crate::error::Error;
use crate::patterns::{check_confluence, find_pattern_star, ConfluenceOutcome};
use crate::semantics::{enumerate_steps, Limits, StepKind};
use crate::syntax::{
    canonicalize, Binder, Branch, Calculus, Endpoint, Label, Name, Payload, Prefix, Proc, Side,
    Summand, Value,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Budget {
    /// Bound on [`Proc::size`] of a generated term, top restrictions included.
    pub max_size: usize,
    /// Channel names (pi) or restricted endpoint pairs (sessions).
    pub max_names: usize,
    pub max_labels: usize,
    pub max_states: usize,
    /// How deep continuations may nest; 0 means every continuation is `0`.
    pub max_nesting: usize,
    /// Free observable endpoints `o1, ..` (sessions only).
    pub free_names: usize,
    /// Payloads `true`, `false` and unit instead of unit only.
    pub rich_payloads: bool,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_size: 6,
            max_names: 1,
            max_labels: 1,
            max_states: 10_000,
            max_nesting: 1,
            free_names: 0,
            rich_payloads: true,
        }
    }
}

impl Budget {
    /// Flat networks: nil continuations, unit payloads.
    pub fn flat(max_size: usize, max_names: usize, max_labels: usize) -> Self {
        Budget { max_size, max_names, max_labels, max_nesting: 0, rich_payloads: false, ..Budget::default() }
    }

    fn validate(&self) -> Result<(), Error> {
        if self.max_size == 0 || self.max_names == 0 || self.max_labels == 0 || self.max_states == 0 {
            return Err(Error::Argument("budget bounds must be positive".into()));
        }
        Ok(())
    }
}

struct Pool {
    calculus: Calculus,
    /// Subjects of guarded components.
    subjects: Vec<Name>,
    binders: Vec<Binder>,
    labels: Vec<Label>,
    values: Vec<Value>,
}

impl Pool {
    fn new(calculus: Calculus, b: &Budget) -> Self {
        let mut subjects = Vec::new();
        let mut binders = Vec::new();
        if calculus == Calculus::Pi {
            subjects.extend((0..b.max_names).map(|i| Name::new(pi_name(i))));
        } else {
            for i in 1..=b.max_names {
                let (x, y) = (Name::new(format!("x{i}")), Name::new(format!("y{i}")));
                subjects.push(x.clone());
                subjects.push(y.clone());
                binders.push(Binder::Pair(Endpoint::plain(x), Endpoint::plain(y)));
            }
            subjects.extend((1..=b.free_names).map(|i| Name::new(format!("o{i}"))));
        }
        let labels = (0..b.max_labels).map(|i| Label::new(label_name(i))).collect();
        let values = if b.rich_payloads {
            vec![Value::Unit, Value::Bool(true), Value::Bool(false)]
        } else {
            vec![Value::Unit]
        };
        Pool { calculus, subjects, binders, labels, values }
    }
}

fn pi_name(i: usize) -> String {
    if i < 26 {
        ((b'a' + i as u8) as char).to_string()
    } else {
        format!("a{i}")
    }
}

fn label_name(i: usize) -> String {
    ["l", "m", "n", "k"].get(i).map_or_else(|| format!("l{i}"), |s| s.to_string())
}

fn var() -> Name {
    Name::new("z")
}

/// Per nesting level `d`, components and multisets by exact size.
struct Generator {
    pool: Pool,
    max_nesting: usize,
    /// `comps[d][n]`
    comps: Vec<Vec<Vec<Proc>>>,
    /// `procs[d][n]`, parallel compositions of `comps[d]`.
    procs: Vec<Vec<Vec<Proc>>>,
}

impl Generator {
    fn new(calculus: Calculus, b: &Budget, body: usize) -> Self {
        let mut g = Generator {
            pool: Pool::new(calculus, b),
            max_nesting: b.max_nesting,
            comps: vec![Vec::new(); b.max_nesting + 1],
            procs: vec![Vec::new(); b.max_nesting + 1],
        };
        for d in (0..=b.max_nesting).rev() {
            for n in 0..=body {
                let c = g.components(d, n);
                g.comps[d].push(c);
            }
            g.procs[d] = multisets(&g.comps[d], body);
        }
        g
    }

    /// Continuations available below level `d` with exact size `n`.
    fn conts(&self, d: usize, n: usize) -> &[Proc] {
        if d < self.max_nesting {
            &self.procs[d + 1][n]
        } else if n == 0 {
            std::slice::from_ref(&NIL)
        } else {
            &[]
        }
    }

    fn components(&self, d: usize, n: usize) -> Vec<Proc> {
        let mut out = Vec::new();
        if n == 0 {
            return out;
        }
        let pool = &self.pool;
        match pool.calculus {
            Calculus::Pi => {
                let items = self.items(d, n - 1, |cont| {
                    let mut v = Vec::new();
                    for a in &pool.subjects {
                        for val in &pool.values {
                            v.push(Summand { prefix: Prefix::Out(a.clone(), val.clone()), cont: cont.clone() });
                        }
                        v.push(Summand { prefix: Prefix::In(a.clone(), var()), cont: cont.clone() });
                    }
                    v.push(Summand { prefix: Prefix::Tau, cont: cont.clone() });
                    v
                });
                out.extend(sets(&items, n - 1).into_iter().map(Proc::Sum));
            }
            Calculus::CmvPlus => {
                let items = self.items(d, n - 1, |cont| {
                    let mut v = Vec::new();
                    for l in &pool.labels {
                        for val in &pool.values {
                            v.push(Branch { label: l.clone(), payload: Payload::Send(val.clone()), cont: cont.clone() });
                        }
                        v.push(Branch { label: l.clone(), payload: Payload::Recv(var()), cont: cont.clone() });
                    }
                    v
                });
                for y in &pool.subjects {
                    out.extend(sets(&items, n - 1).into_iter().map(|bs| Proc::Choice(y.clone(), bs)));
                }
            }
            Calculus::Cmv => {
                for y in &pool.subjects {
                    for k in self.conts(d, n - 1) {
                        for v in &pool.values {
                            out.push(Proc::Send(y.clone(), v.clone(), Box::new(k.clone())));
                        }
                        out.push(Proc::Recv(y.clone(), var(), Box::new(k.clone())));
                        for l in &pool.labels {
                            out.push(Proc::Select(y.clone(), l.clone(), Box::new(k.clone())));
                        }
                    }
                    out.extend(self.cases(d, y, n - 1));
                }
            }
        }
        if pool.calculus.is_session() && d < self.max_nesting {
            for v in [true, false] {
                for a in 0..n {
                    for p in self.conts(d, a) {
                        for q in self.conts(d, n - 1 - a) {
                            out.push(Proc::If(Value::Bool(v), Box::new(p.clone()), Box::new(q.clone())));
                        }
                    }
                }
            }
        }
        out
    }

    /// Summand-like items, each of size `1 + |cont|`, grouped by size up to
    /// `max`.
    fn items<T>(&self, d: usize, max: usize, make: impl Fn(&Proc) -> Vec<T>) -> Vec<Vec<T>> {
        (0..=max)
            .map(|m| {
                if m == 0 {
                    return Vec::new();
                }
                self.conts(d, m - 1).iter().flat_map(&make).collect()
            })
            .collect()
    }

    /// `y case { .. }` with arms on distinct labels in label order, total size `n`.
    fn cases(&self, d: usize, y: &Name, n: usize) -> Vec<Proc> {
        fn go(g: &Generator, d: usize, li: usize, left: usize, acc: &mut Vec<(Label, Proc)>, y: &Name, out: &mut Vec<Proc>) {
            if left == 0 {
                if !acc.is_empty() {
                    out.push(Proc::Case(y.clone(), acc.clone()));
                }
                return;
            }
            for j in li..g.pool.labels.len() {
                for m in 1..=left {
                    for k in g.conts(d, m - 1) {
                        acc.push((g.pool.labels[j].clone(), k.clone()));
                        go(g, d, j + 1, left - m, acc, y, out);
                        acc.pop();
                    }
                }
            }
        }
        let mut out = Vec::new();
        go(self, d, 0, n, &mut Vec::new(), y, &mut out);
        out
    }
}

static NIL: Proc = Proc::Nil;

/// Sets of distinct items (ordered by size, then position) with total size `n`.
fn sets<T: Clone>(by_size: &[Vec<T>], n: usize) -> Vec<Vec<T>> {
    let flat: Vec<(usize, &T)> = by_size.iter().enumerate().flat_map(|(m, v)| v.iter().map(move |t| (m, t))).collect();
    fn go<T: Clone>(flat: &[(usize, &T)], from: usize, left: usize, acc: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if left == 0 {
            if !acc.is_empty() {
                out.push(acc.clone());
            }
            return;
        }
        for i in from..flat.len() {
            let (m, t) = flat[i];
            if m > left {
                break;
            }
            acc.push(t.clone());
            go(flat, i + 1, left - m, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    go(&flat, 0, n, &mut Vec::new(), &mut out);
    out
}

/// `out[n]` = parallel compositions (multisets) of components with total size `n`.
fn multisets(comps: &[Vec<Proc>], max: usize) -> Vec<Vec<Proc>> {
    let flat: Vec<(usize, &Proc)> = comps.iter().enumerate().flat_map(|(m, v)| v.iter().map(move |p| (m, p))).collect();
    let mut out = vec![Vec::new(); max + 1];
    fn go(flat: &[(usize, &Proc)], from: usize, used: usize, max: usize, acc: &mut Vec<Proc>, out: &mut [Vec<Proc>]) {
        out[used].push(Proc::par(acc.clone()));
        for i in from..flat.len() {
            let (m, p) = flat[i];
            if used + m > max {
                break;
            }
            acc.push(p.clone());
            go(flat, i, used + m, max, acc, out);
            acc.pop();
        }
    }
    go(&flat, 0, 0, max, &mut Vec::new(), &mut out);
    out
}

/// Budgets admitting more raw terms than this are refused rather than
/// exhausting memory.
pub const RAW_TERM_LIMIT: u128 = 1_500_000;

/// The terms before quotienting, in generation order.
pub fn raw_terms(calculus: Calculus, b: &Budget) -> Result<Vec<Proc>, Error> {
    b.validate()?;
    let n = count_terms(calculus, b);
    if n > RAW_TERM_LIMIT {
        return Err(Error::Argument(format!("budget admits {n} raw terms, over the limit of {RAW_TERM_LIMIT}")));
    }
    let pool_binders = if calculus == Calculus::Pi { 0 } else { b.max_names };
    let body = b.max_size.saturating_sub(pool_binders);
    let g = Generator::new(calculus, b, body);
    let mut out = vec![Proc::Nil];
    for n in 1..=body {
        for p in &g.procs[0][n] {
            out.push(Proc::new_binders(g.pool.binders.iter().cloned(), p.clone()));
        }
    }
    Ok(out)
}

/// All generated terms up to canonical form, first occurrence kept.
pub fn enumerate_terms(calculus: Calculus, b: &Budget) -> Result<Vec<Proc>, Error> {
    let mut seen = HashSet::new();
    Ok(raw_terms(calculus, b)?
        .into_iter()
        .map(|t| canonicalize(&t))
        .filter(|t| seen.insert(t.clone()))
        .collect())
}

/// Number of [`raw_terms`], by a recurrence over sizes alone.
pub fn count_terms(calculus: Calculus, b: &Budget) -> u128 {
    let subjects = b.max_names as u128 * if calculus == Calculus::Pi { 1 } else { 2 }
        + if calculus == Calculus::Pi { 0 } else { b.free_names as u128 };
    let (labels, values) = (b.max_labels as u128, if b.rich_payloads { 3 } else { 1 });
    let body = b.max_size.saturating_sub(if calculus == Calculus::Pi { 0 } else { b.max_names });
    // continuation counts by size at the level below, starting from nil only
    let mut below: Vec<u128> = (0..=body).map(|n| u128::from(n == 0)).collect();
    let mut procs = below.clone();
    for level in (0..=b.max_nesting).rev() {
        let nested = level < b.max_nesting;
        let mut comps = vec![0u128; body + 1];
        for n in 1..=body {
            let m = n - 1;
            let c = &mut comps[n];
            match calculus {
                Calculus::Pi => {
                    let per = subjects * (values + 1) + 1;
                    *c += set_count(&shift(&below, per), m);
                }
                Calculus::CmvPlus => {
                    let per = labels * (values + 1);
                    *c += subjects * set_count(&shift(&below, per), m);
                }
                Calculus::Cmv => {
                    *c += subjects * (values + 1 + labels) * below[m];
                    // one optional arm per label
                    let arm = shift(&below, 1);
                    let mut poly = vec![0u128; body + 1];
                    poly[0] = 1;
                    for _ in 0..labels {
                        poly = mul(&poly, &plus_one(&arm), body);
                    }
                    *c += subjects * poly[m].saturating_sub(u128::from(m == 0));
                }
            }
            if calculus.is_session() && nested {
                *c += 2 * (0..=m).map(|a| below[a] * below[m - a]).sum::<u128>();
            }
        }
        procs = multiset_count(&comps, body);
        below = procs.clone();
    }
    procs.iter().sum()
}

/// Items of size `1 + k` for each continuation of size `k`, `per` kinds each.
fn shift(conts: &[u128], per: u128) -> Vec<u128> {
    let mut v = vec![0u128; conts.len()];
    for k in 0..conts.len() - 1 {
        v[k + 1] = per * conts[k];
    }
    v
}

fn plus_one(p: &[u128]) -> Vec<u128> {
    let mut v = p.to_vec();
    v[0] += 1;
    v
}

fn mul(a: &[u128], b: &[u128], max: usize) -> Vec<u128> {
    let mut out = vec![0u128; max + 1];
    for i in 0..=max {
        for j in 0..=max - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

fn binom(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Nonempty sets of distinct items whose sizes sum to `m`: coefficient of
/// `x^m` in the product of `(1 + x^s)^{items[s]}`, minus the empty set.
fn set_count(items: &[u128], m: usize) -> u128 {
    let mut poly = vec![0u128; m + 1];
    poly[0] = 1;
    for (s, &k) in items.iter().enumerate().take(m + 1).skip(1) {
        let mut factor = vec![0u128; m + 1];
        for j in 0..=(m / s) as u128 {
            factor[j as usize * s] = binom(k, j);
        }
        poly = mul(&poly, &factor, m);
    }
    poly[m] - u128::from(m == 0)
}

/// Multisets by total size: the Euler transform of `comps`.
fn multiset_count(comps: &[u128], max: usize) -> Vec<u128> {
    let a: Vec<u128> = (0..=max)
        .map(|k| if k == 0 { 0 } else { (1..=k).filter(|d| k % d == 0).map(|d| d as u128 * comps[d]).sum() })
        .collect();
    let mut p = vec![0u128; max + 1];
    p[0] = 1;
    for n in 1..=max {
        p[n] = (1..=n).map(|k| a[k] * p[n - k]).sum::<u128>() / n as u128;
    }
    p
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    NoStar,
    Confluence,
    Correspondence,
    NoElectoral,
}

impl std::str::FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Ok(match s {
            "no-star" => Property::NoStar,
            "confluence" => Property::Confluence,
            "correspondence" => Property::Correspondence,
            "no-electoral" => Property::NoElectoral,
            other => return Err(Error::Argument(format!("unknown property {other}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CampaignReport {
    pub property: Property,
    pub calculus: Calculus,
    pub budget: Budget,
    /// Terms generated after quotienting.
    pub terms: usize,
    /// Obligations examined.
    pub checked: usize,
    pub witnesses: usize,
    pub failures: usize,
    pub inconclusive: usize,
    /// Instances outside the property's precondition.
    pub skipped: usize,
    /// The first few witnesses or failures, printed.
    pub examples: Vec<String>,
}

const EXAMPLES: usize = 5;

impl CampaignReport {
    fn new(property: Property, calculus: Calculus, budget: &Budget) -> Self {
        CampaignReport {
            property,
            calculus,
            budget: budget.clone(),
            terms: 0,
            checked: 0,
            witnesses: 0,
            failures: 0,
            inconclusive: 0,
            skipped: 0,
            examples: Vec::new(),
        }
    }

    fn note(&mut self, s: impl FnOnce() -> String) {
        if self.examples.len() < EXAMPLES {
            self.examples.push(s());
        }
    }
}

pub fn property_campaign(property: Property, calculus: Calculus, b: &Budget) -> Result<CampaignReport, Error> {
    let mut r = CampaignReport::new(property, calculus, b);
    let limits = Limits::states(b.max_states);
    match property {
        Property::NoStar => {
            let terms = enumerate_terms(calculus, b)?;
            r.terms = terms.len();
            for t in &terms {
                r.checked += 1;
                if let Some(w) = find_pattern_star(calculus, t) {
                    r.witnesses += 1;
                    if calculus != Calculus::Pi {
                        r.failures += 1;
                    }
                    r.note(|| format!("{t}  steps {:?}", w.step_ids));
                }
            }
        }
        Property::Confluence => {
            let terms = enumerate_terms(Calculus::CmvPlus, b)?;
            r.terms = terms.len();
            for t in &terms {
                let steps = enumerate_steps(Calculus::CmvPlus, t);
                for (i, a) in steps.iter().enumerate() {
                    for c in &steps[i + 1..] {
                        if a.footprint.kind != StepKind::Communication || c.footprint.kind != StepKind::Communication {
                            continue;
                        }
                        match check_confluence(t, a, c) {
                            Err(Error::Argument(_)) => r.skipped += 1,
                            Err(e) => return Err(e),
                            Ok(ConfluenceOutcome::Diamond { .. }) => r.checked += 1,
                            Ok(ConfluenceOutcome::Counterexample { .. }) => {
                                r.checked += 1;
                                r.failures += 1;
                                r.note(|| format!("{t}  {} / {}", a.target, c.target));
                            }
                        }
                    }
                }
            }
        }
        Property::Correspondence => {
            let terms = enumerate_terms(Calculus::CmvPlus, b)?;
            r.terms = terms.len();
            for t in &terms {
                for pa in orientations(t) {
                    if !label_compatible(t, &pa) {
                        r.skipped += 1;
                        continue;
                    }
                    match correspondence_instance(t, &pa, limits) {
                        Ok(true) => r.checked += 1,
                        Ok(false) => {
                            r.checked += 1;
                            r.failures += 1;
                            r.note(|| format!("{}", pa.annotate(t)));
                        }
                        Err(Error::Inconclusive(_)) => r.inconclusive += 1,
                        // repeated label and polarity in one choice
                        Err(Error::Encoding(_)) => r.skipped += 1,
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        Property::NoElectoral => {
            let rings = symmetric_rings(calculus, b);
            r.terms = rings.len();
            for n in &rings {
                r.checked += 1;
                match verify_electoral(n, limits) {
                    ElectionVerdict::Electoral { .. } => {
                        r.failures += 1;
                        r.note(|| n.term().to_string());
                    }
                    ElectionVerdict::NotElectoral { .. } => {}
                    ElectionVerdict::Inconclusive { .. } => r.inconclusive += 1,
                }
            }
        }
    }
    Ok(r)
}

/// Full report plus an emulation of every source step.
pub fn correspondence_instance(t: &Proc, pa: &PolarityAssignment, limits: Limits) -> Result<bool, Error> {
    if !correspondence(t, pa, None, limits)?.passes() {
        return Ok(false);
    }
    let annotated = pa.annotate(t);
    for step in enumerate_steps(Calculus::CmvPlus, &annotated) {
        match emulate_trace(&annotated, &step, pa, limits) {
            Ok(_) => {}
            Err(Error::Encoding(_)) => return Ok(false),
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

/// Both choices of internal side for every restricted pair of `t`, free
/// names external.
pub fn orientations(t: &Proc) -> Vec<PolarityAssignment> {
    let mut pairs = Vec::new();
    let mut stack = vec![canonicalize(t)];
    while let Some(p) = stack.pop() {
        match &p {
            Proc::New(Binder::Pair(a, b), body) => {
                pairs.push((a.name.clone(), b.name.clone()));
                stack.push((**body).clone());
            }
            Proc::Par(ps) => stack.extend(ps.iter().cloned()),
            _ => {}
        }
    }
    let mut out = Vec::new();
    for mask in 0..1u32 << pairs.len().min(8) {
        let mut pa = PolarityAssignment::default();
        for (i, (a, b)) in pairs.iter().enumerate() {
            let flip = mask >> i & 1 == 1;
            pa.sides.insert(a.clone(), if flip { Side::External } else { Side::Internal });
            pa.sides.insert(b.clone(), if flip { Side::Internal } else { Side::External });
        }
        out.push(pa);
    }
    out
}

/// Every summand of an internal choice finds a partner summand (same label,
/// dual polarity) in every choice on the dual endpoint. Well-typed terms have
/// this property; without types it is what the translation relies on.
pub fn label_compatible(t: &Proc, pa: &PolarityAssignment) -> bool {
    let c = pa.annotate(&canonicalize(t));
    let mut choices: BTreeMap<Name, Vec<Vec<(Label, crate::syntax::Polarity)>>> = BTreeMap::new();
    let mut duals: Vec<(Name, Name)> = Vec::new();
    fn walk(p: &Proc, f: &mut impl FnMut(&Proc)) {
        f(p);
        match p {
            Proc::Par(ps) => ps.iter().for_each(|q| walk(q, f)),
            Proc::New(_, b) => walk(b, f),
            Proc::Choice(_, bs) => bs.iter().for_each(|b| walk(&b.cont, f)),
            Proc::If(_, a, b) => {
                walk(a, f);
                walk(b, f);
            }
            _ => {}
        }
    }
    walk(&c, &mut |p| match p {
        Proc::New(Binder::Pair(a, b), _) => duals.push((a.name.clone(), b.name.clone())),
        Proc::Choice(y, bs) => choices
            .entry(y.clone())
            .or_default()
            .push(bs.iter().map(|b| (b.label.clone(), b.polarity())).collect()),
        _ => {}
    });
    let side = |n: &Name| pa.sides.get(n).copied();
    duals.iter().all(|(a, b)| {
        let (int, ext) = match (side(a), side(b)) {
            (Some(Side::Internal), _) | (_, Some(Side::External)) => (a, b),
            _ => (b, a),
        };
        let empty = Vec::new();
        let exts = choices.get(ext).unwrap_or(&empty);
        choices.get(int).unwrap_or(&empty).iter().all(|ic| {
            ic.iter().all(|(l, pol)| exts.iter().all(|ec| ec.iter().any(|(m, q)| m == l && *q == pol.dual())))
        })
    })
}

/// Rotation-symmetric rings of five nodes: node `i` owns `x_i` and `y_(i+1)`
/// and runs one template, its continuations announcing `i`.
pub fn symmetric_rings(calculus: Calculus, b: &Budget) -> Vec<Network> {
    if calculus != Calculus::CmvPlus {
        return Vec::new();
    }
    const K: usize = 5;
    let labels: Vec<Label> = (0..b.max_labels).map(|i| Label::new(label_name(i))).collect();
    // templates over endpoint 0 (own x) and 1 (next y); continuation 0 or announce
    let mut branches = Vec::new();
    for l in &labels {
        for send in [true, false] {
            for announce in [false, true] {
                branches.push((l.clone(), send, announce));
            }
        }
    }
    let subsets: Vec<Vec<(Label, bool, bool)>> = (1..1u32 << branches.len())
        .map(|m| branches.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, b)| b.clone()).collect())
        .collect();
    let choices: Vec<(usize, Vec<(Label, bool, bool)>)> =
        (0..2).flat_map(|e| subsets.iter().map(move |s| (e, s.clone()))).collect();
    let mut templates: Vec<Vec<usize>> = (0..choices.len()).map(|i| vec![i]).collect();
    for i in 0..choices.len() {
        for j in i..choices.len() {
            templates.push(vec![i, j]);
        }
    }
    let build = |node: usize, tpl: &[usize]| -> Proc {
        let x = Name::new(format!("x{node}"));
        let y = Name::new(format!("y{}", node % K + 1));
        let id = Name::new(node.to_string());
        let parts = tpl
            .iter()
            .map(|&c| {
                let (e, bs) = &choices[c];
                let branches = bs
                    .iter()
                    .map(|(l, send, announce)| Branch {
                        label: l.clone(),
                        payload: if *send { Payload::Send(Value::Unit) } else { Payload::Recv(var()) },
                        cont: if *announce {
                            Proc::Choice(id.clone(), vec![Branch { label: l.clone(), payload: Payload::Send(Value::Unit), cont: Proc::Nil }])
                        } else {
                            Proc::Nil
                        },
                    })
                    .collect();
                Proc::Choice(if *e == 0 { x.clone() } else { y.clone() }, branches)
            })
            .collect();
        Proc::par(parts)
    };
    let size_of = |tpl: &[usize]| build(1, tpl).size();
    let binders: Vec<Binder> = (1..=K)
        .map(|i| Binder::Pair(Endpoint::plain(Name::new(format!("x{i}"))), Endpoint::plain(Name::new(format!("y{i}")))))
        .collect();
    templates
        .iter()
        .filter(|t| size_of(t) <= b.max_size)
        .map(|tpl| {
            let comps: Vec<Proc> = (1..=K).map(|i| build(i, tpl)).collect();
            Network {
                calculus,
                restricted: binders.clone(),
                components: comps,
                ids: (1..=K).map(|i| Name::new(i.to_string())).collect(),
            }
        })
        .collect()
}

/// `i -> i+1` on nodes, `x_i -> x_(i+1)` and `y_i -> y_(i+1)` on the arcs
/// the ring uses.
pub fn ring_rotation(n: &Network) -> Automorphism {
    let arcs = hypergraph(n).arcs;
    let k = n.size();
    let mut sigma = Automorphism::identity();
    for i in 1..=k {
        let j = i % k + 1;
        sigma.nodes.insert(i, j);
        for base in ["x", "y"] {
            let (a, b) = (Name::new(format!("{base}{i}")), Name::new(format!("{base}{j}")));
            if arcs.contains(&a) {
                sigma.arcs.insert(a, b);
            }
        }
    }
    sigma
}
