//! A slow reference for the one-step reduction relation.
//!
//! Rather than reading steps off a normal form, this computes the full
//! structural-congruence class of a term (binary parallel composition,
//! commutativity, associativity, scope extrusion, restriction swapping,
//! dropping `0`, unfolding each replication at most once) and applies the
//! reduction axioms under parallel and restriction contexts to every member.
//! Only the final comparison goes through canonical form.

use std::collections::{BTreeSet, HashSet, VecDeque};

use crate::syntax::{canonicalize, Binder, Branch, Calculus, Endpoint, Label, Name, Payload, Prefix, Proc, Summand, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum O {
    Nil,
    Par(Box<O>, Box<O>),
    /// One name (pi) or an endpoint pair.
    New(Vec<Name>, Box<O>),
    /// The flag is set once the replication has been unfolded.
    Rep(bool, Box<O>),
    Sum(Vec<(Pre, O)>),
    Choice(Name, Vec<(Label, Dir, O)>),
    If(Value, Box<O>, Box<O>),
    Send(Name, Value, Box<O>),
    Recv(Name, Name, Box<O>),
    Select(Name, Label, Box<O>),
    Case(Name, Vec<(Label, O)>),
    /// A guarded part of an unfolded copy, tagged with its replication.
    Mark(u64, Box<O>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Pre {
    Out(Name, Value),
    In(Name, Name),
    Tau,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Dir {
    Out(Value),
    In(Name),
}

struct Fresh(u32);

impl Fresh {
    fn next(&mut self) -> Name {
        self.0 += 1;
        Name::special("%", self.0)
    }
}

type Env = Vec<(Name, Name)>;

fn look(env: &Env, n: &Name) -> Name {
    env.iter().rev().find(|(a, _)| a == n).map_or_else(|| n.clone(), |(_, b)| b.clone())
}

fn val(env: &Env, v: &Value) -> Value {
    match v {
        Value::Name(n) => Value::Name(look(env, n)),
        Value::Not(a) => Value::Not(Box::new(val(env, a))),
        Value::And(a, b) => Value::And(Box::new(val(env, a)), Box::new(val(env, b))),
        Value::Or(a, b) => Value::Or(Box::new(val(env, a)), Box::new(val(env, b))),
        other => other.clone(),
    }
}

/// Converts with every binder renamed apart.
fn from_proc(p: &Proc, env: &mut Env, f: &mut Fresh) -> O {
    let bind = |env: &mut Env, f: &mut Fresh, n: &Name| {
        let m = f.next();
        env.push((n.clone(), m.clone()));
        m
    };
    match p {
        Proc::Nil => O::Nil,
        Proc::Par(ps) => {
            let mut it = ps.iter().rev().map(|q| from_proc(q, env, f)).collect::<Vec<_>>();
            let mut acc = it.remove(0);
            for q in it {
                acc = O::Par(Box::new(q), Box::new(acc));
            }
            acc
        }
        Proc::New(b, body) => {
            let len = env.len();
            let names = b.names().into_iter().map(|n| bind(env, f, n)).collect();
            let body = from_proc(body, env, f);
            env.truncate(len);
            O::New(names, Box::new(body))
        }
        Proc::Rep(b) => O::Rep(false, Box::new(from_proc(b, env, f))),
        Proc::Sum(ss) => O::Sum(
            ss.iter()
                .map(|s| {
                    let len = env.len();
                    let pre = match &s.prefix {
                        Prefix::Out(y, v) => Pre::Out(look(env, y), val(env, v)),
                        Prefix::In(y, x) => {
                            let y = look(env, y);
                            Pre::In(y, bind(env, f, x))
                        }
                        Prefix::Tau => Pre::Tau,
                    };
                    let k = from_proc(&s.cont, env, f);
                    env.truncate(len);
                    (pre, k)
                })
                .collect(),
        ),
        Proc::Choice(y, bs) => O::Choice(
            look(env, y),
            bs.iter()
                .map(|b| {
                    let len = env.len();
                    let d = match &b.payload {
                        Payload::Send(v) => Dir::Out(val(env, v)),
                        Payload::Recv(x) => Dir::In(bind(env, f, x)),
                    };
                    let k = from_proc(&b.cont, env, f);
                    env.truncate(len);
                    (b.label.clone(), d, k)
                })
                .collect(),
        ),
        Proc::If(v, a, b) => O::If(val(env, v), Box::new(from_proc(a, env, f)), Box::new(from_proc(b, env, f))),
        Proc::Send(y, v, k) => O::Send(look(env, y), val(env, v), Box::new(from_proc(k, env, f))),
        Proc::Recv(y, x, k) => {
            let y = look(env, y);
            let len = env.len();
            let x = bind(env, f, x);
            let k = from_proc(k, env, f);
            env.truncate(len);
            O::Recv(y, x, Box::new(k))
        }
        Proc::Select(y, l, k) => O::Select(look(env, y), l.clone(), Box::new(from_proc(k, env, f))),
        Proc::Case(y, arms) => O::Case(look(env, y), arms.iter().map(|(l, k)| (l.clone(), from_proc(k, env, f))).collect()),
    }
}

fn to_proc(o: &O, session: bool) -> Proc {
    let go = |o: &O| to_proc(o, session);
    match o {
        O::Nil => Proc::Nil,
        O::Par(a, b) => Proc::Par(vec![go(a), go(b)]),
        O::New(ns, b) => {
            let binder = if session {
                Binder::Pair(Endpoint::plain(ns[0].clone()), Endpoint::plain(ns[1].clone()))
            } else {
                Binder::Single(ns[0].clone())
            };
            Proc::New(binder, Box::new(go(b)))
        }
        O::Rep(_, b) => Proc::Rep(Box::new(go(b))),
        O::Sum(ss) => Proc::Sum(
            ss.iter()
                .map(|(p, k)| Summand {
                    prefix: match p {
                        Pre::Out(y, v) => Prefix::Out(y.clone(), v.clone()),
                        Pre::In(y, x) => Prefix::In(y.clone(), x.clone()),
                        Pre::Tau => Prefix::Tau,
                    },
                    cont: go(k),
                })
                .collect(),
        ),
        O::Choice(y, bs) => Proc::Choice(
            y.clone(),
            bs.iter()
                .map(|(l, d, k)| Branch {
                    label: l.clone(),
                    payload: match d {
                        Dir::Out(v) => Payload::Send(v.clone()),
                        Dir::In(x) => Payload::Recv(x.clone()),
                    },
                    cont: go(k),
                })
                .collect(),
        ),
        O::If(v, a, b) => Proc::If(v.clone(), Box::new(go(a)), Box::new(go(b))),
        O::Send(y, v, k) => Proc::Send(y.clone(), v.clone(), Box::new(go(k))),
        O::Recv(y, x, k) => Proc::Recv(y.clone(), x.clone(), Box::new(go(k))),
        O::Select(y, l, k) => Proc::Select(y.clone(), l.clone(), Box::new(go(k))),
        O::Case(y, arms) => Proc::Case(y.clone(), arms.iter().map(|(l, k)| (l.clone(), go(k))).collect()),
        O::Mark(_, k) => go(k),
    }
}

/// Every name occurring in `o`, binders included when `binders` is set.
fn names(o: &O, binders: bool) -> BTreeSet<Name> {
    let out = std::cell::RefCell::new(BTreeSet::new());
    let _ = map_names(o, &|n: &Name| {
        out.borrow_mut().insert(n.clone());
        n.clone()
    });
    let mut all = out.into_inner();
    if !binders {
        all = all.difference(&bound(o)).cloned().collect();
    }
    all
}

fn bound(o: &O) -> BTreeSet<Name> {
    fn go(o: &O, out: &mut BTreeSet<Name>) {
        match o {
            O::Nil => {}
            O::Par(a, b) | O::If(_, a, b) => {
                go(a, out);
                go(b, out);
            }
            O::New(ns, b) => {
                out.extend(ns.iter().cloned());
                go(b, out);
            }
            O::Rep(_, b) | O::Send(_, _, b) | O::Select(_, _, b) | O::Mark(_, b) => go(b, out),
            O::Recv(_, x, b) => {
                out.insert(x.clone());
                go(b, out);
            }
            O::Sum(ss) => {
                for (p, k) in ss {
                    if let Pre::In(_, x) = p {
                        out.insert(x.clone());
                    }
                    go(k, out);
                }
            }
            O::Choice(_, bs) => {
                for (_, d, k) in bs {
                    if let Dir::In(x) = d {
                        out.insert(x.clone());
                    }
                    go(k, out);
                }
            }
            O::Case(_, arms) => arms.iter().for_each(|(_, k)| go(k, out)),
        }
    }
    let mut out = BTreeSet::new();
    go(o, &mut out);
    out
}

/// Free names; exact because binders are unique.
fn fv(o: &O) -> BTreeSet<Name> {
    names(o, false)
}

/// The unfolded copy: every name bound inside `o` is primed. Binders are
/// unique and each replication unfolds once, so primed names are fresh; being
/// deterministic, they keep the class from growing with each unfolding.
fn refresh(o: &O) -> O {
    let (all, free) = (names(o, true), fv(o));
    let bound: BTreeSet<&Name> = all.difference(&free).collect();
    map_names(o, &|n: &Name| {
        if bound.contains(n) {
            Name::tagged(format!("{}'", n.base()), n.tag().unwrap_or(0))
        } else {
            n.clone()
        }
    })
}

fn map_val(v: &Value, f: &impl Fn(&Name) -> Name) -> Value {
    match v {
        Value::Name(n) => Value::Name(f(n)),
        Value::Not(a) => Value::Not(Box::new(map_val(a, f))),
        Value::And(a, b) => Value::And(Box::new(map_val(a, f)), Box::new(map_val(b, f))),
        Value::Or(a, b) => Value::Or(Box::new(map_val(a, f)), Box::new(map_val(b, f))),
        other => other.clone(),
    }
}

fn map_names(o: &O, f: &impl Fn(&Name) -> Name) -> O {
    let go = |k: &O| map_names(k, f);
    let bx = |k: &O| Box::new(map_names(k, f));
    match o {
        O::Nil => O::Nil,
        O::Par(a, b) => O::Par(bx(a), bx(b)),
        O::New(ns, b) => O::New(ns.iter().map(f).collect(), bx(b)),
        O::Rep(fl, b) => O::Rep(*fl, bx(b)),
        O::Sum(ss) => O::Sum(
            ss.iter()
                .map(|(p, k)| {
                    let p = match p {
                        Pre::Out(y, v) => Pre::Out(f(y), map_val(v, f)),
                        Pre::In(y, x) => Pre::In(f(y), f(x)),
                        Pre::Tau => Pre::Tau,
                    };
                    (p, go(k))
                })
                .collect(),
        ),
        O::Choice(y, bs) => O::Choice(
            f(y),
            bs.iter()
                .map(|(l, d, k)| {
                    let d = match d {
                        Dir::Out(v) => Dir::Out(map_val(v, f)),
                        Dir::In(x) => Dir::In(f(x)),
                    };
                    (l.clone(), d, go(k))
                })
                .collect(),
        ),
        O::If(v, a, b) => O::If(map_val(v, f), bx(a), bx(b)),
        O::Send(y, v, k) => O::Send(f(y), map_val(v, f), bx(k)),
        O::Recv(y, x, k) => O::Recv(f(y), f(x), bx(k)),
        O::Select(y, l, k) => O::Select(f(y), l.clone(), bx(k)),
        O::Case(y, arms) => O::Case(f(y), arms.iter().map(|(l, k)| (l.clone(), go(k))).collect()),
        O::Mark(id, k) => O::Mark(*id, bx(k)),
    }
}

/// Substitutes a literal or name for a variable; binders are unique, so no
/// capture is possible.
fn subst(o: &O, x: &Name, v: &Value) -> O {
    match v {
        Value::Name(m) => map_names(o, &|n: &Name| if n == x { m.clone() } else { n.clone() }),
        _ => subst_lit(o, x, v),
    }
}

/// Literal payloads may only land in value positions.
fn subst_lit(o: &O, x: &Name, v: &Value) -> O {
    fn sv(w: &Value, x: &Name, v: &Value) -> Value {
        match w {
            Value::Name(n) if n == x => v.clone(),
            Value::Not(a) => Value::Not(Box::new(sv(a, x, v))),
            Value::And(a, b) => Value::And(Box::new(sv(a, x, v)), Box::new(sv(b, x, v))),
            Value::Or(a, b) => Value::Or(Box::new(sv(a, x, v)), Box::new(sv(b, x, v))),
            other => other.clone(),
        }
    }
    let go = |k: &O| subst_lit(k, x, v);
    let bx = |k: &O| Box::new(subst_lit(k, x, v));
    match o {
        O::Nil => O::Nil,
        O::Par(a, b) => O::Par(bx(a), bx(b)),
        O::New(ns, b) => O::New(ns.clone(), bx(b)),
        O::Rep(fl, b) => O::Rep(*fl, bx(b)),
        O::Sum(ss) => O::Sum(
            ss.iter()
                .map(|(p, k)| {
                    let p = match p {
                        Pre::Out(y, w) => Pre::Out(y.clone(), sv(w, x, v)),
                        other => other.clone(),
                    };
                    (p, go(k))
                })
                .collect(),
        ),
        O::Choice(y, bs) => O::Choice(
            y.clone(),
            bs.iter()
                .map(|(l, d, k)| {
                    let d = match d {
                        Dir::Out(w) => Dir::Out(sv(w, x, v)),
                        other => other.clone(),
                    };
                    (l.clone(), d, go(k))
                })
                .collect(),
        ),
        O::If(c, a, b) => O::If(sv(c, x, v), bx(a), bx(b)),
        O::Send(y, w, k) => O::Send(y.clone(), sv(w, x, v), bx(k)),
        O::Recv(y, z, k) => O::Recv(y.clone(), z.clone(), bx(k)),
        O::Select(y, l, k) => O::Select(y.clone(), l.clone(), bx(k)),
        O::Case(y, arms) => O::Case(y.clone(), arms.iter().map(|(l, k)| (l.clone(), go(k))).collect()),
        O::Mark(id, k) => O::Mark(*id, bx(k)),
    }
}

fn truth(v: &Value) -> Option<bool> {
    match v {
        Value::Bool(b) => Some(*b),
        Value::Not(a) => truth(a).map(|b| !b),
        Value::And(a, b) => Some(truth(a)? && truth(b)?),
        Value::Or(a, b) => Some(truth(a)? || truth(b)?),
        _ => None,
    }
}

fn literal(v: &Value) -> Option<Value> {
    match v {
        Value::Unit | Value::Bool(_) | Value::Name(_) => Some(v.clone()),
        _ => truth(v).map(Value::Bool),
    }
}

/// Terms one congruence law away, applied at any position that is not
/// under a prefix. Zero is only ever removed.
fn neighbours(o: &O, out: &mut Vec<O>) {
    let b = |x: O| Box::new(x);
    match o {
        O::Par(p, q) => {
            out.push(O::Par(q.clone(), p.clone()));
            if let O::Par(p1, p2) = &**p {
                out.push(O::Par(p1.clone(), b(O::Par(p2.clone(), q.clone()))));
            }
            if let O::Par(q1, q2) = &**q {
                out.push(O::Par(b(O::Par(p.clone(), q1.clone())), q2.clone()));
            }
            if **q == O::Nil {
                out.push((**p).clone());
            }
            if let O::New(ns, body) = &**p {
                let fq = fv(q);
                if ns.iter().all(|n| !fq.contains(n)) {
                    out.push(O::New(ns.clone(), b(O::Par(body.clone(), q.clone()))));
                }
            }
            let mut inner = Vec::new();
            neighbours(p, &mut inner);
            out.extend(inner.into_iter().map(|p2| O::Par(b(p2), q.clone())));
            let mut inner = Vec::new();
            neighbours(q, &mut inner);
            out.extend(inner.into_iter().map(|q2| O::Par(p.clone(), b(q2))));
        }
        O::New(ns, body) => {
            if ns.len() == 2 {
                out.push(O::New(vec![ns[1].clone(), ns[0].clone()], body.clone()));
            }
            match &**body {
                O::Nil => out.push(O::Nil),
                O::New(ms, inner) => out.push(O::New(ms.clone(), b(O::New(ns.clone(), inner.clone())))),
                O::Par(p, q) => {
                    let (fp, fq) = (fv(p), fv(q));
                    if ns.iter().all(|n| !fq.contains(n)) {
                        out.push(O::Par(b(O::New(ns.clone(), p.clone())), q.clone()));
                    }
                    if ns.iter().all(|n| !fp.contains(n)) {
                        out.push(O::Par(p.clone(), b(O::New(ns.clone(), q.clone()))));
                    }
                }
                _ => {}
            }
            let mut inner = Vec::new();
            neighbours(body, &mut inner);
            out.extend(inner.into_iter().map(|x| O::New(ns.clone(), b(x))));
        }
        O::Rep(false, body) => {
            let copy = mark(&refresh(body), rep_id(body));
            out.push(O::Par(b(copy), b(O::Rep(true, body.clone()))));
        }
        _ => {}
    }
}

fn rep_id(body: &O) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    body.hash(&mut h);
    h.finish()
}

/// Tags the guarded parts of a copy so a step can tell whether it used one.
fn mark(o: &O, id: u64) -> O {
    match o {
        O::Nil | O::Rep(..) | O::Mark(..) => o.clone(),
        O::Par(p, q) => O::Par(Box::new(mark(p, id)), Box::new(mark(q, id))),
        O::New(ns, k) => O::New(ns.clone(), Box::new(mark(k, id))),
        _ => O::Mark(id, Box::new(o.clone())),
    }
}

/// Copies present at the active level of `o`.
fn copies(o: &O, out: &mut BTreeSet<u64>) {
    match o {
        O::Par(p, q) => {
            copies(p, out);
            copies(q, out);
        }
        O::New(_, k) => copies(k, out),
        O::Mark(id, _) => {
            out.insert(*id);
        }
        _ => {}
    }
}

/// The congruence class of `o`, or `None` past `cap` members.
fn class(o: &O, cap: usize) -> Option<Vec<O>> {
    let mut seen: HashSet<O> = HashSet::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::from([o.clone()]);
    seen.insert(o.clone());
    while let Some(t) = queue.pop_front() {
        let mut next = Vec::new();
        neighbours(&t, &mut next);
        order.push(t);
        for u in next {
            if seen.insert(u.clone()) {
                if seen.len() > cap {
                    return None;
                }
                queue.push_back(u);
            }
        }
    }
    Some(order)
}

/// A reduct with the replications whose copies it consumed from.
type Hit = (O, BTreeSet<u64>);

fn unmark(o: &O) -> (&O, Option<u64>) {
    match o {
        O::Mark(id, k) => (k, Some(*id)),
        _ => (o, None),
    }
}

fn used(ids: &[Option<u64>]) -> BTreeSet<u64> {
    ids.iter().flatten().copied().collect()
}

/// Axioms at the root, plus the parallel (left operand) and restriction
/// contexts.
fn reduce(calc: Calculus, o: &O, out: &mut Vec<Hit>) {
    let b = |x: O| Box::new(x);
    let (leaf, id) = unmark(o);
    match (calc, leaf) {
        (Calculus::Pi, O::Sum(ss)) => {
            for (p, k) in ss {
                if *p == Pre::Tau {
                    out.push((k.clone(), used(&[id])));
                }
            }
        }
        (Calculus::Pi, O::Par(p, q)) => {
            let ((p, ip), (q, iq)) = (unmark(p), unmark(q));
            if let (O::Sum(sp), O::Sum(sq)) = (p, q) {
                for (a, ka) in sp {
                    for (c, kc) in sq {
                        if let (Pre::Out(y, v), Pre::In(z, x)) = (a, c) {
                            if y == z {
                                out.push((O::Par(b(ka.clone()), b(subst(kc, x, v))), used(&[ip, iq])));
                            }
                        }
                    }
                }
            }
        }
        (_, O::If(v, p, q)) if calc.is_session() => match truth(v) {
            Some(true) => out.push(((**p).clone(), used(&[id]))),
            Some(false) => out.push(((**q).clone(), used(&[id]))),
            None => {}
        },
        (_, O::New(ns, body)) if calc.is_session() => {
            let (p, q, rest) = match &**body {
                O::Par(l, r) => match &**l {
                    O::Par(p, q) => (&**p, &**q, Some(r.clone())),
                    _ => (&**l, &**r, None),
                },
                _ => (&O::Nil, &O::Nil, None),
            };
            let ((p, ip), (q, iq)) = (unmark(p), unmark(q));
            let wrap = |pq: O| match &rest {
                Some(r) => O::New(ns.clone(), b(O::Par(b(pq), r.clone()))),
                None => O::New(ns.clone(), b(pq)),
            };
            sync(calc, &ns[0], &ns[1], p, q, &mut |pq| out.push((wrap(pq), used(&[ip, iq]))));
        }
        _ => {}
    }
    match o {
        O::Par(p, q) => {
            let mut inner = Vec::new();
            reduce(calc, p, &mut inner);
            out.extend(inner.into_iter().map(|(p2, u)| (O::Par(b(p2), q.clone()), u)));
        }
        O::New(ns, body) => {
            let mut inner = Vec::new();
            reduce(calc, body, &mut inner);
            out.extend(inner.into_iter().map(|(x, u)| (O::New(ns.clone(), b(x)), u)));
        }
        _ => {}
    }
}

/// `p` on endpoint `x` sends, `q` on `y` receives.
fn sync(calc: Calculus, x: &Name, y: &Name, p: &O, q: &O, emit: &mut impl FnMut(O)) {
    let b = |o: O| Box::new(o);
    match (calc, p, q) {
        (Calculus::CmvPlus, O::Choice(u, bp), O::Choice(w, bq)) if u == x && w == y => {
            for (l, d, k) in bp {
                let Dir::Out(v) = d else { continue };
                let Some(v) = literal(v) else { continue };
                for (m, e, kq) in bq {
                    if let Dir::In(z) = e {
                        if l == m {
                            emit(O::Par(b(k.clone()), b(subst(kq, z, &v))));
                        }
                    }
                }
            }
        }
        (Calculus::Cmv, O::Send(u, v, k), O::Recv(w, z, kq)) if u == x && w == y => {
            if let Some(v) = literal(v) {
                emit(O::Par(k.clone(), b(subst(kq, z, &v))));
            }
        }
        (Calculus::Cmv, O::Select(u, l, k), O::Case(w, arms)) if u == x && w == y => {
            if let Some((_, kq)) = arms.iter().find(|(m, _)| m == l) {
                emit(O::Par(k.clone(), b(kq.clone())));
            }
        }
        _ => {}
    }
}

/// Canonical targets of all one-step reductions of `t`, or `None` when the
/// congruence class exceeds `cap` terms.
pub fn oracle_targets(calc: Calculus, t: &Proc, cap: usize) -> Option<BTreeSet<Proc>> {
    let mut f = Fresh(0);
    let o = from_proc(t, &mut Vec::new(), &mut f);
    let members = class(&o, cap)?;
    let mut out = BTreeSet::new();
    for m in &members {
        // A copy unfolded in `m` but left untouched by the step is the same
        // reduct as from the folded member, so only used copies count.
        let mut present = BTreeSet::new();
        copies(m, &mut present);
        let mut ts = Vec::new();
        reduce(calc, m, &mut ts);
        out.extend(
            ts.iter()
                .filter(|(_, u)| present.is_subset(u))
                .map(|(r, _)| canonicalize(&to_proc(r, calc.is_session()))),
        );
    }
    Some(out)
}
