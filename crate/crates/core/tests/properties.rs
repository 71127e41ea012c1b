use std::collections::BTreeSet;

use proptest::prelude::*;

use mixsep_core::encoding::{encode, strip_junk, PolarityAssignment};
use mixsep_core::enumeration::{enumerate_terms, raw_terms, Budget};
use mixsep_core::equivalences::{
    coupled_similar, is_junk, validate_bisimulation, validate_coupled, weakly_bisimilar, BisimTable,
};
use mixsep_core::syntax::rename;
use mixsep_core::{canonicalize, enumerate_steps, parse, Calculus, Limits, Name, Proc, ReductionGraph};

fn name() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("a"), Just("b"), Just("c")]
}

/// Finite pi terms, as source text.
fn pi_term() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("0".to_string()),
        name().prop_map(|n| format!("{n}!")),
        name().prop_map(|n| format!("{n}?")),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(p, q)| format!("(({p}) | ({q}))")),
            (name(), inner.clone()).prop_map(|(n, p)| format!("new {n} in ({p})")),
            (name(), name(), inner.clone()).prop_map(|(a, b, p)| format!("{a}!({b}).({p})")),
            (name(), inner.clone()).prop_map(|(a, p)| format!("{a}?(x).({p} | x!)")),
            (name(), inner.clone(), inner.clone()).prop_map(|(a, p, q)| format!("tau.({p}) + {a}?.({q})")),
        ]
    })
}

fn pi(s: &str) -> Proc {
    parse(Calculus::Pi, s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

fn graph(calc: Calculus, t: &Proc) -> ReductionGraph {
    ReductionGraph::explore(calc, std::slice::from_ref(t), Limits::states(5_000))
}

fn targets(calc: Calculus, t: &Proc) -> BTreeSet<Proc> {
    enumerate_steps(calc, t).into_iter().map(|s| s.target).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_form_is_idempotent_and_reparses(s in pi_term()) {
        let c = canonicalize(&pi(&s));
        prop_assert_eq!(&canonicalize(&c), &c);
        prop_assert_eq!(canonicalize(&pi(&c.to_string())), c);
    }

    #[test]
    fn congruent_terms_have_equal_steps(p in pi_term(), q in pi_term()) {
        let (a, b) = (pi(&format!("({p}) | ({q})")), pi(&format!("({q}) | (({p}) | 0)")));
        prop_assert_eq!(canonicalize(&a), canonicalize(&b));
        prop_assert_eq!(targets(Calculus::Pi, &a), targets(Calculus::Pi, &b));
    }

    #[test]
    fn free_renaming_commutes_with_steps(s in pi_term()) {
        let t = pi(&s);
        let fresh = Name::new("d");
        let renamed: BTreeSet<Proc> =
            targets(Calculus::Pi, &t).iter().map(|u| canonicalize(&rename(u, &Name::new("a"), &fresh))).collect();
        prop_assert_eq!(renamed, targets(Calculus::Pi, &rename(&t, &Name::new("a"), &fresh)));
    }

    #[test]
    fn bisimilarity_is_an_equivalence(s in pi_term()) {
        let g = graph(Calculus::Pi, &pi(&s));
        prop_assume!(!g.truncated());
        let table = BisimTable::new(&g).unwrap();
        let n = g.len().min(24);
        for i in 0..n {
            prop_assert!(table.related(i, i));
            for j in 0..n {
                prop_assert_eq!(table.related(i, j), table.related(j, i));
                for k in 0..n {
                    if table.related(i, j) && table.related(j, k) {
                        prop_assert!(table.related(i, k));
                    }
                }
            }
        }
    }

    #[test]
    fn bisimilar_states_are_coupled_similar_with_valid_witnesses(p in pi_term(), q in pi_term()) {
        let (ga, gb) = (graph(Calculus::Pi, &pi(&p)), graph(Calculus::Pi, &pi(&q)));
        prop_assume!(!ga.truncated() && !gb.truncated());
        for (a, b) in [(0, 0), (0, gb.len() - 1), (ga.len() - 1, 0)] {
            let (bisim, w) = weakly_bisimilar(&ga, &gb, a, b).unwrap();
            let (coupled, cw) = coupled_similar(&ga, &gb, a, b).unwrap();
            if bisim {
                prop_assert!(coupled);
                prop_assert!(validate_bisimulation(&ga, &gb, w.as_ref().unwrap()));
            }
            if coupled {
                prop_assert!(validate_coupled(&ga, &gb, cw.as_ref().unwrap()));
            }
        }
    }

    #[test]
    fn self_bisimilar_across_copies(s in pi_term()) {
        let g = graph(Calculus::Pi, &pi(&s));
        prop_assume!(!g.truncated());
        let h = graph(Calculus::Pi, &pi(&format!("({s}) | 0")));
        prop_assert!(weakly_bisimilar(&g, &h, 0, 0).unwrap().0);
    }
}

fn session_corpus() -> Vec<Proc> {
    let b = Budget { max_size: 8, max_names: 1, max_labels: 1, free_names: 1, ..Budget::default() };
    raw_terms(Calculus::CmvPlus, &b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn junk_is_invisible(i in any::<prop::sample::Index>()) {
        let corpus = session_corpus();
        let t = &corpus[i.index(corpus.len())];
        let pa = PolarityAssignment::infer(t, &PolarityAssignment::default());
        let Ok(enc) = encode(&pa.annotate(t), &pa) else { return Ok(()) };
        let g = graph(Calculus::Cmv, &enc);
        prop_assume!(!g.truncated());
        for s in g.states().iter().take(12) {
            let clean = strip_junk(s);
            let gs = graph(Calculus::Cmv, s);
            let gc = graph(Calculus::Cmv, &clean);
            prop_assert!(weakly_bisimilar(&gs, &gc, 0, 0).unwrap().0, "{} vs {}", s, clean);
        }
    }

    #[test]
    fn encoding_is_homomorphic_on_parallel_components(i in any::<prop::sample::Index>()) {
        let corpus = session_corpus();
        let t = &corpus[i.index(corpus.len())];
        let pa = PolarityAssignment::infer(t, &PolarityAssignment::default());
        let t = pa.annotate(t);
        let Ok(whole) = encode(&t, &pa) else { return Ok(()) };
        let mut binders = Vec::new();
        let mut body = &t;
        while let Proc::New(b, k) = body {
            binders.push(b.clone());
            body = k;
        }
        let parts = match body {
            Proc::Par(ps) => ps.clone(),
            other => vec![other.clone()],
        };
        let pieces: Vec<Proc> = parts.iter().map(|p| encode(p, &pa).unwrap()).collect();
        let rebuilt = Proc::new_binders(binders, Proc::par(pieces));
        prop_assert_eq!(canonicalize(&whole), canonicalize(&rebuilt));
    }

    #[test]
    fn encoding_commutes_with_free_renaming(i in any::<prop::sample::Index>()) {
        let corpus = session_corpus();
        let t = &corpus[i.index(corpus.len())];
        let pa = PolarityAssignment::infer(t, &PolarityAssignment::default());
        let t = pa.annotate(t);
        let Ok(enc) = encode(&t, &pa) else { return Ok(()) };
        let (from, to) = (Name::new("o1"), Name::new("q"));
        let mut pb = pa.clone();
        if let Some(side) = pb.sides.remove(&from) {
            pb.sides.insert(to.clone(), side);
        }
        let renamed = encode(&rename(&t, &from, &to), &pb).unwrap();
        prop_assert_eq!(canonicalize(&rename(&enc, &from, &to)), canonicalize(&renamed));
    }
}

#[test]
fn enumerated_terms_are_distinct_and_closed_under_congruence() {
    for (calc, b) in [
        (Calculus::Pi, Budget::flat(7, 2, 1)),
        (Calculus::CmvPlus, Budget::flat(9, 1, 2)),
        (Calculus::Cmv, Budget { max_size: 4, ..Budget::default() }),
    ] {
        let terms = enumerate_terms(calc, &b).unwrap();
        let set: BTreeSet<&Proc> = terms.iter().collect();
        assert_eq!(set.len(), terms.len());
        for t in &terms {
            assert_eq!(&canonicalize(t), t);
            let shuffled = match t {
                Proc::Par(ps) => Proc::Par(ps.iter().rev().cloned().chain([Proc::Nil]).collect()),
                other => Proc::Par(vec![Proc::Nil, other.clone()]),
            };
            assert!(set.contains(&canonicalize(&shuffled)), "{t}");
        }
    }
}

#[test]
fn stripped_components_are_junk() {
    for t in session_corpus().iter().take(400) {
        let pa = PolarityAssignment::infer(t, &PolarityAssignment::default());
        let Ok(enc) = encode(&pa.annotate(t), &pa) else { continue };
        let g = graph(Calculus::Cmv, &enc);
        for s in g.states() {
            let clean = strip_junk(s);
            if clean != canonicalize(s) {
                let gone = junk_residue(s, &clean);
                assert!(is_junk(Calculus::Cmv, &gone), "{s} leaves {gone}");
            }
        }
    }
}

/// The top-level components of `s` that stripping drops, under the same
/// restrictions: a component is dropped if removing it leaves the stripped
/// form unchanged.
fn junk_residue(s: &Proc, clean: &Proc) -> Proc {
    let d = mixsep_core::decompose(&canonicalize(s));
    let mut kept = d.components.clone();
    let mut gone = Vec::new();
    let mut i = 0;
    while i < kept.len() {
        let mut rest = kept.clone();
        let c = rest.remove(i);
        if strip_junk(&Proc::new_binders(d.restricted.clone(), Proc::par(rest.clone()))) == *clean {
            kept = rest;
            gone.push(c);
        } else {
            i += 1;
        }
    }
    Proc::new_binders(d.restricted, Proc::par(gone))
}
