//! One line per acceptance criterion. Exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use mixsep_core::election::{
    hypergraph, is_automorphism, network_graph, orbits, symmetric_wrt, verify_electoral, Automorphism,
    ElectionVerdict, Network,
};
use mixsep_core::encoding::{correspondence, emulate_trace, encode, strip_junk, PolarityAssignment};
use mixsep_core::enumeration::{enumerate_terms, property_campaign, Budget, CampaignReport, Property};
use mixsep_core::equivalences::{
    coupled_similar, validate_bisimulation, validate_coupled, weakly_bisimilar, BisimTable,
};
use mixsep_core::oracle::oracle_targets;
use mixsep_core::patterns::{find_pattern_m, find_pattern_star, PatternWitness};
use mixsep_core::{canonicalize, enumerate_steps, parse, parse_document, Calculus, Limits, Proc, ReductionGraph};

const ELECTORAL_SECS: u64 = 10;
const PATTERN_SECS: u64 = 5;
const CORRESPONDENCE_SECS: u64 = 300;
/// Congruence classes larger than this are not explored by the oracle.
const ORACLE_CAP: usize = 50_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn model(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "models", name].iter().collect()
}

fn load(calc: Calculus, name: &str) -> mixsep_core::Document {
    let text = std::fs::read_to_string(model(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    parse_document(calc, &text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn cli(args: &[&str]) -> (Option<i32>, String, Duration) {
    let start = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_mixsep"))
        .args(args)
        .env_remove("MIXSEP_MAX_STATES")
        .output()
        .expect("binary runs");
    (o.status.code(), String::from_utf8_lossy(&o.stdout).into_owned(), start.elapsed())
}

fn canon_all(calc: Calculus, terms: &[&str]) -> BTreeSet<Proc> {
    terms.iter().map(|t| canonicalize(&parse(calc, t).unwrap())).collect()
}

fn criterion_1() -> Outcome {
    let path = model("le_pi.net");
    let (code, out, took) = cli(&["electoral", "--json", path.to_str().unwrap()]);
    let json: serde_json::Value = match serde_json::from_str(&out) {
        Ok(v) => v,
        Err(e) => return outcome(false, format!("no JSON from the CLI: {e}")),
    };
    let doc = load(Calculus::Pi, "le_pi.net");
    let net = Network::from_document(&doc);
    let g = network_graph(&net, Limits::default());
    let ElectionVerdict::Electoral { leaders } = verify_electoral(&net, Limits::default()) else {
        return outcome(false, "library verdict is not electoral");
    };
    let mut wins: BTreeMap<String, usize> = BTreeMap::new();
    for (_, l) in &leaders {
        *wins.entry(l.to_string()).or_default() += 1;
    }
    let distinct: BTreeSet<&Vec<String>> = leaders.iter().map(|(e, _)| &e.states).collect();
    let expected: BTreeMap<String, usize> = (1..=5).map(|i| (i.to_string(), 2)).collect();
    let pass = code == Some(0)
        && took < Duration::from_secs(ELECTORAL_SECS)
        && !g.truncated()
        && json["maximal_executions"] == "10"
        && leaders.len() == 10
        && distinct.len() == 10
        && wins == expected
        && json["wins"] == serde_json::to_value(&expected).unwrap();
    outcome(
        pass,
        format!(
            "{} maximal executions, wins {:?}, truncated={}, {} ms",
            leaders.len(),
            wins,
            g.truncated(),
            took.as_millis()
        ),
    )
}

/// Maps each witness step to the name of the expected target it reaches.
fn letters(w: &PatternWitness, expected: &[(&str, Proc)]) -> Option<Vec<String>> {
    w.steps
        .iter()
        .map(|s| expected.iter().find(|(_, t)| *t == s.target).map(|(l, _)| l.to_string()))
        .collect()
}

fn pairs_as_letters(ps: &[(usize, usize)], names: &[String]) -> BTreeSet<String> {
    ps.iter()
        .map(|&(i, j)| {
            let mut v = [names[i].clone(), names[j].clone()];
            v.sort();
            v.concat()
        })
        .collect()
}

fn criterion_2() -> Outcome {
    let targets = [
        ("a", "b! + c?.o_c! | c! + d?.o_d! | d! + e?.o_e! | o_a!"),
        ("b", "o_b! | c! + d?.o_d! | d! + e?.o_e! | e! + a?.o_a!"),
        ("c", "a! + b?.o_b! | o_c! | d! + e?.o_e! | e! + a?.o_a!"),
        ("d", "a! + b?.o_b! | b! + c?.o_c! | o_d! | e! + a?.o_a!"),
        ("e", "a! + b?.o_b! | b! + c?.o_c! | c! + d?.o_d! | o_e!"),
    ];
    let expected: Vec<(&str, Proc)> =
        targets.iter().map(|(l, t)| (*l, canonicalize(&parse(Calculus::Pi, t).unwrap()))).collect();
    let cycle: BTreeSet<String> = ["ab", "bc", "cd", "de", "ae"].iter().map(|s| s.to_string()).collect();
    let apart: BTreeSet<String> = ["ac", "ad", "bd", "be", "ce"].iter().map(|s| s.to_string()).collect();

    let mut notes = Vec::new();
    let mut pass = true;
    for file in ["p_star.pi", "p_star_single.pi"] {
        let path = model(file);
        let (code, _, took) = cli(&["find-pattern", "--star", path.to_str().unwrap()]);
        let t = load(Calculus::Pi, file).term;
        let Some(w) = find_pattern_star(Calculus::Pi, &t) else {
            return outcome(false, format!("{file}: no witness"));
        };
        let ok_cli = code == Some(0) && took < Duration::from_secs(PATTERN_SECS);
        let shape = w.is_valid() && w.conflicts.len() == 5 && w.distributable.len() == 5;
        let ok = if file == "p_star.pi" {
            match letters(&w, &expected) {
                Some(names) => {
                    let set: BTreeSet<&String> = names.iter().collect();
                    set.len() == 5
                        && pairs_as_letters(&w.conflicts, &names) == cycle
                        && pairs_as_letters(&w.distributable, &names) == apart
                }
                None => false,
            }
        } else {
            true
        };
        pass &= ok_cli && shape && ok;
        notes.push(format!("{file}: steps a-e={ok} cycle={shape} {} ms", took.as_millis()));
    }
    outcome(pass, notes.join("; "))
}

fn criterion_3() -> Outcome {
    let expected = canon_all(
        Calculus::CmvPlus,
        &[
            "new x y in (p1 (l!.0) | x (l!false.p3 (l!.0) + l?(z).p4 (l!z.0)) | p5 (l!true.0) | y (l?(z).p7 (l!z.0) + l!false.p8 (l!.0)))",
            "new x y in (p1 (l!.0) | x (l!false.p3 (l!.0) + l?(z).p4 (l!z.0)) | y (l?(z).p5 (l!z.0) + l!true.p6 (l!.0)) | p7 (l!true.0))",
            "new x y in (x (l!true.p1 (l!.0) + l?(z).p2 (l!z.0)) | p3 (l!.0) | y (l?(z).p5 (l!z.0) + l!true.p6 (l!.0)) | p7 (l!false.0))",
        ],
    );
    let path = model("p_m.cmvp");
    let (code, _, took) = cli(&["find-pattern", "--m", path.to_str().unwrap()]);
    let t = load(Calculus::CmvPlus, "p_m.cmvp").term;
    let Some(w) = find_pattern_m(Calculus::CmvPlus, &t) else {
        return outcome(false, "no witness");
    };
    let got: BTreeSet<Proc> = w.steps.iter().map(|s| s.target.clone()).collect();
    let pass = code == Some(0) && took < Duration::from_secs(PATTERN_SECS) && w.is_valid() && got == expected;
    outcome(pass, format!("targets match={} valid={} {} ms", got == expected, w.is_valid(), took.as_millis()))
}

fn campaign(p: Property, c: Calculus, b: &Budget) -> CampaignReport {
    property_campaign(p, c, b).unwrap_or_else(|e| panic!("{p:?} over {c}: {e}"))
}

fn criterion_4() -> Outcome {
    let b = Budget::flat(14, 2, 2);
    let start = Instant::now();
    let cmv = campaign(Property::NoStar, Calculus::CmvPlus, &b);
    let pi = campaign(Property::NoStar, Calculus::Pi, &b);
    let pass = cmv.witnesses == 0 && cmv.inconclusive == 0 && cmv.checked == cmv.terms && pi.witnesses >= 1;
    outcome(
        pass,
        format!(
            "size 14, 2 channels, 2 labels: cmv+ {} terms {} witnesses; pi {} terms {} witnesses; {} s",
            cmv.terms,
            cmv.witnesses,
            pi.terms,
            pi.witnesses,
            start.elapsed().as_secs()
        ),
    )
}

fn criterion_5() -> Outcome {
    let budgets = [
        Budget::flat(13, 2, 2),
        Budget { max_size: 10, max_names: 2, max_labels: 1, max_nesting: 1, rich_payloads: false, ..Budget::default() },
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for b in &budgets {
        let r = campaign(Property::Confluence, Calculus::CmvPlus, b);
        pass &= r.failures == 0 && r.inconclusive == 0 && r.checked > 0;
        notes.push(format!("size {}: {} networks, {} step pairs, {} failures", b.max_size, r.terms, r.checked, r.failures));
    }
    outcome(pass, notes.join("; "))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let doc = load(Calculus::CmvPlus, "s_example.cmvp");
    let pa = PolarityAssignment::from_document(&doc);
    let limits = Limits::default();
    let report = match correspondence(&doc.term, &pa, None, limits) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("example: {e}")),
    };
    let pa = PolarityAssignment::infer(&doc.term, &pa);
    let s = pa.annotate(&doc.term);
    let s2 = canonicalize(
        &parse(
            Calculus::CmvPlus,
            "new x:int y:ext in (o2 (m!true.0) | y (l!false.o3 (m!.0) + l?(z).o4 (m!z.0)))",
        )
        .unwrap(),
    );
    let Some(step) = enumerate_steps(Calculus::CmvPlus, &s).into_iter().find(|st| st.target == s2) else {
        return outcome(false, "no source step to S2'");
    };
    let trace = match emulate_trace(&s, &step, &pa, limits) {
        Ok(e) => e,
        Err(e) => return outcome(false, format!("trace: {e}")),
    };
    let t2 = trace.states.get(1).map(|t| t.to_string());
    let shape = trace.states.len() == 5 && trace.intermediate == [1] && trace.settled() == [2, 3, 4];
    let t2_reported = t2.is_some_and(|t| report.intermediate_states.contains(&t));

    let mut corpus_ok = true;
    let mut notes = Vec::new();
    for b in [
        Budget { max_size: 7, max_names: 1, max_labels: 1, max_nesting: 1, free_names: 1, ..Budget::default() },
        Budget { free_names: 1, ..Budget::flat(9, 1, 2) },
    ] {
        let r = campaign(Property::Correspondence, Calculus::CmvPlus, &b);
        corpus_ok &= r.failures == 0 && r.inconclusive == 0 && r.checked > 0;
        notes.push(format!("size {}: {} checked {} failed {} skipped", b.max_size, r.checked, r.failures, r.skipped));
    }
    let took = start.elapsed();
    let pass = report.passes()
        && report.coupled.pass
        && shape
        && t2_reported
        && corpus_ok
        && took < Duration::from_secs(CORRESPONDENCE_SECS);
    outcome(
        pass,
        format!(
            "example passes={} shape T1->T2->T3->->T4={} T2 intermediate={}; corpus {}; {} s",
            report.passes(),
            shape,
            t2_reported,
            notes.join(", "),
            took.as_secs()
        ),
    )
}

fn criterion_7() -> Outcome {
    let limits = Limits::states(2_000);
    let mut graphs: Vec<ReductionGraph> = Vec::new();
    for (calc, b) in [(Calculus::Pi, Budget::flat(7, 2, 1)), (Calculus::CmvPlus, Budget::flat(8, 1, 2))] {
        for t in enumerate_terms(calc, &b).unwrap() {
            graphs.push(ReductionGraph::explore(calc, &[t], limits));
        }
    }
    let (mut pairs, mut bad) = (0usize, Vec::new());
    for g in graphs.iter().filter(|g| !g.truncated()) {
        let table = BisimTable::new(g).unwrap();
        let n = g.len();
        for i in 0..n {
            if !table.related(i, i) {
                bad.push(format!("not reflexive: {}", g.state(i)));
            }
            for j in 0..n {
                if table.related(i, j) != table.related(j, i) {
                    bad.push(format!("not symmetric: {}", g.state(i)));
                }
                if (0..n).any(|k| table.related(i, j) && table.related(j, k) && !table.related(i, k)) {
                    bad.push(format!("not transitive: {}", g.state(i)));
                }
                if !table.related(i, j) {
                    continue;
                }
                pairs += 1;
                let (b, w) = weakly_bisimilar(g, g, i, j).unwrap();
                let (c, cw) = coupled_similar(g, g, i, j).unwrap();
                if !b || !c || !validate_bisimulation(g, g, &w.unwrap()) || !validate_coupled(g, g, &cw.unwrap()) {
                    bad.push(format!("pair {} / {}", g.state(i), g.state(j)));
                }
            }
        }
    }

    // Junk left by committed emulations: every state of an encoded graph
    // against the same state with its junk removed.
    let mut junk = 0usize;
    let b = Budget { max_size: 7, max_names: 1, max_labels: 1, free_names: 1, ..Budget::default() };
    let mut sources = vec![load(Calculus::CmvPlus, "s_example.cmvp").term];
    sources.extend(enumerate_terms(Calculus::CmvPlus, &b).unwrap());
    for s in &sources {
        let pa = PolarityAssignment::infer(s, &PolarityAssignment::default());
        let Ok(enc) = encode(&pa.annotate(s), &pa) else { continue };
        let g = ReductionGraph::explore(Calculus::Cmv, &[enc], limits);
        if g.truncated() {
            continue;
        }
        for t in g.states() {
            let clean = strip_junk(t);
            if clean == *t {
                continue;
            }
            junk += 1;
            let ga = ReductionGraph::explore(Calculus::Cmv, std::slice::from_ref(t), limits);
            let gb = ReductionGraph::explore(Calculus::Cmv, std::slice::from_ref(&clean), limits);
            if !weakly_bisimilar(&ga, &gb, 0, 0).unwrap().0 {
                bad.push(format!("junk visible: {t}"));
            }
        }
    }
    let detail = format!(
        "{} graphs, {} bisimilar pairs re-validated, {} states with junk; {} violations{}",
        graphs.len(),
        pairs,
        junk,
        bad.len(),
        bad.first().map_or(String::new(), |b| format!(" (first: {b})"))
    );
    outcome(bad.is_empty() && pairs > 0 && junk > 0, detail)
}

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for (calc, b) in [
        (Calculus::Pi, Budget::flat(8, 2, 1)),
        (Calculus::Pi, Budget { max_size: 6, max_names: 2, ..Budget::default() }),
        (Calculus::CmvPlus, Budget::flat(9, 1, 2)),
        (Calculus::CmvPlus, Budget { max_size: 6, free_names: 1, ..Budget::default() }),
        (Calculus::Cmv, Budget { max_size: 5, ..Budget::default() }),
    ] {
        let terms = enumerate_terms(calc, &b).unwrap();
        let (mut agree, mut skipped, mut differ) = (0usize, 0usize, Vec::new());
        for t in &terms {
            let want: BTreeSet<Proc> = enumerate_steps(calc, t).into_iter().map(|s| s.target).collect();
            match oracle_targets(calc, t, ORACLE_CAP) {
                Some(got) if got == want => agree += 1,
                Some(_) => differ.push(t.to_string()),
                None => skipped += 1,
            }
        }
        pass &= differ.is_empty() && skipped == 0;
        notes.push(format!(
            "{calc} size {}: {agree}/{} agree{}{}",
            b.max_size,
            terms.len(),
            if skipped > 0 { format!(", {skipped} past the class cap") } else { String::new() },
            differ.first().map_or(String::new(), |d| format!(", first mismatch {d}"))
        ));
    }
    outcome(pass, notes.join("; "))
}

fn criterion_9() -> Outcome {
    let limits = Limits::default();
    let mut notes = Vec::new();
    let mut pass = true;
    for file in ["ring_mixed.cmvp", "ring_two_round.cmvp", "ring_payload.cmvp"] {
        let doc = load(Calculus::CmvPlus, file);
        let net = Network::from_document(&doc);
        let sigma = Automorphism::from_spec(doc.automorphism.as_ref().expect("header")).unwrap();
        let symmetric = net.size() == 5
            && is_automorphism(&hypergraph(&net), &sigma)
            && orbits(&sigma, 5).len() == 1
            && symmetric_wrt(&net, &sigma, limits).unwrap_or(false);
        let verdict = verify_electoral(&net, limits);
        pass &= symmetric && !verdict.is_electoral();
        let v = match verdict {
            ElectionVerdict::Electoral { .. } => "electoral",
            ElectionVerdict::NotElectoral { .. } => "not electoral",
            ElectionVerdict::Inconclusive { .. } => "inconclusive",
        };
        notes.push(format!("{file}: symmetric={symmetric} {v}"));
    }
    let lib = campaign(Property::NoElectoral, Calculus::CmvPlus, &Budget { max_size: 40, ..Budget::default() });
    pass &= lib.failures == 0 && lib.checked >= 3;
    notes.push(format!("{} generated rings, {} electoral", lib.checked, lib.failures));
    outcome(pass, notes.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("leader election in pi", criterion_1),
        ("star in pi", criterion_2),
        ("M in CMV+", criterion_3),
        ("no star in CMV+", criterion_4),
        ("confluence in CMV+", criterion_5),
        ("encoding correspondence", criterion_6),
        ("equivalence checkers", criterion_7),
        ("semantics oracle", criterion_8),
        ("no electoral CMV+ ring", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
