use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value as Json};

use mixsep_core::election::{
    automorphisms, hypergraph, is_automorphism, maximal_executions, orbits, symmetric_wrt,
    verify_electoral, Automorphism, ElectionVerdict, Network,
};
use mixsep_core::encoding::{correspondence, emulate_trace, encode_with, Mutation, PolarityAssignment};
use mixsep_core::enumeration::{property_campaign, Budget, Property};
use mixsep_core::equivalences::{coupled_similar, weakly_bisimilar};
use mixsep_core::patterns::{find_pattern_m, find_pattern_star, PatternWitness};
use mixsep_core::{
    canonicalize, enumerate_steps, free_names, parse_document, Calculus, Document, Error, Limits,
    Name, ReductionGraph, ReductionStep,
};

const OK: u8 = 0;
const VERDICT_FAIL: u8 = 1;
const USAGE: u8 = 2;
const INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(name = "mixsep", version, about = "Reduction semantics and expressiveness checks for pi, CMV+ and CMV")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Opts {
    /// pi, cmv+ or cmv; otherwise taken from the file extension
    /// (.pi and .net: pi, .cmvp: cmv+, .cmv: cmv).
    #[arg(long, global = true, value_parser = parse_calculus)]
    calculus: Option<Calculus>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Graphviz output, where the command has a graph to draw.
    #[arg(long, global = true)]
    dot: bool,
    /// State limit for reduction graphs (default: $MIXSEP_MAX_STATES, then 100000).
    #[arg(long, global = true)]
    max_states: Option<usize>,
    #[arg(long, global = true)]
    max_depth: Option<usize>,
    /// Seed for `steps --walk`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a term and print its canonical form.
    Parse { file: PathBuf },
    /// List the one-step reductions of a term.
    Steps {
        file: PathBuf,
        /// Follow a seeded random execution of at most this many steps instead.
        #[arg(long)]
        walk: Option<usize>,
    },
    /// Explore the reduction graph.
    Graph { file: PathBuf },
    /// Barbs of a term.
    Barbs {
        file: PathBuf,
        /// Barbs reachable by any number of steps.
        #[arg(long)]
        weak: bool,
    },
    /// Weak reduction barbed bisimilarity of two terms.
    Bisim { left: PathBuf, right: PathBuf },
    /// Coupled similarity of two terms.
    Coupledsim { left: PathBuf, right: PathBuf },
    /// Search a term's one-step reductions for a synchronisation pattern.
    FindPattern {
        #[arg(long, conflicts_with = "m", required_unless_present = "m")]
        star: bool,
        #[arg(long)]
        m: bool,
        file: PathBuf,
    },
    /// Decide whether a network is an electoral system.
    Electoral { file: PathBuf },
    /// Translate a CMV+ term into CMV.
    Encode {
        file: PathBuf,
        /// Use the broken translation that may abandon a handshake.
        #[arg(long)]
        mutant: bool,
    },
    /// Run the operational-correspondence checks of the translation.
    Correspondence {
        file: PathBuf,
        #[arg(long)]
        mutant: bool,
        /// Also show the emulation of every source step.
        #[arg(long)]
        trace: bool,
    },
    /// Check a property over every enumerated term within a budget.
    Campaign {
        #[arg(value_parser = parse_property)]
        property: Property,
        #[arg(long, default_value_t = 6)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        names: usize,
        #[arg(long, default_value_t = 1)]
        labels: usize,
        #[arg(long, default_value_t = 0)]
        nesting: usize,
        #[arg(long, default_value_t = 0)]
        free_names: usize,
        /// Payloads true and false as well as unit.
        #[arg(long)]
        rich_payloads: bool,
    },
}

fn parse_calculus(s: &str) -> Result<Calculus, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_property(s: &str) -> Result<Property, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// What a command produced: text, JSON and optionally DOT renderings of
/// the same result, plus the exit code.
struct Report {
    text: String,
    json: Json,
    dot: Option<String>,
    code: u8,
}

impl Report {
    fn new(text: String, json: Json, code: u8) -> Self {
        Report { text, json, dot: None, code }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Inconclusive(_) | Error::CyclicGraph => INCONCLUSIVE,
            _ => USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: USAGE, message: message.into() }
}

struct Ctx {
    opts: Opts,
    limits: Limits,
}

impl Ctx {
    fn calculus_for(&self, path: &Path) -> Result<Calculus, Failure> {
        if let Some(c) = self.opts.calculus {
            return Ok(c);
        }
        match path.extension().and_then(|e| e.to_str()) {
            Some("pi" | "net") => Ok(Calculus::Pi),
            Some("cmvp") => Ok(Calculus::CmvPlus),
            Some("cmv") => Ok(Calculus::Cmv),
            _ => Err(usage(format!("{}: cannot tell the calculus, pass --calculus", path.display()))),
        }
    }

    fn load(&self, path: &Path) -> Result<Document, Failure> {
        let calculus = self.calculus_for(path)?;
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        parse_document(calculus, &text).map_err(|e| usage(format!("{}:{e}", path.display())))
    }

    fn graph(&self, doc: &Document) -> ReductionGraph {
        ReductionGraph::explore(doc.calculus, std::slice::from_ref(&doc.term), self.limits)
    }
}

fn limits(opts: &Opts) -> Result<Limits, Failure> {
    let mut l = Limits::default();
    if let Ok(v) = std::env::var("MIXSEP_MAX_STATES") {
        l.max_states = v.trim().parse().map_err(|_| usage(format!("MIXSEP_MAX_STATES: not a number: {v}")))?;
    }
    if let Some(n) = opts.max_states {
        l.max_states = n;
    }
    l.max_depth = opts.max_depth;
    if l.max_states == 0 {
        return Err(usage("the state limit must be positive"));
    }
    Ok(l)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = limits(&cli.opts).and_then(|limits| {
        let ctx = Ctx { opts: cli.opts, limits };
        let report = dispatch(&ctx, &cli.command)?;
        if ctx.opts.dot && report.dot.is_none() {
            return Err(usage("--dot is only available for graph"));
        }
        Ok((ctx.opts.json, ctx.opts.dot, report))
    });
    match result {
        Ok((json, dot, r)) => {
            if dot {
                print!("{}", r.dot.unwrap_or_default());
            } else if json {
                println!("{}", serde_json::to_string_pretty(&r.json).expect("reports serialize"));
            } else {
                print!("{}", r.text);
            }
            ExitCode::from(r.code)
        }
        Err(f) => {
            eprintln!("mixsep: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(ctx: &Ctx, cmd: &Command) -> Result<Report, Failure> {
    match cmd {
        Command::Parse { file } => parse_cmd(ctx, file),
        Command::Steps { file, walk } => match walk {
            Some(n) => walk_cmd(ctx, file, *n),
            None => steps_cmd(ctx, file),
        },
        Command::Graph { file } => graph_cmd(ctx, file),
        Command::Barbs { file, weak } => barbs_cmd(ctx, file, *weak),
        Command::Bisim { left, right } => relation_cmd(ctx, left, right, false),
        Command::Coupledsim { left, right } => relation_cmd(ctx, left, right, true),
        Command::FindPattern { star, file, .. } => pattern_cmd(ctx, file, *star),
        Command::Electoral { file } => electoral_cmd(ctx, file),
        Command::Encode { file, mutant } => encode_cmd(ctx, file, *mutant),
        Command::Correspondence { file, mutant, trace } => correspondence_cmd(ctx, file, *mutant, *trace),
        Command::Campaign { property, size, names, labels, nesting, free_names, rich_payloads } => {
            let budget = Budget {
                max_size: *size,
                max_names: *names,
                max_labels: *labels,
                max_states: ctx.opts.max_states.unwrap_or(Budget::default().max_states),
                max_nesting: *nesting,
                free_names: *free_names,
                rich_payloads: *rich_payloads,
            };
            campaign_cmd(ctx, *property, budget)
        }
    }
}

fn parse_cmd(ctx: &Ctx, file: &Path) -> Result<Report, Failure> {
    let doc = ctx.load(file)?;
    let canon = canonicalize(&doc.term);
    let free: Vec<String> = free_names(&doc.term).iter().map(Name::to_string).collect();
    let text = format!(
        "calculus: {}\nterm: {}\ncanonical: {}\nsize: {}\nfree names: {}\n",
        doc.calculus,
        doc.term,
        canon,
        doc.term.size(),
        free.join(" ")
    );
    let json = json!({
        "calculus": doc.calculus,
        "term": doc.term.to_string(),
        "canonical": canon.to_string(),
        "size": doc.term.size(),
        "free_names": free,
        "ids": doc.ids.iter().map(Name::to_string).collect::<Vec<_>>(),
    });
    Ok(Report::new(text, json, OK))
}

fn step_json(i: usize, s: &ReductionStep) -> Json {
    json!({
        "index": i,
        "kind": s.footprint.kind,
        "endpoints": s.footprint.endpoints.iter().map(Name::to_string).collect::<Vec<_>>(),
        "consumed": s.footprint.consumed.iter().map(|o| o.to_string()).collect::<Vec<_>>(),
        "target": s.target.to_string(),
    })
}

fn step_line(i: usize, s: &ReductionStep) -> String {
    let ends: Vec<String> = s.footprint.endpoints.iter().map(Name::to_string).collect();
    let occ: Vec<String> = s.footprint.consumed.iter().map(|o| o.to_string()).collect();
    format!("{i}: {} on {{{}}} at {} -> {}\n", s.footprint.kind, ends.join(","), occ.join(" "), s.target)
}

fn steps_cmd(ctx: &Ctx, file: &Path) -> Result<Report, Failure> {
    let doc = ctx.load(file)?;
    let steps = enumerate_steps(doc.calculus, &doc.term);
    let mut text = format!("{}\n{} steps\n", canonicalize(&doc.term), steps.len());
    for (i, s) in steps.iter().enumerate() {
        text.push_str(&step_line(i, s));
    }
    let json = json!({
        "source": canonicalize(&doc.term).to_string(),
        "steps": steps.iter().enumerate().map(|(i, s)| step_json(i, s)).collect::<Vec<_>>(),
    });
    Ok(Report::new(text, json, OK))
}

fn walk_cmd(ctx: &Ctx, file: &Path, max: usize) -> Result<Report, Failure> {
    let doc = ctx.load(file)?;
    let mut rng = StdRng::seed_from_u64(ctx.opts.seed);
    let mut cur = canonicalize(&doc.term);
    let mut text = format!("{cur}\n");
    let mut trace = Vec::new();
    for _ in 0..max {
        let steps = enumerate_steps(doc.calculus, &cur);
        if steps.is_empty() {
            break;
        }
        let i = rng.random_range(0..steps.len());
        text.push_str(&step_line(trace.len(), &steps[i]));
        trace.push(step_json(trace.len(), &steps[i]));
        cur = steps[i].target.clone();
    }
    let stuck = enumerate_steps(doc.calculus, &cur).is_empty();
    if stuck {
        text.push_str("terminated\n");
    }
    let json = json!({
        "seed": ctx.opts.seed,
        "source": canonicalize(&doc.term).to_string(),
        "steps": trace,
        "terminated": stuck,
    });
    Ok(Report::new(text, json, OK))
}

fn truncation_code(g: &ReductionGraph) -> u8 {
    if g.truncated() {
        INCONCLUSIVE
    } else {
        OK
    }
}

fn graph_cmd(ctx: &Ctx, file: &Path) -> Result<Report, Failure> {
    let doc = ctx.load(file)?;
    let g = ctx.graph(&doc);
    let terminal = (0..g.len()).filter(|&s| g.is_terminal(s)).count();
    let mut text = format!(
        "states: {}\nedges: {}\nterminal: {terminal}\ncycles: {}\ntruncated: {}\n",
        g.len(),
        g.edges().len(),
        g.has_cycle(),
        g.truncated()
    );
    for (i, s) in g.states().iter().enumerate() {
        let _ = writeln!(text, "  {i}: {s}");
    }
    let mut r = Report::new(text, serde_json::to_value(g.export()).expect("graph export"), truncation_code(&g));
    r.dot = Some(g.to_dot());
    Ok(r)
}

fn barbs_cmd(ctx: &Ctx, file: &Path, weak: bool) -> Result<Report, Failure> {
    let doc = ctx.load(file)?;
    let (barbs, code) = if weak {
        let g = ctx.graph(&doc);
        (g.weak_barbs(g.roots()[0]).clone(), truncation_code(&g))
    } else {
        (mixsep_core::barbs(doc.calculus, &canonicalize(&doc.term)), OK)
    };
    let list: Vec<String> = barbs.iter().map(|b| b.to_string()).collect();
    let text = format!("{}\n", if list.is_empty() { "(none)".to_string() } else { list.join(" ") });
    let json = json!({ "weak": weak, "barbs": list, "complete": code == OK });
    Ok(Report::new(text, json, code))
}

fn relation_cmd(ctx: &Ctx, left: &Path, right: &Path, coupled: bool) -> Result<Report, Failure> {
    let (da, db) = (ctx.load(left)?, ctx.load(right)?);
    if da.calculus != db.calculus {
        return Err(usage("both terms must be in the same calculus"));
    }
    let (ga, gb) = (ctx.graph(&da), ctx.graph(&db));
    let (a, b) = (ga.roots()[0], gb.roots()[0]);
    let (related, witness, pairs) = if coupled {
        let (ok, w) = coupled_similar(&ga, &gb, a, b)?;
        let pairs = w.as_ref().map_or(0, |w| w.forward.pairs.len() + w.backward.pairs.len());
        (ok, serde_json::to_value(w).expect("witness"), pairs)
    } else {
        let (ok, w) = weakly_bisimilar(&ga, &gb, a, b)?;
        let pairs = w.as_ref().map_or(0, |w| w.pairs.len());
        (ok, serde_json::to_value(w).expect("witness"), pairs)
    };
    let what = if coupled { "coupled similar" } else { "weakly bisimilar" };
    let text = if related {
        format!("{what}: yes ({pairs} related pairs)\n")
    } else {
        format!("{what}: no\n")
    };
    let json = json!({
        "relation": if coupled { "coupled-similarity" } else { "weak-bisimilarity" },
        "left": canonicalize(&da.term).to_string(),
        "right": canonicalize(&db.term).to_string(),
        "related": related,
        "witness": witness,
    });
    Ok(Report::new(text, json, if related { OK } else { VERDICT_FAIL }))
}

fn pattern_cmd(ctx: &Ctx, file: &Path, star: bool) -> Result<Report, Failure> {
    let doc = ctx.load(file)?;
    let found: Option<PatternWitness> =
        if star { find_pattern_star(doc.calculus, &doc.term) } else { find_pattern_m(doc.calculus, &doc.term) };
    let name = if star { "star" } else { "M" };
    let Some(w) = found else {
        let json = json!({ "pattern": name, "found": false });
        return Ok(Report::new(format!("no {name} pattern\n"), json, VERDICT_FAIL));
    };
    let mut text = format!("{name} pattern found (valid: {})\n", w.is_valid());
    for (i, s) in w.steps.iter().enumerate() {
        text.push_str(&step_line(i, s));
    }
    let pairs = |ps: &[(usize, usize)]| ps.iter().map(|(a, b)| format!("{a}-{b}")).collect::<Vec<_>>().join(" ");
    let _ = writeln!(text, "conflicts: {}", pairs(&w.conflicts));
    let _ = writeln!(text, "distributable: {}", pairs(&w.distributable));
    let json = json!({ "pattern": name, "found": true, "valid": w.is_valid(), "witness": w });
    Ok(Report::new(text, json, OK))
}

fn electoral_cmd(ctx: &Ctx, file: &Path) -> Result<Report, Failure> {
    let doc = ctx.load(file)?;
    let mut net = Network::from_document(&doc);
    if net.ids.is_empty() {
        net.ids = (1..=net.size()).map(|i| Name::new(i.to_string())).collect();
    }
    let mut text = format!("nodes: {}\n", net.size());
    let mut json = serde_json::Map::new();
    json.insert("nodes".into(), json!(net.size()));

    let h = hypergraph(&net);
    let sigma = match &doc.automorphism {
        Some(spec) => Some(Automorphism::from_spec(spec)?),
        None => automorphisms(&h).into_iter().find(|s| orbits(s, net.size()).len() == 1),
    };
    if let Some(sigma) = sigma {
        let auto = is_automorphism(&h, &sigma);
        let orbit_count = orbits(&sigma, net.size()).len();
        let symmetric = if auto { Some(symmetric_wrt(&net, &sigma, ctx.limits)?) } else { None };
        let _ = writeln!(
            text,
            "automorphism: {} (orbits: {orbit_count}, symmetric: {})",
            if auto { "valid" } else { "invalid" },
            symmetric.map_or("n/a".into(), |s| s.to_string())
        );
        json.insert(
            "automorphism".into(),
            json!({ "valid": auto, "orbits": orbit_count, "symmetric": symmetric, "sigma": sigma }),
        );
    }

    match maximal_executions(&net, ctx.limits) {
        Ok((count, _)) => {
            let _ = writeln!(text, "maximal executions: {count}");
            json.insert("maximal_executions".into(), json!(count.to_string()));
        }
        Err(e) => {
            let _ = writeln!(text, "maximal executions: unavailable ({e})");
        }
    }

    let verdict = verify_electoral(&net, ctx.limits);
    let code = match &verdict {
        ElectionVerdict::Electoral { leaders } => {
            let mut wins: BTreeMap<String, usize> = BTreeMap::new();
            for (_, l) in leaders {
                *wins.entry(l.to_string()).or_default() += 1;
            }
            let _ = writeln!(text, "verdict: electoral");
            if !wins.is_empty() {
                let row: Vec<String> = wins.iter().map(|(l, n)| format!("{l}:{n}")).collect();
                let _ = writeln!(text, "leaders: {}", row.join(" "));
            }
            json.insert("wins".into(), json!(wins));
            OK
        }
        ElectionVerdict::NotElectoral { counterexample } => {
            let _ = writeln!(text, "verdict: not electoral\ncounterexample ({} steps):", counterexample.len());
            for s in &counterexample.states {
                let _ = writeln!(text, "  {s}");
            }
            VERDICT_FAIL
        }
        ElectionVerdict::Inconclusive { reason } => {
            let _ = writeln!(text, "verdict: inconclusive ({reason})");
            INCONCLUSIVE
        }
    };
    json.insert("verdict".into(), serde_json::to_value(&verdict).expect("verdict"));
    Ok(Report::new(text, Json::Object(json), code))
}

fn polarities(doc: &Document) -> Result<PolarityAssignment, Failure> {
    if doc.calculus != Calculus::CmvPlus {
        return Err(usage("the translation takes a cmv+ term"));
    }
    Ok(PolarityAssignment::infer(&doc.term, &PolarityAssignment::from_document(doc)))
}

fn mutation(mutant: bool) -> Option<Mutation> {
    mutant.then_some(Mutation::DroppableHandshake)
}

fn encode_cmd(ctx: &Ctx, file: &Path, mutant: bool) -> Result<Report, Failure> {
    let doc = ctx.load(file)?;
    let pa = polarities(&doc)?;
    let out = encode_with(&pa.annotate(&doc.term), &pa, mutation(mutant))?;
    let sides: BTreeMap<String, String> =
        pa.sides.iter().map(|(n, s)| (n.to_string(), format!("{s:?}").to_lowercase())).collect();
    let text = format!("{out}\n");
    let json = json!({ "source": doc.term.to_string(), "encoded": out.to_string(), "sides": sides });
    Ok(Report::new(text, json, OK))
}

fn verdict_line(text: &mut String, name: &str, v: &mixsep_core::encoding::Verdict) {
    let _ = writeln!(text, "{name:<18} {} ({} checked) {}", if v.pass { "PASS" } else { "FAIL" }, v.checked, v.detail);
    for w in &v.witness {
        let _ = writeln!(text, "    {w}");
    }
}

fn correspondence_cmd(ctx: &Ctx, file: &Path, mutant: bool, trace: bool) -> Result<Report, Failure> {
    let doc = ctx.load(file)?;
    let pa = polarities(&doc)?;
    let r = correspondence(&doc.term, &pa, mutation(mutant), ctx.limits)?;
    let mut text = format!(
        "source states: {}\ntarget states: {}\n",
        r.source_states, r.target_states
    );
    verdict_line(&mut text, "completeness", &r.completeness);
    verdict_line(&mut text, "soundness", &r.soundness_gorla);
    verdict_line(&mut text, "soundness (weak)", &r.soundness_weak);
    verdict_line(&mut text, "barb sensitivity", &r.barb_sensitivity);
    verdict_line(&mut text, "divergence", &r.divergence);
    verdict_line(&mut text, "coupled", &r.coupled);
    let _ = writeln!(text, "intermediate states: {}", r.intermediate_states.len());

    let mut traces = Vec::new();
    if trace && !mutant {
        let source = pa.annotate(&doc.term);
        for (i, step) in enumerate_steps(Calculus::CmvPlus, &source).iter().enumerate() {
            let e = emulate_trace(&source, step, &pa, ctx.limits)?;
            let _ = writeln!(text, "step {i} -> {}: {} target steps", step.target, e.states.len().saturating_sub(1));
            for (k, s) in e.states.iter().enumerate() {
                let tag = if k == 0 {
                    "start"
                } else if e.intermediate.contains(&k) {
                    "intermediate"
                } else {
                    "settled"
                };
                let _ = writeln!(text, "  s{k} [{tag}] {s}");
            }
            traces.push(json!({
                "step": i,
                "target": step.target.to_string(),
                "states": e.states.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                "intermediate": e.intermediate,
                "exact": e.exact,
            }));
        }
    }
    let pass = r.passes();
    let _ = writeln!(text, "verdict: {}", if pass { "pass" } else { "fail" });
    let mut json = serde_json::to_value(&r).expect("report");
    json["pass"] = json!(pass);
    if trace {
        json["traces"] = json!(traces);
    }
    Ok(Report::new(text, json, if pass { OK } else { VERDICT_FAIL }))
}

fn campaign_cmd(ctx: &Ctx, property: Property, budget: Budget) -> Result<Report, Failure> {
    let calculus = ctx.opts.calculus.unwrap_or(Calculus::CmvPlus);
    let r = property_campaign(property, calculus, &budget)?;
    let mut text = format!(
        "terms: {}\nchecked: {}\nwitnesses: {}\nfailures: {}\ninconclusive: {}\nskipped: {}\n",
        r.terms, r.checked, r.witnesses, r.failures, r.inconclusive, r.skipped
    );
    for e in &r.examples {
        let _ = writeln!(text, "  {e}");
    }
    let code = if r.failures > 0 {
        VERDICT_FAIL
    } else if r.inconclusive > 0 {
        INCONCLUSIVE
    } else {
        OK
    };
    Ok(Report::new(text, serde_json::to_value(&r).expect("report"), code))
}
