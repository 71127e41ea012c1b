use std::path::PathBuf;
use std::process::{Command, Output};

fn model(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "models", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixsep"))
        .args(args)
        .env_remove("MIXSEP_MAX_STATES")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str, text: &str) -> String {
    let dir = std::env::temp_dir().join(format!("mixsep-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn electoral_pi_ring() {
    let o = run(&["electoral", &model("le_pi.net")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("maximal executions: 10"), "{out}");
    assert!(out.contains("leaders: 1:2 2:2 3:2 4:2 5:2"), "{out}");
}

#[test]
fn star_witness() {
    let o = run(&["find-pattern", "--star", &model("p_star.pi")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("conflicts: 0-1 0-4 1-2 2-3 3-4"));
}

#[test]
fn missing_pattern_is_a_failed_verdict() {
    let f = scratch("plain.pi", "a! | a?.b!");
    assert_eq!(run(&["find-pattern", "--m", &f]).status.code(), Some(1));
}

#[test]
fn garbage_is_a_usage_error() {
    let f = scratch("garbage.txt", "x ( l! +");
    let o = run(&["parse", "--calculus", "cmv+", &f]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("garbage.txt"));
    assert_eq!(run(&["parse", "--calculus", "lambda", &f]).status.code(), Some(2));
    assert_eq!(run(&["barbs", "--dot", &model("p_star.pi")]).status.code(), Some(2));
}

#[test]
fn truncation_is_inconclusive() {
    assert_eq!(run(&["graph", "--max-states", "4", &model("le_pi.net")]).status.code(), Some(3));
    let o = Command::new(env!("CARGO_BIN_EXE_mixsep"))
        .args(["graph", &model("le_pi.net")])
        .env("MIXSEP_MAX_STATES", "4")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    let o = Command::new(env!("CARGO_BIN_EXE_mixsep"))
        .args(["graph", &model("le_pi.net")])
        .env("MIXSEP_MAX_STATES", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_is_stable_and_round_trips() {
    for args in [
        vec!["graph", "--json", "models/p_star.pi"],
        vec!["electoral", "--json", "models/le_pi.net"],
        vec!["correspondence", "--json", "--trace", "models/s_example.cmvp"],
        vec!["find-pattern", "--json", "--m", "models/p_m.cmvp"],
        vec!["steps", "--json", "--walk", "6", "--seed", "3", "models/le_pi.net"],
    ] {
        let args: Vec<String> =
            args.iter().map(|a| a.strip_prefix("models/").map_or(a.to_string(), model)).collect();
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (a, b) = (run(&args), run(&args));
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
        let again = serde_json::to_string_pretty(&v).unwrap();
        assert_eq!(again.trim_end(), stdout(&a).trim_end());
    }
}

#[test]
fn mutant_translation_fails_correspondence() {
    assert_eq!(run(&["correspondence", &model("s_example.cmvp")]).status.code(), Some(0));
    assert_eq!(run(&["correspondence", "--mutant", &model("s_example.cmvp")]).status.code(), Some(1));
}

#[test]
fn bisim_and_coupled() {
    let a = scratch("a.pi", "new c in (c! | c?.o!)");
    let b = scratch("b.pi", "tau.o!");
    let c = scratch("c.pi", "o? ");
    assert_eq!(run(&["bisim", &a, &b]).status.code(), Some(0));
    assert_eq!(run(&["coupledsim", &a, &b]).status.code(), Some(0));
    assert_eq!(run(&["bisim", &a, &c]).status.code(), Some(1));
}

#[test]
fn symmetric_session_rings_are_not_electoral() {
    for f in ["ring_mixed.cmvp", "ring_two_round.cmvp", "ring_payload.cmvp"] {
        let o = run(&["electoral", &model(f)]);
        let out = stdout(&o);
        assert_ne!(o.status.code(), Some(0), "{f}: {out}");
        assert!(out.contains("automorphism: valid (orbits: 1, symmetric: true)"), "{f}: {out}");
    }
}
