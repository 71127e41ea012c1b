use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use mixsep_bench::model;
use mixsep_core::election::{verify_electoral, Network};
use mixsep_core::encoding::{correspondence, PolarityAssignment};
use mixsep_core::enumeration::{enumerate_terms, Budget};
use mixsep_core::patterns::{find_pattern_m, find_pattern_star};
use mixsep_core::{canonicalize, enumerate_steps, parse, Calculus, Limits, ReductionGraph};

fn syntax(c: &mut Criterion) {
    let src = "new x y in (x (l!true.p1 (l!.0) + l?(z).p2 (l!z.0)) | p3 (l!.0) | y (l?(z).p5 (l!z.0) + l!true.p6 (l!.0)))";
    c.bench_function("parse+canonicalize", |b| {
        b.iter(|| canonicalize(&parse(Calculus::CmvPlus, black_box(src)).unwrap()))
    });
    let t = model(Calculus::Pi, "le_pi.net").term;
    c.bench_function("steps le_pi", |b| b.iter(|| enumerate_steps(Calculus::Pi, black_box(&t))));
}

fn graphs(c: &mut Criterion) {
    let doc = model(Calculus::Pi, "le_pi.net");
    let t = doc.term.clone();
    c.bench_function("explore le_pi", |b| {
        b.iter(|| ReductionGraph::explore(Calculus::Pi, std::slice::from_ref(&t), Limits::default()))
    });
    let net = Network::from_document(&doc);
    c.bench_function("electoral le_pi", |b| b.iter(|| verify_electoral(black_box(&net), Limits::default())));
}

fn patterns(c: &mut Criterion) {
    let star = model(Calculus::Pi, "p_star.pi").term;
    c.bench_function("star", |b| b.iter(|| find_pattern_star(Calculus::Pi, black_box(&star))));
    let m = model(Calculus::CmvPlus, "p_m.cmvp").term;
    c.bench_function("m", |b| b.iter(|| find_pattern_m(Calculus::CmvPlus, black_box(&m))));
}

fn encoding(c: &mut Criterion) {
    let s = model(Calculus::CmvPlus, "s_example.cmvp").term;
    let pa = PolarityAssignment::infer(&s, &PolarityAssignment::default());
    let s = pa.annotate(&s);
    c.bench_function("correspondence s", |b| b.iter(|| correspondence(black_box(&s), &pa, None, Limits::default())));
}

fn enumeration(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumerate");
    g.sample_size(10);
    g.bench_function("cmv+ size 9", |b| b.iter(|| enumerate_terms(Calculus::CmvPlus, &Budget::flat(9, 2, 2))));
    g.finish();
}

criterion_group!(benches, syntax, graphs, patterns, encoding, enumeration);
criterion_main!(benches);
