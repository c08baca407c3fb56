use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use macroreal::exclusion::{exclude_esmr, max_overlap, WitnessCase};
use macroreal::lgi::{lgi_point, LgiModel};
use macroreal::properties::{check_properties, Tolerances};
use macroreal::random::random_case;
use macroreal::witness::{build_witness, check_antidistinguishable, WitnessParams};
use macroreal::zoo::{kochen_specker_model, qubit_fragment, SphereGrid};
use macroreal::{classify, Bindings};

fn witness(c: &mut Criterion) {
    let params = WitnessParams::new(0.5, 4).unwrap();
    c.bench_function("build_witness d=4", |b| b.iter(|| build_witness(black_box(params)).unwrap()));
    let w = build_witness(params).unwrap();
    c.bench_function("antidistinguishing search", |b| {
        b.iter(|| check_antidistinguishable(&w.psi, &w.phi, &w.zero).unwrap())
    });
}

fn exclusion(c: &mut Criterion) {
    let case = WitnessCase::build(0.5, 4).unwrap();
    c.bench_function("exclude_esmr", |b| b.iter(|| exclude_esmr(black_box(&case)).unwrap()));
    c.bench_function("max_overlap", |b| b.iter(|| max_overlap(black_box(&case)).unwrap()));
}

fn zoo(c: &mut Criterion) {
    let fragment = qubit_fragment();
    let grid = SphereGrid::fibonacci(20_000).unwrap();
    c.bench_function("sphere grid nearest", |b| {
        let v = [0.3f64, -0.5, 0.8];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let v = [v[0] / n, v[1] / n, v[2] / n];
        b.iter(|| grid.nearest(black_box(&v)))
    });
    let mut group = c.benchmark_group("ks 20000 nodes");
    group.sample_size(10);
    group.bench_function("build", |b| b.iter(|| kochen_specker_model(&grid, &fragment).unwrap()));
    let model = kochen_specker_model(&grid, &fragment).unwrap();
    let bindings = Bindings::by_name(&model, &fragment);
    group.bench_function("classify", |b| b.iter(|| classify(&model, &fragment, &bindings).unwrap()));
    group.finish();
}

fn properties(c: &mut Criterion) {
    let case = random_case(3).unwrap();
    c.bench_function("property suite, one random model", |b| {
        b.iter(|| check_properties(&case.model, &case.fragment, &case.bindings, Tolerances::EXACT).unwrap())
    });
    c.bench_function("lgi quantum point", |b| b.iter(|| lgi_point(black_box(PI / 3.0), LgiModel::Quantum, None)));
}

criterion_group!(benches, witness, exclusion, zoo, properties);
criterion_main!(benches);
