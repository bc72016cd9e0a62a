use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dhm_bench::{bosons, kronecker_triple, three_qubits, two_qubits};
use dhmeasure::exact::qvec;
use dhmeasure::mc_oracle::sample;
use dhmeasure::measure_engine::cone_density;
use dhmeasure::multiplicity::{character_oracle, kronecker, multiplicity_measure};
use dhmeasure::qmarginal::{eigenvalue_distribution, nonabelian_measure};
use dhmeasure::rootdata::{Frame, RationalVector};

fn measures(c: &mut Criterion) {
    let mut g = c.benchmark_group("measures");
    g.sample_size(10);
    g.bench_function("two qubit distribution", |b| {
        b.iter(|| eigenvalue_distribution(black_box(&two_qubits())).unwrap())
    });
    g.bench_function("three qubit distribution", |b| {
        b.iter(|| eigenvalue_distribution(black_box(&three_qubits())).unwrap())
    });
    g.bench_function("eight bosons non-Abelian", |b| b.iter(|| nonabelian_measure(black_box(&bosons(8))).unwrap()));
    let gens: Vec<RationalVector> = [[-2, 2], [-2, 0], [-2, -2], [0, -2]]
        .iter()
        .map(|v| RationalVector::new(qvec(v), Frame::Named("t".into())))
        .collect();
    g.bench_function("planar cone density", |b| b.iter(|| cone_density(black_box(&gens), None).unwrap()));
    g.finish();
}

fn discrete(c: &mut Criterion) {
    let mut g = c.benchmark_group("discrete");
    let (l, m, n) = kronecker_triple();
    g.bench_function("kronecker weight route", |b| b.iter(|| kronecker(black_box(&l), &m, &n).unwrap()));
    g.bench_function("kronecker character route", |b| b.iter(|| character_oracle(black_box(&l), &m, &n).unwrap()));
    g.bench_function("Sym^2 multiplicity measure k=64", |b| {
        b.iter(|| multiplicity_measure(black_box(&bosons(2)), 64).unwrap())
    });
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("sampling");
    g.sample_size(10);
    g.bench_function("three qubit marginals x10k", |b| {
        b.iter(|| sample(black_box(&three_qubits()), 10_000, 7).unwrap())
    });
    g.finish();
}

criterion_group!(benches, measures, discrete, sampling);
criterion_main!(benches);
