use dhmeasure::mc_oracle::*;
use dhmeasure::qmarginal::{eigenvalue_distribution, MarginalProblem};
use dhmeasure::rootdata::RepSpec;

const SAMPLES: usize = 100_000;
const KS_LIMIT: f64 = 0.01;

fn ks_for(p: &MarginalProblem, stat: Statistic, seed: u64) -> (f64, f64) {
    let m = eigenvalue_distribution(p).unwrap();
    let cdf = exact_cdf(&m, &p.reported_rep().unwrap(), &stat).unwrap();
    let batch = sample(p, SAMPLES, seed).unwrap();
    let sampled = ks_distance(&batch, &cdf, &stat).unwrap();
    let calibration = ks_statistic(&sample_exact(&cdf, SAMPLES, seed + 1), |x| cdf.eval(x)).unwrap();
    (sampled, calibration)
}

#[test]
fn two_qubits() {
    let (d, c) = ks_for(&MarginalProblem::pure(RepSpec::tensor(&[2, 2])), Statistic::MaxEigenvalue(0), 11);
    assert!(d < KS_LIMIT && c < KS_LIMIT, "{d} {c}");
}

#[test]
fn three_qubits() {
    let (d, c) = ks_for(&MarginalProblem::pure(RepSpec::tensor(&[2, 2, 2])), Statistic::MaxEigenvalue(0), 12);
    assert!(d < KS_LIMIT && c < KS_LIMIT, "{d} {c}");
}

#[test]
fn three_bosons() {
    let (d, c) = ks_for(&MarginalProblem::pure(RepSpec::sym(2, 3)), Statistic::MaxEigenvalue(0), 13);
    assert!(d < KS_LIMIT && c < KS_LIMIT, "{d} {c}");
}

#[test]
fn lloyd_pagels_two_three() {
    let (d, c) = ks_for(&MarginalProblem::pure(RepSpec::with_spectator(2, 3)), Statistic::MaxEigenvalue(0), 14);
    assert!(d < KS_LIMIT && c < KS_LIMIT, "{d} {c}");
}

#[test]
fn bosonic_purity_mean() {
    let p = MarginalProblem::pure(RepSpec::sym(2, 4));
    let batch = sample(&p, 20_000, 15).unwrap();
    let v: Vec<f64> = batch.samples.iter().map(|s| Statistic::Purity(0).value(s).unwrap()).collect();
    let (mean, err) = mean_and_error(&v);
    assert!((mean - 0.625).abs() < 3.0 * err, "{mean} ± {err}");
}

#[test]
fn purity_law_for_two_qubits() {
    let (d, _) = ks_for(&MarginalProblem::pure(RepSpec::tensor(&[2, 2])), Statistic::Purity(0), 16);
    assert!(d < KS_LIMIT, "{d}");
}
