use dhmeasure::exact::{q, qf, qvec, QVec, Q};
use dhmeasure::measure_engine::PiecewiseMeasure;
use dhmeasure::polyring::Polynomial;
use dhmeasure::qmarginal::*;
use dhmeasure::rootdata::RepSpec;
use num_traits::Zero;

fn var(n: usize, i: usize) -> Polynomial {
    Polynomial::var(n, i)
}

fn argmin(x: &[Q]) -> usize {
    (0..x.len()).min_by(|&a, &b| x[a].cmp(&x[b])).unwrap()
}

fn sum_vars(n: usize) -> Polynomial {
    (0..n).fold(Polynomial::zero(n), |a, i| &a + &var(n, i))
}

#[test]
fn two_qubit_nonabelian_is_half_dt_on_diagonal() {
    let p = MarginalProblem::pure(RepSpec::tensor(&[2, 2])).in_frame(ReportFrame::Weyl);
    let k = nonabelian_measure(&p).unwrap();
    assert!(k.complex.cells.is_empty());
    assert_eq!(k.layers.len(), 1);
    assert_eq!(k.layers[0].plane.ell, qvec(&[1, -1]));
    assert_eq!(k.total_mass().unwrap(), qf(1, 2));
    let d = eigenvalue_distribution(&p.in_frame(ReportFrame::Spectra)).unwrap();
    let l = &d.layers[0];
    let s = var(1, 0);
    let half = Polynomial::constant(1, qf(1, 2));
    let expected = (&s - &half).pow(2).scale(&q(24));
    for (cell, dens) in l.cells.iter().zip(&l.densities) {
        assert_eq!(*dens, expected);
        let mut ends: Vec<Q> = cell.vertices.iter().map(|v| v[0].clone()).collect();
        ends.sort();
        assert_eq!(ends, vec![qf(1, 2), q(1)]);
    }
}

#[test]
fn three_qubit_pyramids() {
    let p = MarginalProblem::pure(RepSpec::tensor(&[2, 2, 2])).in_frame(ReportFrame::Weyl);
    let k = nonabelian_measure(&p).unwrap();
    assert!(k.layers.is_empty());
    for (c, d) in k.complex.cells.iter().zip(&k.densities) {
        let x = &c.interior_point;
        let m = var(3, argmin(x));
        let total: Q = x.iter().cloned().sum();
        let expected = if total < q(1) {
            m.scale(&qf(1, 16))
        } else {
            (&(&Polynomial::one(3) - &sum_vars(3)) + &m.scale(&q(2))).scale(&qf(1, 32))
        };
        assert_eq!(*d, expected, "cell at {x:?}");
    }
    let poly = moment_polytope(&p).unwrap();
    let mut want = vec![qvec(&[0, 0, 0]), qvec(&[1, 0, 0]), qvec(&[0, 1, 0]), qvec(&[0, 0, 1]), qvec(&[1, 1, 1])];
    want.sort();
    assert_eq!(poly.vertices, want);
}

#[test]
fn three_qubit_marginal_density() {
    let p = MarginalProblem::pure(RepSpec::tensor(&[2, 2, 2]));
    let d = eigenvalue_distribution(&p).unwrap();
    assert_eq!(d.total_mass().unwrap(), q(1));
    let half = Polynomial::constant(3, qf(1, 2));
    let prod = (0..3).fold(Polynomial::one(3), |a, i| &a * &(&var(3, i) - &half));
    let c8 = Q::from_integer(dhmeasure::exact::factorial(8));
    for (c, dens) in d.complex.cells.iter().zip(&d.densities) {
        let y = &c.interior_point;
        let m = var(3, argmin(y));
        let total: Q = y.iter().cloned().sum();
        let tail = if total <= q(2) { &m - &half } else { &(&Polynomial::one(3) - &sum_vars(3)).scale(&qf(1, 2)) + &m };
        assert_eq!(*dens, (&prod * &tail).scale(&c8), "cell at {y:?}");
    }
}

#[test]
fn bravyi_polytope() {
    let spec = vec![qf(4, 7), qf(2, 7), qf(1, 7), Q::zero()];
    let p = MarginalProblem::orbit(RepSpec::tensor(&[2, 2]), spec).in_frame(ReportFrame::Weyl);
    let poly = moment_polytope(&p).unwrap();
    let (c1, c2, c3) = (qf(1, 7), qf(3, 7), qf(5, 7));
    let mut want: Vec<Inequality> = vec![
        Inequality::new(&qvec(&[-1, 0]), &Q::zero()),
        Inequality::new(&qvec(&[0, -1]), &Q::zero()),
        Inequality::new(&qvec(&[1, 0]), &c3),
        Inequality::new(&qvec(&[0, 1]), &c3),
        Inequality::new(&qvec(&[1, 1]), &(&c2 + &c3)),
        Inequality::new(&qvec(&[1, -1]), &(&c3 - &c1)),
        Inequality::new(&qvec(&[-1, 1]), &(&c3 - &c1)),
    ];
    want.sort();
    assert_eq!(poly.inequalities, want);
    let d = eigenvalue_distribution(&p).unwrap();
    assert_eq!(d.total_mass().unwrap(), q(1));
}

fn lp_check(a: usize, b: usize) {
    let rep = RepSpec::with_spectator(a, b);
    let p = MarginalProblem::pure(rep.clone()).in_frame(ReportFrame::Spectra);
    let r = a - 1;
    let (ma, mb) = spectra_map(&rep);
    let lam_hat: Vec<Polynomial> = {
        let mut v: Vec<Polynomial> = (0..r).map(|i| var(r, i)).collect();
        let last = v.iter().fold(Polynomial::one(r), |acc, y| &acc - y);
        v.push(last);
        v
    };
    let abelian_target = lam_hat.iter().fold(Polynomial::one(r), |acc, l| &acc * &l.pow(b as u32 - 1));
    let ab =
        abelian_measure(&p).unwrap().affine_pullback(&ma, &mb, dhmeasure::rootdata::Frame::Named("s".into())).unwrap();
    check_proportional(&ab, &abelian_target);
    let mut vandermonde = Polynomial::one(r);
    for j in 0..a {
        for k in j + 1..a {
            vandermonde = &vandermonde * &(&lam_hat[j] - &lam_hat[k]);
        }
    }
    let power = lam_hat.iter().fold(Polynomial::one(r), |acc, l| &acc * &l.pow((b - a) as u32));
    let k = nonabelian_measure(&p)
        .unwrap()
        .affine_pullback(&ma, &mb, dhmeasure::rootdata::Frame::Named("s".into()))
        .unwrap();
    check_proportional(&k, &(&power * &vandermonde));
    let dist = eigenvalue_distribution(&p).unwrap();
    check_proportional(&dist, &(&power * &vandermonde.pow(2)));
}

fn check_proportional(m: &PiecewiseMeasure, target: &Polynomial) {
    let mass = m.total_mass().unwrap();
    let target_mass = m
        .complex
        .cells
        .iter()
        .zip(&m.densities)
        .filter(|(_, d)| !d.is_zero())
        .map(|(c, _)| c.integrate(target).unwrap())
        .fold(Q::zero(), |a, b| a + b);
    let c = mass / target_mass;
    assert!(m.layers.iter().all(|l| l.mass().unwrap().is_zero()));
    for d in m.densities.iter().filter(|d| !d.is_zero()) {
        assert_eq!(*d, target.scale(&c));
    }
}

#[test]
fn lloyd_pagels_2_2() {
    lp_check(2, 2);
}

#[test]
fn lloyd_pagels_2_3() {
    lp_check(2, 3);
}

#[test]
fn lloyd_pagels_3_3() {
    lp_check(3, 3);
}

#[test]
fn bosons_up_to_eight() {
    for n in 2..=8usize {
        let rep = RepSpec::sym(2, n);
        let p = MarginalProblem::pure(rep).in_frame(ReportFrame::Weyl);
        let ab = abelian_measure(&p).unwrap();
        let k = nonabelian_measure(&p).unwrap();
        let ni = n as i64;
        let c_ab = Q::from_integer(dhmeasure::exact::factorial(n - 1) * dhmeasure::exact::factorial(n) * (1i64 << n));
        let c_k =
            Q::from_integer(dhmeasure::exact::factorial(n - 2) * dhmeasure::exact::factorial(n) * (1i64 << (n - 1)));
        let x = var(1, 0);
        let formula = |at: &[Q], deg: u32, c: &Q, shift: i64| {
            let mut acc = Polynomial::zero(1);
            for kk in (-ni..=ni).step_by(2) {
                if at[0] > q(kk) {
                    let j = (ni + kk) / 2;
                    let sign = if (j + shift) % 2 == 0 { q(1) } else { q(-1) };
                    let coef = sign * Q::from_integer(dhmeasure::exact::binomial(ni, j)) / c;
                    acc = &acc + &(&x - &Polynomial::constant(1, q(kk))).pow(deg).scale(&coef);
                }
            }
            acc
        };
        for (cell, d) in ab.complex.cells.iter().zip(&ab.densities) {
            assert_eq!(*d, formula(&cell.interior_point, n as u32 - 1, &c_ab, 0), "Abelian N={n}");
        }
        for (cell, d) in k.complex.cells.iter().zip(&k.densities) {
            assert_eq!(*d, formula(&cell.interior_point, n as u32 - 2, &c_k, 1), "non-Abelian N={n}");
        }
    }
}

#[test]
fn average_paths_agree_for_bosons() {
    for n in 2..=6usize {
        let rep = RepSpec::sym(2, n);
        let p = MarginalProblem::pure(rep.clone());
        let avg = average_functional(&p, &purity_polynomial(&rep, 0).unwrap()).unwrap();
        let want = qf(1, 2) + qf(1, 2 * n as i64);
        assert_eq!(avg.direct, want);
        assert_eq!(avg.via_abelian, Some(want));
    }
}

#[test]
fn first_moment_has_no_abelian_path() {
    let rep = RepSpec::sym(2, 2);
    let avg = average_functional(&MarginalProblem::pure(rep), &var(1, 0)).unwrap();
    assert!(avg.via_abelian.is_none());
}

#[allow(dead_code)]
fn pt(v: &[i64]) -> QVec {
    qvec(v)
}
