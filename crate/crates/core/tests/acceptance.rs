//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use dhmeasure::exact::{factorial, q, qf, qvec, Q};
use dhmeasure::mc_oracle::{exact_cdf, ks_distance, ks_statistic, sample, sample_exact, Statistic};
use dhmeasure::measure_engine::{
    abelian_heckman_terms, cone_density, heckman_sum, projective_fixed_points, single_summand_density, DensityEngine,
    PiecewiseMeasure,
};
use dhmeasure::multiplicity::{
    character_oracle, first_moment, kronecker, multiplicity_measure, plethysm_decomposition, YoungDiagram,
};
use dhmeasure::polyring::Polynomial;
use dhmeasure::qmarginal::*;
use dhmeasure::rootdata::{weight_list, weights_of, Frame, RationalVector, RepSpec};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TWO_QUBIT_BUDGET: Duration = Duration::from_secs(1);
const THREE_QUBIT_BUDGET: Duration = Duration::from_secs(10);
const BOSON_BUDGET: Duration = Duration::from_secs(60);
const KS_LIMIT: f64 = 0.01;
const MC_SAMPLES: usize = 100_000;
const RATIO_RANGE: (f64, f64) = (0.3, 0.7);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn var(n: usize, i: usize) -> Polynomial {
    Polynomial::var(n, i)
}

fn argmin(x: &[Q]) -> usize {
    (0..x.len()).min_by(|&a, &b| x[a].cmp(&x[b])).unwrap()
}

fn sum_vars(n: usize) -> Polynomial {
    (0..n).fold(Polynomial::zero(n), |a, i| &a + &var(n, i))
}

fn timed(budget: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    check(t < budget, format!("took {t:?}, budget {budget:?}"))?;
    Ok(t)
}

fn two_qubits() -> Outcome {
    let start = Instant::now();
    let p = MarginalProblem::pure(RepSpec::tensor(&[2, 2]));
    let k = nonabelian_measure(&p.clone().in_frame(ReportFrame::Weyl)).map_err(e)?;
    check(k.complex.cells.is_empty() && k.layers.len() == 1, "expected a single delta layer")?;
    check(k.total_mass().map_err(e)? == qf(1, 2), "total mass is not 1/2")?;
    let layer = &k.layers[0];
    check(layer.plane.ell == qvec(&[1, -1]) && layer.plane.offset.is_zero(), "layer is not the diagonal")?;
    check(layer.mass().map_err(e)? == qf(1, 2), "layer mass is not 1/2")?;
    let dist = eigenvalue_distribution(&p).map_err(e)?;
    let s = var(1, 0);
    let expected = (&s - &Polynomial::constant(1, qf(1, 2))).pow(2).scale(&q(24));
    for (c, d) in dist.layers[0].cells.iter().zip(&dist.layers[0].densities) {
        check(*d == expected, "maximal-eigenvalue density differs from 24(s − 1/2)²")?;
        let mut ends: Vec<Q> = c.vertices.iter().map(|v| v[0].clone()).collect();
        ends.sort();
        check(ends == vec![qf(1, 2), q(1)], "support is not [1/2, 1]")?;
    }
    let t = timed(TWO_QUBIT_BUDGET, start)?;
    Ok(format!("½·dt on the diagonal, 24(s−½)² on [½,1]; {t:.2?}"))
}

fn three_qubits() -> Outcome {
    let start = Instant::now();
    let p = MarginalProblem::pure(RepSpec::tensor(&[2, 2, 2]));
    let k = nonabelian_measure(&p.clone().in_frame(ReportFrame::Weyl)).map_err(e)?;
    check(!k.complex.cells.is_empty() && k.layers.is_empty(), "expected cells only")?;
    for (c, d) in k.complex.cells.iter().zip(&k.densities) {
        let x = &c.interior_point;
        let m = var(3, argmin(x));
        let total: Q = x.iter().cloned().sum();
        let expected = if total < q(1) {
            m.scale(&qf(1, 16))
        } else {
            (&(&Polynomial::one(3) - &sum_vars(3)) + &m.scale(&q(2))).scale(&qf(1, 32))
        };
        check(*d == expected, format!("cell at {x:?}"))?;
    }
    let dist = eigenvalue_distribution(&p).map_err(e)?;
    let half = Polynomial::constant(3, qf(1, 2));
    let prod = (0..3).fold(Polynomial::one(3), |a, i| &a * &(&var(3, i) - &half));
    let c8 = Q::from_integer(factorial(8));
    for (c, d) in dist.complex.cells.iter().zip(&dist.densities) {
        let y = &c.interior_point;
        let m = var(3, argmin(y));
        let total: Q = y.iter().cloned().sum();
        let tail = if total <= q(2) { &m - &half } else { &(&Polynomial::one(3) - &sum_vars(3)).scale(&qf(1, 2)) + &m };
        check(*d == (&prod * &tail).scale(&c8), format!("marginal cell at {y:?}"))?;
    }
    let t = timed(THREE_QUBIT_BUDGET, start)?;
    Ok(format!(
        "{} pyramid cells and {} marginal cells exact; {t:.2?}",
        k.complex.cells.len(),
        dist.complex.cells.len()
    ))
}

fn polytopes() -> Outcome {
    let p = MarginalProblem::pure(RepSpec::tensor(&[2, 2, 2])).in_frame(ReportFrame::Weyl);
    let poly = moment_polytope(&p).map_err(e)?;
    let mut want = vec![qvec(&[0, 0, 0]), qvec(&[1, 0, 0]), qvec(&[0, 1, 0]), qvec(&[0, 0, 1]), qvec(&[1, 1, 1])];
    want.sort();
    check(poly.vertices == want, format!("three-qubit vertices {:?}", poly.vertices))?;
    let spec = vec![qf(4, 7), qf(2, 7), qf(1, 7), Q::zero()];
    let b = MarginalProblem::orbit(RepSpec::tensor(&[2, 2]), spec).in_frame(ReportFrame::Weyl);
    let bp = moment_polytope(&b).map_err(e)?;
    let (c1, c2, c3) = (qf(1, 7), qf(3, 7), qf(5, 7));
    let mut want = vec![
        Inequality::new(&qvec(&[-1, 0]), &Q::zero()),
        Inequality::new(&qvec(&[0, -1]), &Q::zero()),
        Inequality::new(&qvec(&[1, 0]), &c3),
        Inequality::new(&qvec(&[0, 1]), &c3),
        Inequality::new(&qvec(&[1, 1]), &(&c2 + &c3)),
        Inequality::new(&qvec(&[1, -1]), &(&c3 - &c1)),
        Inequality::new(&qvec(&[-1, 1]), &(&c3 - &c1)),
    ];
    want.sort();
    check(bp.inequalities == want, format!("Bravyi inequalities {:?}", bp.inequalities))?;
    Ok("conv{0,e₁,e₂,e₃,(1,1,1)}; Bravyi 7 inequalities exact".into())
}

fn planar_cone() -> Outcome {
    let frame = Frame::Named("t".into());
    let gens: Vec<RationalVector> =
        [[-2, 2], [-2, 0], [-2, -2], [0, -2]].iter().map(|g| RationalVector::new(qvec(g), frame.clone())).collect();
    let m = cone_density(&gens, None).map_err(e)?;
    let (x, y) = (var(2, 0), var(2, 1));
    let chambers = [
        (qvec(&[-1, 3]), Polynomial::zero(2)),
        (vec![qf(-3, 2), qf(1, 2)], (&x + &y).pow(2).scale(&qf(1, 64))),
        (vec![qf(-3, 2), qf(-1, 2)], (&(&x.pow(2) + &(&x * &y).scale(&q(2))) - &y.pow(2)).scale(&qf(1, 64))),
        (vec![qf(-1, 2), qf(-3, 2)], x.pow(2).scale(&qf(1, 32))),
        (qvec(&[1, 2]), Polynomial::zero(2)),
    ];
    for (pt, want) in &chambers {
        let got = m.polynomial_at(pt).map_err(e)?;
        check(got == *want, format!("chamber at {pt:?}: {got:?}"))?;
    }
    Ok("four chamber polynomials exact".into())
}

fn boson_formula(n: usize, at: &Q, deg: u32, c: &Q, shift: i64) -> Polynomial {
    let ni = n as i64;
    let x = var(1, 0);
    let mut acc = Polynomial::zero(1);
    for kk in (-ni..=ni).step_by(2) {
        if *at > q(kk) {
            let j = (ni + kk) / 2;
            let sign = if (j + shift) % 2 == 0 { q(1) } else { q(-1) };
            let coef = sign * Q::from_integer(dhmeasure::exact::binomial(ni, j)) / c;
            acc = &acc + &(&x - &Polynomial::constant(1, q(kk))).pow(deg).scale(&coef);
        }
    }
    acc
}

fn bosons() -> Outcome {
    let start = Instant::now();
    for n in 2..=8usize {
        let p = MarginalProblem::pure(RepSpec::sym(2, n)).in_frame(ReportFrame::Weyl);
        let ab = abelian_measure(&p).map_err(e)?;
        let k = nonabelian_measure(&p).map_err(e)?;
        let c_ab = Q::from_integer(factorial(n - 1) * factorial(n) * (1i64 << n));
        let c_k = Q::from_integer(factorial(n - 2) * factorial(n) * (1i64 << (n - 1)));
        for (cell, d) in ab.complex.cells.iter().zip(&ab.densities) {
            check(*d == boson_formula(n, &cell.interior_point[0], n as u32 - 1, &c_ab, 0), format!("Abelian N={n}"))?;
        }
        for (cell, d) in k.complex.cells.iter().zip(&k.densities) {
            check(
                *d == boson_formula(n, &cell.interior_point[0], n as u32 - 2, &c_k, 1),
                format!("non-Abelian N={n}"),
            )?;
        }
    }
    for n in 2..=6usize {
        let rep = RepSpec::sym(2, n);
        let avg = average_functional(&MarginalProblem::pure(rep.clone()), &purity_polynomial(&rep, 0).map_err(e)?)
            .map_err(e)?;
        let want = qf(1, 2) + qf(1, 2 * n as i64);
        check(avg.direct == want, format!("direct purity N={n}: {}", avg.direct))?;
        check(avg.via_abelian.as_ref() == Some(&want), format!("Abelian-path purity N={n}"))?;
    }
    let t = timed(BOSON_BUDGET, start)?;
    Ok(format!("N ≤ 8 densities exact, purity 1/2 + 1/(2N) by both paths for N ≤ 6; {t:.2?}"))
}

fn check_proportional(m: &PiecewiseMeasure, target: &Polynomial) -> Result<Q, String> {
    let mass = m.total_mass().map_err(e)?;
    let mut target_mass = Q::zero();
    for (c, d) in m.complex.cells.iter().zip(&m.densities) {
        if !d.is_zero() {
            target_mass += c.integrate(target).map_err(e)?;
        }
    }
    check(m.layers.iter().all(|l| l.mass().map(|v| v.is_zero()).unwrap_or(false)), "unexpected layers")?;
    let c = mass / target_mass;
    for d in m.densities.iter().filter(|d| !d.is_zero()) {
        check(*d == target.scale(&c), "density is not proportional")?;
    }
    Ok(c)
}

fn lloyd_pagels() -> Outcome {
    let mut consts = Vec::new();
    for (a, b) in [(2usize, 2usize), (2, 3), (3, 3)] {
        let rep = RepSpec::with_spectator(a, b);
        let p = MarginalProblem::pure(rep.clone());
        let r = a - 1;
        let (ma, mb) = spectra_map(&rep);
        let mut hat: Vec<Polynomial> = (0..r).map(|i| var(r, i)).collect();
        let last = hat.iter().fold(Polynomial::one(r), |acc, y| &acc - y);
        hat.push(last);
        let to_spectra = |m: PiecewiseMeasure| m.affine_pullback(&ma, &mb, Frame::Spectra(rep.group()));
        let ab = to_spectra(abelian_measure(&p).map_err(e)?).map_err(e)?;
        let ab_target = hat.iter().fold(Polynomial::one(r), |acc, l| &acc * &l.pow(b as u32 - 1));
        check_proportional(&ab, &ab_target).map_err(|m| format!("Abelian ({a},{b}): {m}"))?;
        let mut vdm = Polynomial::one(r);
        for j in 0..a {
            for k in j + 1..a {
                vdm = &vdm * &(&hat[j] - &hat[k]);
            }
        }
        let power = hat.iter().fold(Polynomial::one(r), |acc, l| &acc * &l.pow((b - a) as u32));
        let k = to_spectra(nonabelian_measure(&p).map_err(e)?).map_err(e)?;
        let c = check_proportional(&k, &(&power * &vdm)).map_err(|m| format!("non-Abelian ({a},{b}): {m}"))?;
        consts.push(format!("({a},{b}) c={}", dhmeasure::exact::fmt_q(&c)));
    }
    Ok(format!("proportional with unit-mass constants {}", consts.join(", ")))
}

fn kronecker_coefficients() -> Outcome {
    let mut count = 0;
    for n in 1..=6 {
        let ds = YoungDiagram::all(n);
        for a in &ds {
            for b in &ds {
                for c in &ds {
                    let g = kronecker(a, b, c).map_err(e)?;
                    check(g == character_oracle(a, b, c).map_err(e)?, format!("g{a}{b}{c}"))?;
                    count += 1;
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let n = rng.random_range(1..=8);
        let ds = YoungDiagram::all(n);
        let pick = |rng: &mut ChaCha8Rng| ds[rng.random_range(0..ds.len())].clone();
        let (a, b, c) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        check(kronecker(&a, &b, &c).map_err(e)? == character_oracle(&a, &b, &c).map_err(e)?, format!("g{a}{b}{c}"))?;
    }
    for k in 1..=20 {
        let (r, col) = (YoungDiagram::row(k), YoungDiagram::column(k));
        check(kronecker(&r, &r, &r).map_err(e)? == 1, format!("g_(k),(k),(k) at k={k}"))?;
        let zero = u128::from(k == 1);
        check(kronecker(&r, &r, &col).map_err(e)? == zero, format!("g_(k),(k),(1^k) at k={k}"))?;
        check(kronecker(&col, &col, &col).map_err(e)? == zero, format!("g_(1^k)³ at k={k}"))?;
    }
    Ok(format!("{count} exhaustive triples, 200 random, k ≤ 20 identities"))
}

fn plethysm() -> Outcome {
    for k in 1..=10usize {
        let dec = plethysm_decomposition(k, 2).map_err(e)?;
        let want: Vec<(i64, u128)> = (0..=k / 2).rev().map(|j| (2 * k as i64 - 4 * j as i64, 1)).collect();
        check(dec.into_iter().collect::<Vec<_>>() == want, format!("k = {k}"))?;
    }
    Ok("Sym^k(Sym²C²) = ⊕ V_{2k−4j} for k ≤ 10".into())
}

fn cross_algorithm() -> Outcome {
    let systems = [
        RepSpec::tensor(&[2, 2]),
        RepSpec::tensor(&[2, 2, 2]),
        RepSpec::sym(2, 2),
        RepSpec::sym(2, 3),
        RepSpec::sym(2, 5),
        RepSpec::sym(2, 8),
        RepSpec::tensor(&[2, 3]),
    ];
    let mut cells = 0;
    let mut walls = 0;
    for rep in &systems {
        let ws = weights_of(rep).map_err(e)?;
        let frame = ws[0].0.frame.clone();
        let direct = single_summand_density(&ws.iter().map(|(w, _)| w.clone()).collect::<Vec<_>>()).map_err(e)?;
        let list = weight_list(rep).map_err(e)?;
        let heck = heckman_sum(&abelian_heckman_terms(&projective_fixed_points(&list)), frame).map_err(e)?;
        for (c, d) in direct.complex.cells.iter().zip(&direct.densities) {
            let h = heck.polynomial_at(&c.interior_point).map_err(e)?;
            check(h == *d, format!("{rep:?} differs at {:?}", c.interior_point))?;
            cells += 1;
        }
        walls += DensityEngine::projective(list).map_err(e)?.verify_minimal_walls().map_err(e)?;
    }
    Ok(format!("{cells} cells agree; {walls} minimal walls match the residue jump"))
}

fn monte_carlo() -> Outcome {
    let cases = [
        ("two qubits", MarginalProblem::pure(RepSpec::tensor(&[2, 2]))),
        ("three qubits", MarginalProblem::pure(RepSpec::tensor(&[2, 2, 2]))),
        ("bosons N=3", MarginalProblem::pure(RepSpec::sym(2, 3))),
        ("Lloyd–Pagels (2,3)", MarginalProblem::pure(RepSpec::with_spectator(2, 3))),
    ];
    let stat = Statistic::MaxEigenvalue(0);
    let mut report = Vec::new();
    for (i, (name, p)) in cases.iter().enumerate() {
        let m = eigenvalue_distribution(p).map_err(e)?;
        let cdf = exact_cdf(&m, &p.reported_rep().map_err(e)?, &stat).map_err(e)?;
        let batch = sample(p, MC_SAMPLES, 100 + i as u64).map_err(e)?;
        let d = ks_distance(&batch, &cdf, &stat).map_err(e)?;
        let cal = ks_statistic(&sample_exact(&cdf, MC_SAMPLES, 200 + i as u64), |x| cdf.eval(x)).map_err(e)?;
        check(d < KS_LIMIT, format!("{name}: KS {d:.4}"))?;
        check(cal < KS_LIMIT, format!("{name}: calibration KS {cal:.4}"))?;
        report.push(format!("{name} {d:.4}/{cal:.4}"));
    }
    Ok(format!("KS sampled/calibration: {}", report.join(", ")))
}

fn semiclassical() -> Outcome {
    let p = MarginalProblem::pure(RepSpec::sym(2, 2)).in_frame(ReportFrame::Weyl);
    let dh = nonabelian_measure(&p).map_err(e)?;
    let target = dh.integrate(&var(1, 0)).map_err(e)?;
    let mut errors = Vec::new();
    for k in [8usize, 16, 32, 64] {
        let atoms = multiplicity_measure(&p, k).map_err(e)?;
        errors.push((first_moment(&atoms)[0].clone() - &target).abs());
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| dhmeasure::exact::to_f64(&(&w[1] / &w[0]))).collect();
    for r in &ratios {
        check(*r >= RATIO_RANGE.0 && *r <= RATIO_RANGE.1, format!("error ratio {r}"))?;
    }
    check(errors.windows(2).all(|w| w[1] < w[0]), "errors are not decreasing")?;
    let shown: Vec<String> = errors.iter().map(dhmeasure::exact::fmt_q).collect();
    Ok(format!("errors {} with ratios {ratios:?}", shown.join(", ")))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("two-qubit delta layer and 24(s−½)²", two_qubits),
        ("three-qubit pyramids and marginal", three_qubits),
        ("moment polytopes", polytopes),
        ("planar cone density", planar_cone),
        ("bosonic qubits", bosons),
        ("Lloyd–Pagels", lloyd_pagels),
        ("Kronecker coefficients", kronecker_coefficients),
        ("plethysm Sym^k(Sym²)", plethysm),
        ("cross-algorithm equivalence", cross_algorithm),
        ("Monte-Carlo agreement", monte_carlo),
        ("semiclassical first moments", semiclassical),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
