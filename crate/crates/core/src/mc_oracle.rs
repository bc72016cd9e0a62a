//! Monte-Carlo oracle: random states, marginal spectra by partial trace, and
//! Kolmogorov–Smirnov comparison against exact one-dimensional laws.
//!
//! Streams come from `ChaCha8Rng::seed_from_u64(seed)`, so a batch is a pure function of
//! `(problem, count, seed)`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::chambers::Cell;
use crate::error::{DhError, DhResult};
use crate::exact::{self, to_f64, QVec, Q};
use crate::measure_engine::PiecewiseMeasure;
use crate::qmarginal::{GlobalState, MarginalProblem};
use crate::rootdata::{compositions, FactorKind, Frame, RepSpec};

/// Largest global Hilbert space sampled.
pub const MAX_SAMPLE_DIM: usize = 4096;

/// Sorted marginal spectra of independent random states.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub problem: MarginalProblem,
    pub seed: u64,
    pub count: usize,
    /// `samples[i][j]` is the nonincreasing spectrum of subsystem `j` in draw `i`.
    pub samples: Vec<Vec<Vec<f64>>>,
}

impl SampleBatch {
    /// One row per draw: all subsystem spectra, concatenated.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            let row: Vec<String> = s.iter().flatten().map(|x| format!("{x:.12e}")).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Placement of one representation factor inside the tensor space that is traced.
struct Slots {
    dim: usize,
    /// Tensor slots occupied; the first one is reported unless the factor is a spectator.
    count: usize,
    reported: bool,
    /// Basis vector `b` of the factor as a combination of slot tuples.
    expansion: Vec<Vec<(Vec<usize>, f64)>>,
}

fn factor_slots(kind: &FactorKind, d: usize) -> DhResult<Slots> {
    let tuples = |n: usize| -> Vec<Vec<usize>> {
        (0..d.pow(n as u32))
            .map(|mut x| {
                let mut t = vec![0; n];
                for s in t.iter_mut().rev() {
                    *s = x % d;
                    x /= d;
                }
                t
            })
            .collect()
    };
    Ok(match kind {
        FactorKind::Standard | FactorKind::Spectator => Slots {
            dim: d,
            count: 1,
            reported: *kind == FactorKind::Standard,
            expansion: (0..d).map(|j| vec![(vec![j], 1.0)]).collect(),
        },
        FactorKind::Sym(n) => {
            // Occupation basis |m⟩ ↦ multinomial(n; m)^{-1/2} Σ_{tuples with occupation m} |t⟩
            let all = tuples(*n);
            let expansion = compositions(*n, d)
                .iter()
                .map(|occ| {
                    let hits: Vec<Vec<usize>> = all.iter().filter(|t| occupation(t, d) == *occ).cloned().collect();
                    let a = 1.0 / (hits.len() as f64).sqrt();
                    hits.into_iter().map(|t| (t, a)).collect()
                })
                .collect();
            Slots { dim: d, count: *n, reported: true, expansion }
        }
        FactorKind::Alt(n) => {
            let all = tuples(*n);
            let norm = 1.0 / (1..=*n).map(|i| i as f64).product::<f64>().sqrt();
            let expansion = exact::subsets(d, *n)
                .iter()
                .map(|set| {
                    all.iter()
                        .filter(|t| {
                            let mut s = (*t).clone();
                            s.sort_unstable();
                            s == *set
                        })
                        .map(|t| (t.clone(), norm * permutation_sign(t)))
                        .collect()
                })
                .collect();
            Slots { dim: d, count: *n, reported: true, expansion }
        }
        FactorKind::Irreducible(_) => {
            return Err(DhError::Precondition("sampling supports standard, symmetric and antisymmetric factors".into()))
        }
    })
}

fn occupation(t: &[usize], d: usize) -> Vec<i64> {
    let mut occ = vec![0i64; d];
    t.iter().for_each(|&i| occ[i] += 1);
    occ
}

fn permutation_sign(t: &[usize]) -> f64 {
    let inv = (0..t.len()).flat_map(|a| (a + 1..t.len()).map(move |b| (a, b))).filter(|&(a, b)| t[a] > t[b]).count();
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Isometry from the representation space into a tensor product of slots.
struct Embedding {
    slot_dims: Vec<usize>,
    /// Reported slots, followed by an optional extra purifying index.
    reported: Vec<usize>,
    /// Column `b` lists `(tensor index, amplitude)`.
    columns: Vec<Vec<(usize, f64)>>,
}

impl Embedding {
    fn new(rep: &RepSpec) -> DhResult<Self> {
        let slots: Vec<Slots> = rep.factors.iter().map(|f| factor_slots(&f.kind, f.dim)).collect::<DhResult<_>>()?;
        let mut slot_dims = Vec::new();
        let mut reported = Vec::new();
        for s in &slots {
            if s.reported {
                reported.push(slot_dims.len());
            }
            slot_dims.extend(std::iter::repeat_n(s.dim, s.count));
        }
        let total: usize = slot_dims.iter().product();
        if total > MAX_SAMPLE_DIM {
            return Err(DhError::ScaleGuard(format!("tensor space of dimension {total} exceeds {MAX_SAMPLE_DIM}")));
        }
        let mut columns: Vec<Vec<(Vec<usize>, f64)>> = vec![vec![(vec![], 1.0)]];
        for s in &slots {
            let mut next = Vec::with_capacity(columns.len() * s.expansion.len());
            for c in &columns {
                for e in &s.expansion {
                    let mut col = Vec::with_capacity(c.len() * e.len());
                    for (t1, a1) in c {
                        for (t2, a2) in e {
                            col.push(([t1.as_slice(), t2].concat(), a1 * a2));
                        }
                    }
                    next.push(col);
                }
            }
            columns = next;
        }
        let columns = columns
            .into_iter()
            .map(|col| {
                col.into_iter().map(|(t, a)| (t.iter().zip(&slot_dims).fold(0, |acc, (i, d)| acc * d + i), a)).collect()
            })
            .collect();
        Ok(Embedding { slot_dims, reported, columns })
    }

    fn embed(&self, psi: &DVector<Complex64>) -> DVector<Complex64> {
        let mut out = DVector::zeros(self.slot_dims.iter().product());
        for (b, col) in self.columns.iter().enumerate() {
            for &(idx, a) in col {
                out[idx] += psi[b] * a;
            }
        }
        out
    }

    /// Reduced density matrix of slot `s` for `Σ_k v_k v_k^†`.
    fn marginal(&self, vectors: &[DVector<Complex64>], s: usize) -> DMatrix<Complex64> {
        let d = self.slot_dims[s];
        let inner: usize = self.slot_dims[s + 1..].iter().product();
        let outer: usize = self.slot_dims[..s].iter().product();
        let mut rho = DMatrix::zeros(d, d);
        for v in vectors {
            for o in 0..outer {
                for i in 0..inner {
                    for a in 0..d {
                        let va = v[(o * d + a) * inner + i];
                        if va == Complex64::zero() {
                            continue;
                        }
                        for b in 0..d {
                            rho[(a, b)] += va * v[(o * d + b) * inner + i].conj();
                        }
                    }
                }
            }
        }
        rho
    }
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases of `R` removed.
pub fn haar_unitary(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let qr = g.qr();
    let (mut qm, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::one() };
        for i in 0..n {
            qm[(i, j)] *= phase;
        }
    }
    qm
}

/// Eigenvalues of a Hermitian matrix, nonincreasing.
pub fn hermitian_spectrum(m: DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Draws `count` states for `problem` and records the marginal spectra of its reported subsystems.
pub fn sample(problem: &MarginalProblem, count: usize, seed: u64) -> DhResult<SampleBatch> {
    let emb = Embedding::new(&problem.rep)?;
    let h = emb.columns.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        // Columns v_k with ρ = Σ v_k v_k^† on the representation space.
        let cols: Vec<DVector<Complex64>> = match &problem.global {
            GlobalState::Pure => {
                let v = gaussian_vector(&mut rng, h);
                let n = v.norm();
                vec![v / Complex64::new(n, 0.0)]
            }
            GlobalState::Orbit(s) | GlobalState::PurifiedDouble { slice: Some(s) } => {
                if s.len() != h {
                    return Err(DhError::Precondition(format!("spectrum of length {} for dimension {h}", s.len())));
                }
                let u = haar_unitary(&mut rng, h);
                (0..h).map(|k| u.column(k).into_owned() * Complex64::new(to_f64(&s[k]).sqrt(), 0.0)).collect()
            }
            GlobalState::PurifiedDouble { slice: None } => {
                let g = DMatrix::from_fn(h, h, |_, _| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                });
                let n = g.norm();
                (0..h).map(|k| g.column(k).into_owned() / Complex64::new(n, 0.0)).collect()
            }
        };
        let embedded: Vec<DVector<Complex64>> = cols.iter().map(|c| emb.embed(c)).collect();
        let mut spectra: Vec<Vec<f64>> =
            emb.reported.iter().map(|&s| hermitian_spectrum(emb.marginal(&embedded, s))).collect();
        if matches!(problem.global, GlobalState::PurifiedDouble { slice: None }) {
            // The purifying system sees the spectrum of ρ itself.
            let gram = DMatrix::from_fn(h, h, |i, j| cols[j].dotc(&cols[i]));
            spectra.push(hermitian_spectrum(gram));
        }
        samples.push(spectra);
    }
    Ok(SampleBatch { problem: problem.clone(), seed, count, samples })
}

/// Scalar statistic of the marginal spectra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// Largest eigenvalue of subsystem `j`.
    MaxEigenvalue(usize),
    /// `tr ρ_j²` of a two-dimensional subsystem.
    Purity(usize),
    /// `coeffs · y + constant` in the spectra frame `y`.
    Linear { coeffs: Vec<String>, constant: String },
}

impl Statistic {
    fn linear_part(&self, dims: &[usize]) -> DhResult<(QVec, Q)> {
        let r: usize = dims.iter().map(|d| d - 1).sum();
        let offset = |j: usize| -> DhResult<usize> {
            if j >= dims.len() {
                return Err(DhError::Precondition(format!("no subsystem {j}")));
            }
            Ok(dims[..j].iter().map(|d| d - 1).sum())
        };
        match self {
            Statistic::MaxEigenvalue(j) | Statistic::Purity(j) => {
                if let Statistic::Purity(_) = self {
                    if dims[*j] != 2 {
                        return Err(DhError::Precondition("purity laws are available for qubit subsystems".into()));
                    }
                }
                Ok((exact::unit(r, offset(*j)?), Q::zero()))
            }
            Statistic::Linear { coeffs, constant } => {
                let c: QVec = coeffs.iter().map(|s| exact::parse_q(s)).collect::<DhResult<_>>()?;
                if c.len() != r {
                    return Err(DhError::FrameMismatch(format!("{} coefficients for {r} coordinates", c.len())));
                }
                Ok((c, exact::parse_q(constant)?))
            }
        }
    }

    /// Value on one draw.
    pub fn value(&self, spectra: &[Vec<f64>]) -> DhResult<f64> {
        Ok(match self {
            Statistic::MaxEigenvalue(j) => {
                spectra.get(*j).ok_or_else(|| DhError::Precondition(format!("no subsystem {j}")))?[0]
            }
            Statistic::Purity(j) => spectra
                .get(*j)
                .ok_or_else(|| DhError::Precondition(format!("no subsystem {j}")))?
                .iter()
                .map(|x| x * x)
                .sum(),
            Statistic::Linear { coeffs, constant } => {
                let y: Vec<f64> = spectra.iter().flat_map(|s| s[..s.len() - 1].iter().copied()).collect();
                let c: Vec<f64> =
                    coeffs.iter().map(|s| exact::parse_q(s).map(|v| to_f64(&v))).collect::<DhResult<_>>()?;
                c.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() + to_f64(&exact::parse_q(constant)?)
            }
        })
    }
}

/// Exact CDF of a linear statistic: a polynomial in `t` between consecutive breakpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactCdf {
    pub breakpoints: Vec<Q>,
    /// Coefficients of `F` on `[breakpoints[i], breakpoints[i+1]]` in powers of `t − breakpoints[i]`.
    pub pieces: Vec<Vec<Q>>,
    pub total: Q,
    purity: bool,
}

/// Mass of `{coeffs · y + c ≤ t}` under `m`.
fn mass_below(m: &PiecewiseMeasure, coeffs: &[Q], c: &Q, t: &Q) -> DhResult<Q> {
    let bound = t - c;
    let mut total = Q::zero();
    for (cell, d) in m.complex.cells.iter().zip(&m.densities) {
        if let (Some(lo), _) = cell.split(coeffs, &bound, None) {
            total += lo.integrate(d)?;
        }
    }
    for l in &m.layers {
        let normal: QVec = l.frame.basis.iter().map(|b| exact::dot(coeffs, b)).collect();
        let shifted = &bound - exact::dot(coeffs, &l.frame.origin);
        for (cell, d) in l.cells.iter().zip(&l.densities) {
            if let (Some(lo), _) = cell.split(&normal, &shifted, None) {
                total += lo.integrate(d)?;
            }
        }
    }
    Ok(total)
}

fn stat_range(cells: &[&Cell], f: impl Fn(&QVec) -> Q, out: &mut Vec<Q>) {
    for c in cells {
        out.extend(c.vertices.iter().map(&f));
    }
}

/// Exact CDF of `stat` under a law in the spectra frame of `rep`.
pub fn exact_cdf(m: &PiecewiseMeasure, rep: &RepSpec, stat: &Statistic) -> DhResult<ExactCdf> {
    let dims: Vec<usize> = match &m.frame {
        Frame::Spectra(g) => g.factors.clone(),
        other => return Err(DhError::FrameMismatch(format!("exact CDFs need the spectra frame, got {other}"))),
    };
    if dims != rep.group().factors {
        return Err(DhError::FrameMismatch("measure and representation disagree".into()));
    }
    let (coeffs, c) = stat.linear_part(&dims)?;
    let mut bps = Vec::new();
    let cells: Vec<&Cell> = m.complex.cells.iter().collect();
    stat_range(&cells, |v| exact::dot(&coeffs, v) + &c, &mut bps);
    for l in &m.layers {
        let lc: Vec<&Cell> = l.cells.iter().collect();
        stat_range(&lc, |w| exact::dot(&coeffs, &l.frame.embed(w)) + &c, &mut bps);
    }
    bps.sort();
    bps.dedup();
    if bps.is_empty() {
        return Err(DhError::Precondition("measure has no support".into()));
    }
    let dim = m.dim();
    let layer_degree = m.layers.iter().flat_map(|l| l.densities.iter().filter_map(|d| d.degree())).max();
    let degree = m.max_degree().max(layer_degree).unwrap_or(0) as usize + dim;
    let mut pieces = Vec::new();
    for w in bps.windows(2) {
        // F is a polynomial of degree ≤ deg + dim on each piece; recover it by interpolation.
        let (a, b) = (&w[0], &w[1]);
        let nodes: Vec<Q> =
            (0..=degree).map(|i| (b - a) * Q::new((i as i64 + 1).into(), (degree as i64 + 2).into())).collect();
        let values: Vec<Q> = nodes.iter().map(|s| mass_below(m, &coeffs, &c, &(a + s))).collect::<DhResult<_>>()?;
        pieces.push(newton_to_monomial(&nodes, &values));
    }
    let total = m.total_mass()?;
    Ok(ExactCdf { breakpoints: bps, pieces, total, purity: matches!(stat, Statistic::Purity(_)) })
}

/// Monomial coefficients of the interpolating polynomial through `(x_i, y_i)`.
fn newton_to_monomial(x: &[Q], y: &[Q]) -> Vec<Q> {
    let n = x.len();
    let mut dd = y.to_vec();
    for j in 1..n {
        for i in (j..n).rev() {
            dd[i] = (&dd[i] - &dd[i - 1]) / (&x[i] - &x[i - j]);
        }
    }
    let mut coef = vec![Q::zero(); n];
    for i in (0..n).rev() {
        // coef ← coef · (t − x_i) + dd_i
        let mut next = vec![Q::zero(); n];
        for k in 0..n {
            if coef[k].is_zero() {
                continue;
            }
            if k + 1 < n {
                next[k + 1] += &coef[k];
            }
            next[k] -= &coef[k] * &x[i];
        }
        next[0] += &dd[i];
        coef = next;
    }
    coef
}

impl ExactCdf {
    /// `F(t)` with exact piece selection and floating-point evaluation.
    pub fn eval_linear(&self, t: f64) -> f64 {
        let first = to_f64(&self.breakpoints[0]);
        let last = to_f64(self.breakpoints.last().unwrap());
        if t < first {
            return 0.0;
        }
        if t >= last || self.pieces.is_empty() {
            return to_f64(&self.total);
        }
        let i = self.breakpoints.partition_point(|b| to_f64(b) <= t).saturating_sub(1).min(self.pieces.len() - 1);
        let s = t - to_f64(&self.breakpoints[i]);
        self.pieces[i].iter().rev().fold(0.0, |acc, c| acc * s + to_f64(c))
    }

    /// CDF of the statistic itself; for purity the qubit law is pulled back from `λ̂_max`.
    pub fn eval(&self, x: f64) -> f64 {
        let v = if self.purity {
            // tr ρ² = 1 − 2 λ (1 − λ) with λ ≥ 1/2
            (1.0 + (2.0 * x - 1.0).max(0.0).sqrt()) / 2.0
        } else {
            x
        };
        self.eval_linear(v) / to_f64(&self.total)
    }

    /// Exact `F(t)` at a rational point.
    pub fn eval_exact(&self, t: &Q) -> Q {
        if t < &self.breakpoints[0] {
            return Q::zero();
        }
        if t >= self.breakpoints.last().unwrap() || self.pieces.is_empty() {
            return self.total.clone();
        }
        let i = self.breakpoints.partition_point(|b| b <= t).saturating_sub(1).min(self.pieces.len() - 1);
        let s = t - &self.breakpoints[i];
        self.pieces[i].iter().rev().fold(Q::zero(), |acc, c| acc * &s + c)
    }

    /// Support of the statistic.
    pub fn range(&self) -> (f64, f64) {
        let (a, b) = (to_f64(&self.breakpoints[0]), to_f64(self.breakpoints.last().unwrap()));
        if self.purity {
            (1.0 - 2.0 * a * (1.0 - a), 1.0 - 2.0 * b * (1.0 - b))
        } else {
            (a, b)
        }
    }
}

/// Kolmogorov–Smirnov distance between sample values and a CDF.
pub fn ks_statistic(values: &[f64], cdf: impl Fn(f64) -> f64) -> DhResult<f64> {
    if values.is_empty() {
        return Err(DhError::Precondition("empty batch".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    Ok(v.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    }))
}

/// KS distance between a batch and the exact law of `stat`.
pub fn ks_distance(batch: &SampleBatch, exact: &ExactCdf, stat: &Statistic) -> DhResult<f64> {
    let values: Vec<f64> = batch.samples.iter().map(|s| stat.value(s)).collect::<DhResult<_>>()?;
    ks_statistic(&values, |x| exact.eval(x))
}

/// Draws from the exact law by inverting the CDF, for calibrating the KS threshold.
pub fn sample_exact(exact: &ExactCdf, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (to_f64(&exact.breakpoints[0]), to_f64(exact.breakpoints.last().unwrap()));
    let total = to_f64(&exact.total);
    (0..count)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * total;
            let (mut a, mut b) = (lo, hi);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if exact.eval_linear(mid) < u {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let v = 0.5 * (a + b);
            if exact.purity {
                1.0 - 2.0 * v * (1.0 - v)
            } else {
                v
            }
        })
        .collect()
}

/// Histogram of a statistic for plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Histogram {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in values {
        let i = (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        counts[i] += 1;
    }
    Histogram { edges: (0..=bins).map(|i| lo + width * i as f64).collect(), counts }
}

/// Sample mean and its standard error.
pub fn mean_and_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
