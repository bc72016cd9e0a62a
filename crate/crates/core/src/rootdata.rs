//! Root and weight data for products of special unitary groups.
//!
//! Each `SU(d)` factor uses the fundamental-weight basis: the coordinate `c_i`
//! of a weight is `λ̂_i − λ̂_{i+1}` for its diagonal entries `λ̂`. The positive
//! Weyl chamber is the nonnegative orthant, `ρ = (1,…,1)` and the simple roots are
//! the rows of the Cartan matrix.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{DhError, DhResult};
use crate::exact::{self, factorial, q, QVec, Q};
use crate::polyring::Polynomial;

/// Sizes `(d_1, …, d_N)` of the `SU(d_j)` factors.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupSpec {
    pub factors: Vec<usize>,
}

impl GroupSpec {
    pub fn new(factors: Vec<usize>) -> DhResult<Self> {
        if factors.contains(&0) {
            return Err(DhError::Precondition("every SU(d) factor needs d ≥ 1".into()));
        }
        Ok(GroupSpec { factors })
    }

    pub fn rank(&self) -> usize {
        self.factors.iter().map(|d| d - 1).sum()
    }

    /// Start of each factor's block of coordinates.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.factors
            .iter()
            .map(|d| {
                let o = acc;
                acc += d - 1;
                o
            })
            .collect()
    }

    pub fn num_positive_roots(&self) -> usize {
        self.factors.iter().map(|d| d * (d - 1) / 2).sum()
    }

    pub fn weyl_group_size(&self) -> u64 {
        self.factors.iter().map(|&d| (1..=d as u64).product::<u64>()).product()
    }
}

/// Coordinate frame carried by a `RationalVector`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    /// Fundamental-weight coordinates of a group.
    Lattice(GroupSpec),
    /// Per-subsystem leading eigenvalues `(λ̂_1, …, λ̂_{d−1})`.
    Spectra(GroupSpec),
    /// Any other frame, such as lattice coordinates on a wall.
    Named(String),
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frame::Lattice(g) => write!(f, "lattice{:?}", g.factors),
            Frame::Spectra(g) => write!(f, "spectra{:?}", g.factors),
            Frame::Named(s) => write!(f, "{s}"),
        }
    }
}

/// Exact coordinate tuple tagged with its frame.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalVector {
    pub coords: QVec,
    pub frame: Frame,
}

impl RationalVector {
    pub fn new(coords: QVec, frame: Frame) -> Self {
        RationalVector { coords, frame }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn check_frame(&self, other: &RationalVector) -> DhResult<()> {
        if self.frame != other.frame || self.len() != other.len() {
            return Err(DhError::FrameMismatch(format!("{} vs {}", self.frame, other.frame)));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &RationalVector) -> DhResult<RationalVector> {
        self.check_frame(other)?;
        Ok(RationalVector::new(exact::add(&self.coords, &other.coords), self.frame.clone()))
    }

    pub fn try_sub(&self, other: &RationalVector) -> DhResult<RationalVector> {
        self.check_frame(other)?;
        Ok(RationalVector::new(exact::sub(&self.coords, &other.coords), self.frame.clone()))
    }

    pub fn scaled(&self, c: &Q) -> RationalVector {
        RationalVector::new(exact::scale(&self.coords, c), self.frame.clone())
    }
}

/// Kind of one tensor factor of a representation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorKind {
    /// Defining representation `C^d`.
    Standard,
    /// `Sym^N(C^d)`.
    Sym(usize),
    /// `Λ^N(C^d)`.
    Alt(usize),
    /// Irreducible representation with the given dominant integral highest weight.
    Irreducible(Vec<i64>),
    /// `C^d` with trivial action; contributes multiplicity `d` and no group factor.
    Spectator,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepFactor {
    pub dim: usize,
    pub kind: FactorKind,
}

/// Tensor product of factors, each acted on by its own `SU(d)` unless a spectator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepSpec {
    pub factors: Vec<RepFactor>,
}

impl RepSpec {
    /// `C^{d_1} ⊗ ⋯ ⊗ C^{d_N}` with `SU(d_1) × ⋯ × SU(d_N)` acting.
    pub fn tensor(dims: &[usize]) -> Self {
        RepSpec { factors: dims.iter().map(|&d| RepFactor { dim: d, kind: FactorKind::Standard }).collect() }
    }

    pub fn sym(d: usize, n: usize) -> Self {
        RepSpec { factors: vec![RepFactor { dim: d, kind: FactorKind::Sym(n) }] }
    }

    pub fn alt(d: usize, n: usize) -> Self {
        RepSpec { factors: vec![RepFactor { dim: d, kind: FactorKind::Alt(n) }] }
    }

    pub fn irreducible(d: usize, highest_weight: Vec<i64>) -> Self {
        RepSpec { factors: vec![RepFactor { dim: d, kind: FactorKind::Irreducible(highest_weight) }] }
    }

    /// `C^a ⊗ C^b` with only `SU(a)` acting.
    pub fn with_spectator(a: usize, b: usize) -> Self {
        RepSpec {
            factors: vec![
                RepFactor { dim: a, kind: FactorKind::Standard },
                RepFactor { dim: b, kind: FactorKind::Spectator },
            ],
        }
    }

    pub fn group(&self) -> GroupSpec {
        GroupSpec { factors: self.factors.iter().filter(|f| f.kind != FactorKind::Spectator).map(|f| f.dim).collect() }
    }

    pub fn validate(&self) -> DhResult<()> {
        for f in &self.factors {
            if f.dim == 0 {
                return Err(DhError::Precondition("factor of dimension 0".into()));
            }
            match &f.kind {
                FactorKind::Alt(n) if *n > f.dim => {
                    return Err(DhError::Precondition(format!("Λ^{n}(C^{}) vanishes; need N ≤ d", f.dim)))
                }
                FactorKind::Irreducible(hw)
                    if (hw.len() != f.dim - 1 || hw.iter().any(|&c| c < 0)) => {
                        return Err(DhError::Precondition(format!(
                            "highest weight {hw:?} is not dominant integral for SU({})",
                            f.dim
                        )));
                    }
                _ => {}
            }
        }
        Ok(())
    }

    /// Complex dimension of the representation.
    pub fn dim(&self) -> DhResult<u64> {
        Ok(weights_of(self)?.iter().map(|(_, m)| *m).sum())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootData {
    pub group: GroupSpec,
    pub positive_roots: Vec<RationalVector>,
    pub negative_roots: Vec<RationalVector>,
    pub simple_roots: Vec<QVec>,
    pub rho: RationalVector,
    pub weyl_group_size: u64,
    pub gram: Vec<QVec>,
}

impl RootData {
    pub fn rank(&self) -> usize {
        self.group.rank()
    }

    pub fn frame(&self) -> Frame {
        Frame::Lattice(self.group.clone())
    }

    pub fn pairing(&self, a: &[Q], b: &[Q]) -> Q {
        exact::dot(a, &exact::mat_vec(&self.gram, b))
    }

    pub fn is_dominant(&self, lambda: &[Q]) -> bool {
        lambda.iter().all(|c| c >= &Q::zero())
    }

    pub fn is_strictly_dominant(&self, lambda: &[Q]) -> bool {
        lambda.iter().all(|c| c > &Q::zero())
    }

    /// Simple reflection `s_i(λ) = λ − λ_i α_i`.
    pub fn simple_reflection(&self, i: usize, lambda: &[Q]) -> QVec {
        exact::sub(lambda, &exact::scale(&self.simple_roots[i], &lambda[i]))
    }
}

/// Coordinates of `ε_j` in the fundamental-weight basis of `SU(d)`.
pub fn epsilon(d: usize, j: usize) -> QVec {
    (0..d - 1).map(|i| q((i == j) as i64 - (i + 1 == j) as i64)).collect()
}

/// Fundamental-weight coordinates of a diagonal tuple `λ̂`: `c_i = λ̂_i − λ̂_{i+1}`.
pub fn from_diagonal(diag: &[Q]) -> QVec {
    diag.windows(2).map(|w| &w[0] - &w[1]).collect()
}

/// Diagonal tuple with the given trace for fundamental-weight coordinates `c`.
pub fn to_diagonal(c: &[Q], trace: &Q) -> QVec {
    let d = c.len() + 1;
    let mut tail = vec![Q::zero(); d];
    for i in (0..d - 1).rev() {
        tail[i] = &tail[i + 1] + &c[i];
    }
    let shift = (trace - tail.iter().fold(Q::zero(), |a, b| a + b)) / q(d as i64);
    tail.iter().map(|t| t + &shift).collect()
}

pub fn build_root_data(spec: &GroupSpec) -> RootData {
    let r = spec.rank();
    let frame = Frame::Lattice(spec.clone());
    let mut positive = Vec::new();
    let mut simple = Vec::new();
    let mut gram = vec![vec![Q::zero(); r]; r];
    for (&d, &off) in spec.factors.iter().zip(&spec.offsets()) {
        let embed = |v: QVec| {
            let mut full = exact::zeros(r);
            full[off..off + d - 1].clone_from_slice(&v);
            full
        };
        for j in 0..d {
            for k in j + 1..d {
                positive.push(embed(exact::sub(&epsilon(d, j), &epsilon(d, k))));
            }
        }
        for i in 0..d - 1 {
            simple.push(embed(exact::sub(&epsilon(d, i), &epsilon(d, i + 1))));
            for j in 0..d - 1 {
                let (a, b) = (i.min(j) + 1, i.max(j) + 1);
                gram[off + i][off + j] = Q::new((a * (d - b)).into(), d.into());
            }
        }
    }
    RootData {
        group: spec.clone(),
        negative_roots: positive.iter().map(|a| RationalVector::new(exact::neg(a), frame.clone())).collect(),
        positive_roots: positive.into_iter().map(|a| RationalVector::new(a, frame.clone())).collect(),
        simple_roots: simple,
        rho: RationalVector::new(vec![Q::one(); r], frame),
        weyl_group_size: spec.weyl_group_size(),
        gram,
    }
}

/// Weight system of one factor, with multiplicities.
fn factor_weights(f: &RepFactor) -> DhResult<Vec<(QVec, u64)>> {
    let d = f.dim;
    let from_occupation = |occ: &[i64]| from_diagonal(&occ.iter().map(|&n| q(n)).collect::<Vec<_>>());
    Ok(match &f.kind {
        FactorKind::Standard => (0..d).map(|j| (epsilon(d, j), 1)).collect(),
        FactorKind::Spectator => vec![(vec![], d as u64)],
        FactorKind::Sym(n) => compositions(*n, d).iter().map(|c| (from_occupation(c), 1)).collect(),
        FactorKind::Alt(n) => exact::subsets(d, *n)
            .iter()
            .map(|s| {
                let mut occ = vec![0i64; d];
                s.iter().for_each(|&j| occ[j] = 1);
                (from_occupation(&occ), 1)
            })
            .collect(),
        FactorKind::Irreducible(hw) => {
            let mut part = vec![0i64; d];
            for i in (0..d - 1).rev() {
                part[i] = part[i + 1] + hw[i];
            }
            let n = part.iter().sum::<i64>() as usize;
            let mut out = Vec::new();
            for c in compositions(n, d) {
                let mut sorted = c.clone();
                sorted.sort_unstable_by(|a, b| b.cmp(a));
                let k = kostka(&part, &sorted);
                if k > 0 {
                    out.push((from_occupation(&c), k));
                }
            }
            out
        }
    })
}

/// Full weight system of `rep` in the lattice frame of `rep.group()`, merged and sorted.
pub fn weights_of(rep: &RepSpec) -> DhResult<Vec<(RationalVector, u64)>> {
    rep.validate()?;
    let frame = Frame::Lattice(rep.group());
    let mut acc: Vec<(QVec, u64)> = vec![(vec![], 1)];
    for f in &rep.factors {
        let fw = factor_weights(f)?;
        let mut next = Vec::with_capacity(acc.len() * fw.len());
        for (a, ma) in &acc {
            for (b, mb) in &fw {
                let mut v = a.clone();
                v.extend(b.iter().cloned());
                next.push((v, ma * mb));
            }
        }
        acc = next;
    }
    let mut merged: BTreeMap<QVec, u64> = BTreeMap::new();
    for (v, m) in acc {
        *merged.entry(v).or_insert(0) += m;
    }
    Ok(merged.into_iter().map(|(v, m)| (RationalVector::new(v, frame.clone()), m)).collect())
}

/// Weights repeated according to multiplicity, in the order of `weights_of`.
pub fn weight_list(rep: &RepSpec) -> DhResult<Vec<QVec>> {
    Ok(weights_of(rep)?.into_iter().flat_map(|(w, m)| std::iter::repeat_n(w.coords, m as usize)).collect())
}

/// All `d`-tuples of nonnegative integers summing to `n`, lexicographically decreasing.
pub fn compositions(n: usize, d: usize) -> Vec<Vec<i64>> {
    fn rec(n: usize, d: usize, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if d == 1 {
            prefix.push(n as i64);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=n).rev() {
            prefix.push(k as i64);
            rec(n - k, d - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if d == 0 {
        if n == 0 {
            out.push(vec![]);
        }
        return out;
    }
    rec(n, d, &mut Vec::new(), &mut out);
    out
}

/// Kostka number `K_{λ,μ}`: semistandard tableaux of shape `λ` and content `μ`.
pub fn kostka(lambda: &[i64], mu: &[i64]) -> u64 {
    fn rec(shape: &[i64], mu: &[i64]) -> u64 {
        let Some((&last, rest)) = mu.split_last() else {
            return shape.iter().all(|&p| p == 0) as u64;
        };
        // Remove a horizontal strip of size `last` from `shape`.
        let mut total = 0;
        let mut inner = shape.to_vec();
        fn strips(shape: &[i64], i: usize, left: i64, inner: &mut Vec<i64>, rest: &[i64], total: &mut u64) {
            if i == shape.len() {
                if left == 0 {
                    *total += rec(inner, rest);
                }
                return;
            }
            let lower = if i + 1 < shape.len() { shape[i + 1] } else { 0 };
            let max_take = (shape[i] - lower).min(left);
            for t in 0..=max_take {
                inner[i] = shape[i] - t;
                strips(shape, i + 1, left - t, inner, rest, total);
            }
            inner[i] = shape[i];
        }
        strips(shape, 0, last, &mut inner, rest, &mut total);
        total
    }
    if lambda.iter().sum::<i64>() != mu.iter().sum::<i64>() {
        return 0;
    }
    rec(lambda, mu)
}

/// `p_K(λ) = Π_{α>0} ⟨λ,α⟩ / ⟨ρ,α⟩`.
pub fn volume_polynomial(rd: &RootData) -> Polynomial {
    let r = rd.rank();
    let mut p = Polynomial::one(r);
    for a in &rd.positive_roots {
        let row = exact::mat_vec(&rd.gram, &a.coords);
        let norm = exact::dot(&rd.rho.coords, &row);
        let lin = Polynomial::affine(&exact::scale(&row, &norm.recip()), &Q::zero());
        p = &p * &lin;
    }
    p
}

/// Dimension of the irreducible representation with highest weight `λ` (Weyl formula).
pub fn weyl_dimension(rd: &RootData, lambda: &[Q]) -> Q {
    volume_polynomial(rd).eval(&exact::add(lambda, &rd.rho.coords))
}

fn permutations(d: usize) -> Vec<(Vec<usize>, i8)> {
    fn rec(items: &mut Vec<usize>, k: usize, sign: i8, out: &mut Vec<(Vec<usize>, i8)>) {
        if k == items.len() {
            out.push((items.clone(), sign));
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            rec(items, k + 1, if i == k { sign } else { -sign }, out);
            items.swap(k, i);
        }
    }
    let mut out = Vec::new();
    rec(&mut (0..d).collect(), 0, 1, &mut out);
    out
}

/// Every Weyl group element applied to `λ`, paired with `(−1)^{l(w)}`.
pub fn weyl_images(rd: &RootData, lambda: &[Q]) -> Vec<(QVec, i8)> {
    let mut acc: Vec<(QVec, i8)> = vec![(vec![], 1)];
    for (&d, &off) in rd.group.factors.iter().zip(&rd.group.offsets()) {
        let diag = to_diagonal(&lambda[off..off + d - 1], &Q::zero());
        let perms = permutations(d);
        let mut next = Vec::with_capacity(acc.len() * perms.len());
        for (v, s) in &acc {
            for (p, sp) in &perms {
                let permuted: QVec = p.iter().map(|&i| diag[i].clone()).collect();
                let mut w = v.clone();
                w.extend(from_diagonal(&permuted));
                next.push((w, s * sp));
            }
        }
        acc = next;
    }
    acc
}

/// `Σ_{w∈W} (−1)^{l(w)} δ_{wλ}` with coincident images merged; cancelled images are dropped.
pub fn weyl_orbit_signed(rd: &RootData, lambda: &RationalVector) -> DhResult<Vec<(RationalVector, i8)>> {
    if lambda.frame != rd.frame() {
        return Err(DhError::FrameMismatch(format!("{} vs {}", lambda.frame, rd.frame())));
    }
    let mut merged: BTreeMap<QVec, i64> = BTreeMap::new();
    for (w, s) in weyl_images(rd, &lambda.coords) {
        *merged.entry(w).or_insert(0) += s as i64;
    }
    Ok(merged
        .into_iter()
        .filter(|(_, s)| *s != 0)
        .map(|(w, s)| (RationalVector::new(w, rd.frame()), s.signum() as i8))
        .collect())
}

/// `|W|` as an exact rational.
pub fn weyl_order_q(rd: &RootData) -> Q {
    Q::from_integer(rd.group.factors.iter().map(|&d| factorial(d)).product())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{qf, qvec};

    #[test]
    fn su2_squared_roots() {
        let rd = build_root_data(&GroupSpec::new(vec![2, 2]).unwrap());
        let roots: Vec<QVec> = rd.positive_roots.iter().map(|a| a.coords.clone()).collect();
        assert_eq!(roots, vec![qvec(&[2, 0]), qvec(&[0, 2])]);
        assert_eq!(rd.rho.coords, qvec(&[1, 1]));
    }

    #[test]
    fn su3_roots_and_rho() {
        let rd = build_root_data(&GroupSpec::new(vec![3]).unwrap());
        assert_eq!(rd.positive_roots.len(), 3);
        let sum = rd.positive_roots.iter().fold(exact::zeros(2), |a, r| exact::add(&a, &r.coords));
        assert_eq!(exact::scale(&sum, &qf(1, 2)), rd.rho.coords);
        assert_eq!(rd.simple_roots, vec![qvec(&[2, -1]), qvec(&[-1, 2])]);
    }

    #[test]
    fn weight_systems() {
        let w = weight_list(&RepSpec::sym(2, 3)).unwrap();
        assert_eq!(w, vec![qvec(&[-3]), qvec(&[-1]), qvec(&[1]), qvec(&[3])]);
        let w = weight_list(&RepSpec::tensor(&[2, 2])).unwrap();
        assert_eq!(w.len(), 4);
        assert!(w.contains(&qvec(&[-1, 1])));
        let alt = weight_list(&RepSpec::alt(3, 2)).unwrap();
        assert_eq!(alt.len(), 3);
        assert!(RepSpec::alt(2, 3).validate().is_err());
        let spect = weights_of(&RepSpec::with_spectator(2, 3)).unwrap();
        assert_eq!(spect.iter().map(|(_, m)| *m).collect::<Vec<_>>(), vec![3, 3]);
    }

    #[test]
    fn irreducible_weights_use_kostka_numbers() {
        // Adjoint of SU(3): zero weight with multiplicity 2.
        let w = weights_of(&RepSpec::irreducible(3, vec![1, 1])).unwrap();
        assert_eq!(w.iter().map(|(_, m)| m).sum::<u64>(), 8);
        assert_eq!(w.iter().find(|(v, _)| exact::is_zero_vec(&v.coords)).unwrap().1, 2);
        assert_eq!(kostka(&[2, 1], &[1, 1, 1]), 2);
    }

    #[test]
    fn volume_polynomial_examples() {
        let rd = build_root_data(&GroupSpec::new(vec![2, 2, 2]).unwrap());
        let p = volume_polynomial(&rd);
        let expected = &(&Polynomial::var(3, 0) * &Polynomial::var(3, 1)) * &Polynomial::var(3, 2);
        assert_eq!(p, expected);
        let rd4 = build_root_data(&GroupSpec::new(vec![4]).unwrap());
        let p4 = volume_polynomial(&rd4);
        assert_eq!(p4.eval(&rd4.rho.coords), Q::one());
        let spec = vec![qf(4, 7), qf(2, 7), qf(1, 7), Q::zero()];
        let mut expect = Q::one();
        for j in 0..4 {
            for k in j + 1..4 {
                expect *= (&spec[j] - &spec[k]) / q((k - j) as i64);
            }
        }
        assert_eq!(p4.eval(&from_diagonal(&spec)), expect);
    }

    #[test]
    fn weyl_orbits() {
        let rd2 = build_root_data(&GroupSpec::new(vec![2]).unwrap());
        let o = weyl_orbit_signed(&rd2, &RationalVector::new(qvec(&[3]), rd2.frame())).unwrap();
        assert_eq!(o.len(), 2);
        assert!(o.contains(&(RationalVector::new(qvec(&[3]), rd2.frame()), 1)));
        assert!(o.contains(&(RationalVector::new(qvec(&[-3]), rd2.frame()), -1)));
        let rd4 = build_root_data(&GroupSpec::new(vec![4]).unwrap());
        let generic = from_diagonal(&[qf(4, 7), qf(2, 7), qf(1, 7), Q::zero()]);
        assert_eq!(weyl_orbit_signed(&rd4, &RationalVector::new(generic, rd4.frame())).unwrap().len(), 24);
        let rd3 = build_root_data(&GroupSpec::new(vec![3]).unwrap());
        let o = weyl_orbit_signed(&rd3, &rd3.rho).unwrap();
        assert_eq!(o.len(), 6);
        assert_eq!(o.iter().map(|(_, s)| *s as i64).sum::<i64>(), 0);
    }

    #[test]
    fn diagonal_round_trip() {
        let c = qvec(&[1, 0, 2]);
        let diag = to_diagonal(&c, &Q::one());
        assert_eq!(diag.iter().fold(Q::zero(), |a, b| a + b), Q::one());
        assert_eq!(from_diagonal(&diag), c);
    }
}
