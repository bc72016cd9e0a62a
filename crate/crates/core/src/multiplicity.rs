//! Weight multiplicities as lattice-point counts, Steinberg finite differences,
//! Kronecker and plethysm coefficients, and discrete multiplicity measures.
//!
//! Counts are exact `u128`; alternating sums are carried in `i128`.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{DhError, DhResult};
use crate::exact::{q, QVec, Q};
use crate::qmarginal::{GlobalState, MarginalProblem};
use crate::rootdata::{build_root_data, weights_of, FactorKind, RationalVector, RepSpec, RootData};

/// Work limit for one multiplicity measure: candidate points times difference terms.
pub const MEASURE_BUDGET: u64 = 5_000_000;
/// Largest symmetric group handled by the character oracle.
pub const ORACLE_MAX_BOXES: usize = 10;

/// Partition with its zero parts stripped.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct YoungDiagram {
    parts: Vec<usize>,
}

impl YoungDiagram {
    pub fn new(mut parts: Vec<usize>) -> DhResult<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(DhError::Precondition(format!("parts {parts:?} are not weakly decreasing")));
        }
        while parts.last() == Some(&0) {
            parts.pop();
        }
        Ok(YoungDiagram { parts })
    }

    /// Parses a comma-separated part list such as `"3,1,1"`; the empty string is `()`.
    pub fn parse(s: &str) -> DhResult<Self> {
        let t = s.trim();
        if t.is_empty() {
            return YoungDiagram::new(vec![]);
        }
        let parts = t
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| DhError::Parse(format!("bad part {p:?} in {s:?}"))))
            .collect::<DhResult<Vec<_>>>()?;
        YoungDiagram::new(parts)
    }

    pub fn row(k: usize) -> Self {
        YoungDiagram { parts: if k == 0 { vec![] } else { vec![k] } }
    }

    pub fn column(k: usize) -> Self {
        YoungDiagram { parts: vec![1; k] }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn boxes(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn height(&self) -> usize {
        self.parts.len()
    }

    pub fn conjugate(&self) -> Self {
        let w = self.parts.first().copied().unwrap_or(0);
        YoungDiagram { parts: (0..w).map(|j| self.parts.iter().filter(|&&p| p > j).count()).collect() }
    }

    /// Parts padded with zeros to length `h`.
    pub fn padded(&self, h: usize) -> Vec<i64> {
        (0..h).map(|i| self.parts.get(i).copied().unwrap_or(0) as i64).collect()
    }

    /// All partitions of `n` in reverse lexicographic order.
    pub fn all(n: usize) -> Vec<Self> {
        partitions(n, n).into_iter().map(|parts| YoungDiagram { parts }).collect()
    }

    /// Partitions of `n` with at most `h` rows.
    pub fn with_height(n: usize, h: usize) -> Vec<Self> {
        YoungDiagram::all(n).into_iter().filter(|y| y.height() <= h).collect()
    }
}

impl fmt::Display for YoungDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

fn partitions(n: usize, max: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in (1..=n.min(max)).rev() {
        for mut rest in partitions(n - first, first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn binom_u128(n: u64, k: u64) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

enum Source {
    /// Distinct weights with their multiplicities and, per suffix, coordinatewise bounds.
    Monomials {
        weights: Vec<(Vec<i64>, u64)>,
        lo: Vec<Vec<i64>>,
        hi: Vec<Vec<i64>>,
    },
    Table(HashMap<Vec<i64>, u128>),
}

/// `(next weight index, remaining degree, remaining weight)` of the monomial count.
type CountKey = (usize, usize, Vec<i64>);

/// `λ ↦ m_{T,k}(λ)` for a fixed degree `k`, evaluated lazily with a memo.
pub struct WeightMultiplicityFn {
    source: Source,
    degree: usize,
    dim: usize,
    memo: RefCell<HashMap<CountKey, u128>>,
}

impl WeightMultiplicityFn {
    /// Weights of `Sym^k` of a space with the given weight system (integral coordinates).
    pub fn from_weights(weights: Vec<(Vec<i64>, u64)>, degree: usize) -> DhResult<Self> {
        let dim = weights.first().map_or(0, |(w, _)| w.len());
        if weights.iter().any(|(w, _)| w.len() != dim) {
            return Err(DhError::Precondition("weights of unequal length".into()));
        }
        let n = weights.len();
        let mut lo = vec![vec![i64::MAX; dim]; n + 1];
        let mut hi = vec![vec![i64::MIN; dim]; n + 1];
        for i in (0..n).rev() {
            for c in 0..dim {
                lo[i][c] = lo[i + 1][c].min(weights[i].0[c]);
                hi[i][c] = hi[i + 1][c].max(weights[i].0[c]);
            }
        }
        Ok(WeightMultiplicityFn {
            source: Source::Monomials { weights, lo, hi },
            degree,
            dim,
            memo: RefCell::default(),
        })
    }

    /// `Sym^k(V)` for a representation in its lattice frame.
    pub fn for_rep(rep: &RepSpec, degree: usize) -> DhResult<Self> {
        let ws =
            weights_of(rep)?.into_iter().map(|(w, m)| Ok((integral(&w.coords)?, m))).collect::<DhResult<Vec<_>>>()?;
        WeightMultiplicityFn::from_weights(ws, degree)
    }

    /// `Sym^k(C^{d_1} ⊗ ⋯ ⊗ C^{d_N})` in concatenated diagonal (GL) coordinates.
    pub fn gl_tensor(dims: &[usize], degree: usize) -> DhResult<Self> {
        let total: usize = dims.iter().sum();
        let mut ws: Vec<Vec<i64>> = vec![vec![]];
        let mut off = 0;
        for &d in dims {
            ws = ws
                .into_iter()
                .flat_map(|w| {
                    (0..d).map(move |j| {
                        let mut v = if w.is_empty() { vec![0; total] } else { w.clone() };
                        v[off + j] = 1;
                        v
                    })
                })
                .collect();
            off += d;
        }
        WeightMultiplicityFn::from_weights(ws.into_iter().map(|w| (w, 1)).collect(), degree)
    }

    /// Explicit table, for weight data known in closed form.
    pub fn from_table(table: HashMap<Vec<i64>, u128>, dim: usize, degree: usize) -> Self {
        WeightMultiplicityFn { source: Source::Table(table), degree, dim, memo: RefCell::default() }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of degree-`k` monomials of weight `λ`.
    pub fn at(&self, lambda: &[i64]) -> u128 {
        match &self.source {
            Source::Table(t) => t.get(lambda).copied().unwrap_or(0),
            Source::Monomials { .. } => {
                if lambda.len() != self.dim {
                    return 0;
                }
                self.count(0, self.degree, lambda.to_vec())
            }
        }
    }

    fn count(&self, mut i: usize, mut k: usize, mut rest: Vec<i64>) -> u128 {
        let Source::Monomials { weights, lo, hi } = &self.source else { unreachable!() };
        // Forced exponents are applied in place; only branching states are memoized.
        let mut factor = 1u128;
        let (t_lo, t_hi) = loop {
            if i == weights.len() {
                return factor * u128::from(k == 0 && rest.iter().all(|&x| x == 0));
            }
            // The remaining k weights are drawn from the suffix, so rest lies in k times its box.
            let kk = k as i64;
            if (0..self.dim).any(|c| rest[c] < kk * lo[i][c] || rest[c] > kk * hi[i][c]) {
                return 0;
            }
            let (a, b) = self.t_range(i, k, &rest);
            if a > b {
                return 0;
            }
            if a < b {
                break (a, b);
            }
            let (w, m) = &weights[i];
            factor *= binom_u128(a as u64 + m - 1, m - 1);
            rest.iter_mut().zip(w).for_each(|(x, y)| *x -= a * y);
            k -= a as usize;
            i += 1;
        };
        let key = (i, k, rest);
        if let Some(&v) = self.memo.borrow().get(&key) {
            return factor * v;
        }
        let (w, m) = &weights[i];
        let mut total = 0u128;
        let mut cur: Vec<i64> = key.2.iter().zip(w).map(|(a, b)| a - t_lo * b).collect();
        for t in t_lo..=t_hi {
            let ways = binom_u128(t as u64 + m - 1, m - 1);
            total += ways * self.count(i + 1, k - t as usize, cur.clone());
            cur.iter_mut().zip(w).for_each(|(a, b)| *a -= b);
        }
        self.memo.borrow_mut().insert(key, total);
        factor * total
    }
}

impl WeightMultiplicityFn {
    /// Exponents `t` of weight `i` for which the rest still fits in the suffix box.
    fn t_range(&self, i: usize, k: usize, rest: &[i64]) -> (i64, i64) {
        let Source::Monomials { weights, lo, hi } = &self.source else { unreachable!() };
        let kk = k as i64;
        if i + 1 == weights.len() {
            return (kk, kk);
        }
        let w = &weights[i].0;
        let (mut a, mut b) = (0i64, kk);
        // rest − t·w ∈ (k − t)·[lo, hi], each side linear in t
        for c in 0..self.dim {
            for (alpha, beta) in
                [(rest[c] - kk * lo[i + 1][c], lo[i + 1][c] - w[c]), (kk * hi[i + 1][c] - rest[c], w[c] - hi[i + 1][c])]
            {
                match beta.cmp(&0) {
                    std::cmp::Ordering::Greater => {
                        a = a.max((-alpha).div_euclid(beta) + i64::from((-alpha).rem_euclid(beta) != 0))
                    }
                    std::cmp::Ordering::Less => b = b.min(alpha.div_euclid(-beta)),
                    std::cmp::Ordering::Equal if alpha < 0 => return (1, 0),
                    _ => {}
                }
            }
        }
        (a, b)
    }
}

fn integral(v: &[Q]) -> DhResult<Vec<i64>> {
    v.iter()
        .map(|x| {
            if x.is_integer() {
                x.to_integer().to_i64().ok_or_else(|| DhError::ScaleGuard("coordinate exceeds 64 bits".into()))
            } else {
                Err(DhError::Precondition(format!("coordinate {x} is not integral")))
            }
        })
        .collect()
}

/// Coefficients of `∏_{α>0} (1 − e^α)`, aggregated by shift.
pub fn steinberg_shifts(rd: &RootData) -> DhResult<Vec<(Vec<i64>, i128)>> {
    let mut acc: BTreeMap<Vec<i64>, i128> = BTreeMap::new();
    acc.insert(vec![0; rd.rank()], 1);
    for a in &rd.positive_roots {
        let a = integral(&a.coords)?;
        let mut next = acc.clone();
        for (s, c) in &acc {
            let shifted: Vec<i64> = s.iter().zip(&a).map(|(x, y)| x + y).collect();
            *next.entry(shifted).or_insert(0) -= c;
        }
        next.retain(|_, c| *c != 0);
        acc = next;
    }
    Ok(acc.into_iter().collect())
}

/// `m_K(λ) = Σ_{S ⊆ Δ⁺} (−1)^{|S|} m_T(λ + Σ_{α∈S} α)` for dominant integral `λ`.
pub fn steinberg_multiplicity(m: &WeightMultiplicityFn, rd: &RootData, lambda: &[i64]) -> DhResult<i128> {
    if lambda.len() != rd.rank() {
        return Err(DhError::Precondition(format!("weight of length {} for rank {}", lambda.len(), rd.rank())));
    }
    if lambda.iter().any(|&c| c < 0) {
        return Err(DhError::Precondition(format!("{lambda:?} is not dominant")));
    }
    Ok(apply_shifts(m, &steinberg_shifts(rd)?, lambda))
}

fn apply_shifts(m: &WeightMultiplicityFn, shifts: &[(Vec<i64>, i128)], lambda: &[i64]) -> i128 {
    shifts
        .iter()
        .map(|(s, c)| {
            let at: Vec<i64> = lambda.iter().zip(s).map(|(x, y)| x + y).collect();
            c * m.at(&at) as i128
        })
        .sum()
}

/// Signed shifts `ρ − wρ` of one `GL(d)` factor, keeping only those with `λ + shift ≥ 0`.
///
/// Summed over `w`, these are the terms of `∏_{i<j} (1 − e^{ε_i − ε_j})`.
fn gl_shifts(lambda: &[i64]) -> Vec<(Vec<i64>, i128)> {
    let d = lambda.len();
    // Value j fits at position i iff λ_i − i + j ≥ 0; those positions form a prefix of length reach[j].
    let reach: Vec<usize> = (0..d).map(|j| (0..d).filter(|&i| lambda[i] - i as i64 + j as i64 >= 0).count()).collect();
    let mut out = Vec::new();
    let mut used = vec![false; d];
    let mut perm = Vec::with_capacity(d);
    fn completable(reach: &[usize], used: &[bool], filled: usize) -> bool {
        // Hall's condition for nested position sets.
        let mut by_reach = vec![0usize; reach.len() + 1];
        for (j, &r) in reach.iter().enumerate() {
            if !used[j] {
                by_reach[r] += 1;
            }
        }
        let mut pending = 0;
        for (p, &c) in by_reach.iter().enumerate() {
            pending += c;
            if pending > p.saturating_sub(filled) {
                return false;
            }
        }
        true
    }
    fn rec(reach: &[usize], used: &mut [bool], perm: &mut Vec<usize>, sign: i128, out: &mut Vec<(Vec<i64>, i128)>) {
        let d = reach.len();
        let i = perm.len();
        if i == d {
            out.push(((0..d).map(|a| perm[a] as i64 - a as i64).collect(), sign));
            return;
        }
        for j in 0..d {
            if !used[j] && reach[j] > i {
                used[j] = true;
                if completable(reach, used, i + 1) {
                    // Placing j after the values already used adds one inversion per larger one.
                    let larger = (j + 1..d).filter(|&x| used[x] && perm.contains(&x)).count();
                    perm.push(j);
                    rec(reach, used, perm, if larger % 2 == 0 { sign } else { -sign }, out);
                    perm.pop();
                }
                used[j] = false;
            }
        }
    }
    rec(&reach, &mut used, &mut perm, 1, &mut out);
    out
}

/// Multiplicity of `S_{λ_1} ⊗ ⋯ ⊗ S_{λ_N}` in `Sym^n(C^{h_1} ⊗ ⋯ ⊗ C^{h_N})`, i.e. the
/// invariants of `[λ_1] ⊗ ⋯ ⊗ [λ_N]` under `S_n`, by finite differences of table counts.
pub fn kronecker_multi(diagrams: &[YoungDiagram]) -> DhResult<u128> {
    let Some(first) = diagrams.first() else {
        return Err(DhError::Precondition("need at least one diagram".into()));
    };
    let n = first.boxes();
    if diagrams.iter().any(|y| y.boxes() != n) {
        return Err(DhError::Precondition("all diagrams need the same number of boxes".into()));
    }
    let heights: Vec<usize> = diagrams.iter().map(|y| y.height().max(1)).collect();
    let m = WeightMultiplicityFn::gl_tensor(&heights, n)?;
    let mut total: i128 = 0;
    let per_factor: Vec<Vec<(Vec<i64>, i128)>> =
        diagrams.iter().zip(&heights).map(|(y, &h)| gl_shifts(&y.padded(h))).collect();
    let base: Vec<i64> = diagrams.iter().zip(&heights).flat_map(|(y, &h)| y.padded(h)).collect();
    let mut idx = vec![0usize; per_factor.len()];
    'outer: loop {
        let mut at = Vec::with_capacity(base.len());
        let mut sign = 1i128;
        for (f, &i) in per_factor.iter().zip(&idx) {
            at.extend(f[i].0.iter().copied());
            sign *= f[i].1;
        }
        let at: Vec<i64> = at.iter().zip(&base).map(|(s, b)| s + b).collect();
        total += sign * m.at(&at) as i128;
        for j in (0..idx.len()).rev() {
            idx[j] += 1;
            if idx[j] < per_factor[j].len() {
                continue 'outer;
            }
            idx[j] = 0;
        }
        break;
    }
    u128::try_from(total).map_err(|_| DhError::Internal(format!("negative multiplicity {total}")))
}

/// Kronecker coefficient `g_{λμν}`.
///
/// Conjugating two of the three diagrams leaves `g` unchanged; the variant with the
/// fewest rows in total is evaluated.
pub fn kronecker(lambda: &YoungDiagram, mu: &YoungDiagram, nu: &YoungDiagram) -> DhResult<u128> {
    if lambda.boxes() != mu.boxes() || mu.boxes() != nu.boxes() {
        return Err(DhError::Precondition(format!(
            "box counts differ: {} vs {} vs {}",
            lambda.boxes(),
            mu.boxes(),
            nu.boxes()
        )));
    }
    let variants = [
        [lambda.clone(), mu.clone(), nu.clone()],
        [lambda.conjugate(), mu.conjugate(), nu.clone()],
        [lambda.conjugate(), mu.clone(), nu.conjugate()],
        [lambda.clone(), mu.conjugate(), nu.conjugate()],
    ];
    let best = variants
        .into_iter()
        .min_by_key(|v| {
            let hs: Vec<usize> = v.iter().map(|y| y.height()).collect();
            (hs.iter().sum::<usize>(), *hs.iter().max().unwrap())
        })
        .unwrap();
    kronecker_multi(&best)
}

type CharMemo = HashMap<(Vec<usize>, Vec<usize>), i64>;

/// `χ^λ(ρ)` by the Murnaghan–Nakayama rule on beta-numbers.
fn mn_character(lambda: &[usize], rho: &[usize], memo: &mut CharMemo) -> i64 {
    let Some((&r, rest)) = rho.split_first() else {
        return i64::from(lambda.is_empty());
    };
    let key = (lambda.to_vec(), rho.to_vec());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let l = lambda.len();
    let beta: Vec<usize> = lambda.iter().enumerate().map(|(i, &p)| p + l - 1 - i).collect();
    let mut total = 0;
    for i in 0..l {
        if beta[i] < r || beta.contains(&(beta[i] - r)) {
            continue;
        }
        let target = beta[i] - r;
        // Leg length of the removed rim hook.
        let between = beta.iter().filter(|&&b| b > target && b < beta[i]).count();
        let mut nb = beta.clone();
        nb[i] = target;
        nb.sort_unstable_by(|a, b| b.cmp(a));
        let mut nl: Vec<usize> = nb.iter().enumerate().map(|(j, &b)| b - (l - 1 - j)).collect();
        while nl.last() == Some(&0) {
            nl.pop();
        }
        let sign = if between % 2 == 0 { 1 } else { -1 };
        total += sign * mn_character(&nl, rest, memo);
    }
    memo.insert(key, total);
    total
}

/// `g_{λμν} = Σ_ρ z_ρ^{-1} χ^λ(ρ) χ^μ(ρ) χ^ν(ρ)` from symmetric-group characters.
pub fn character_oracle(lambda: &YoungDiagram, mu: &YoungDiagram, nu: &YoungDiagram) -> DhResult<u128> {
    let n = lambda.boxes();
    if mu.boxes() != n || nu.boxes() != n {
        return Err(DhError::Precondition("box counts differ".into()));
    }
    if n > ORACLE_MAX_BOXES {
        return Err(DhError::ScaleGuard(format!("character oracle handles n ≤ {ORACLE_MAX_BOXES}, got {n}")));
    }
    let mut memo = CharMemo::new();
    let mut sum = Q::zero();
    for rho in partitions(n, n) {
        let mut z = 1i64;
        let mut counts: BTreeMap<usize, i64> = BTreeMap::new();
        rho.iter().for_each(|&p| *counts.entry(p).or_insert(0) += 1);
        for (&p, &c) in &counts {
            z *= (p as i64).pow(c as u32) * (1..=c).product::<i64>();
        }
        let chi = mn_character(lambda.parts(), &rho, &mut memo)
            * mn_character(mu.parts(), &rho, &mut memo)
            * mn_character(nu.parts(), &rho, &mut memo);
        sum += Q::new(chi.into(), z.into());
    }
    if !sum.is_integer() || sum.is_negative() {
        return Err(DhError::Internal(format!("character sum {sum} is not a nonnegative integer")));
    }
    Ok(sum.to_integer().to_u128().unwrap_or(0))
}

/// Weights of `Sym^k(Sym^n(C²))` from the Gaussian binomial `[k+n choose n]_{q²} q^{−kn}`.
pub fn plethysm_character(k: usize, n: usize) -> BTreeMap<i64, u128> {
    // rows[m][j] = coefficients of [m choose j]_q
    let m = k + n;
    let mut rows: Vec<Vec<Vec<u128>>> = vec![vec![vec![1]]];
    for mm in 1..=m {
        let mut row = Vec::with_capacity(mm + 1);
        for j in 0..=mm {
            let mut c = vec![0u128; j * (mm - j) + 1];
            if j > 0 {
                for (e, v) in rows[mm - 1][j - 1].iter().enumerate() {
                    c[e] += v;
                }
            }
            if j < mm {
                for (e, v) in rows[mm - 1][j].iter().enumerate() {
                    c[e + j] += v;
                }
            }
            row.push(c);
        }
        rows.push(row);
    }
    rows[m][n].iter().enumerate().map(|(e, &c)| (2 * e as i64 - (k * n) as i64, c)).filter(|(_, c)| *c > 0).collect()
}

/// `plethysm_character(k, 2)`.
pub fn plethysm_character_sym2(k: usize) -> BTreeMap<i64, u128> {
    plethysm_character(k, 2)
}

/// Highest weights `l` with multiplicity in `Sym^k(Sym^n(C²))`, via Steinberg differences
/// of the q-binomial weight table.
pub fn plethysm_decomposition(k: usize, n: usize) -> DhResult<BTreeMap<i64, u128>> {
    let table: HashMap<Vec<i64>, u128> = plethysm_character(k, n).into_iter().map(|(w, c)| (vec![w], c)).collect();
    let m = WeightMultiplicityFn::from_table(table, 1, k);
    let rd = build_root_data(&crate::rootdata::GroupSpec::new(vec![2])?);
    let mut out = BTreeMap::new();
    for l in 0..=(k * n) as i64 {
        let v = steinberg_multiplicity(&m, &rd, &[l])?;
        if v != 0 {
            out.insert(l, u128::try_from(v).map_err(|_| DhError::Internal(format!("negative multiplicity at {l}")))?);
        }
    }
    Ok(out)
}

/// Atom `mass · δ_point` of a discrete measure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub point: RationalVector,
    pub multiplicity: u128,
    pub mass: Q,
}

fn k_power(k: usize, exponent: i64) -> Q {
    let base = q(k as i64);
    if exponent >= 0 {
        num_traits::pow(base, exponent as usize)
    } else {
        num_traits::pow(base.recip(), (-exponent) as usize)
    }
}

/// `μ_k = k^{-(n−R)} Σ_λ m_k(λ) δ_{λ/k}` for pure or orbit problems, in the lattice frame.
///
/// Pure problems count highest weights in `Sym^k(V)`; orbits of a rational spectrum `s`
/// count invariants of `[k s] ⊗ [λ_1] ⊗ ⋯ ⊗ [λ_N]`.
pub fn multiplicity_measure(p: &MarginalProblem, k: usize) -> DhResult<Vec<Atom>> {
    if k == 0 {
        return Err(DhError::Precondition("need k ≥ 1".into()));
    }
    match &p.global {
        GlobalState::Pure => pure_multiplicity_measure(&p.rep, k),
        GlobalState::Orbit(s) => orbit_multiplicity_measure(&p.rep, s, k),
        GlobalState::PurifiedDouble { .. } => {
            Err(DhError::Precondition("multiplicity measures are defined for pure and orbit problems".into()))
        }
    }
}

fn pure_multiplicity_measure(rep: &RepSpec, k: usize) -> DhResult<Vec<Atom>> {
    let rd = build_root_data(&rep.group());
    let ws = weights_of(rep)?;
    let dim: u64 = ws.iter().map(|(_, m)| m).sum();
    let r = rd.rank();
    let mut hi = vec![0i64; r];
    for (w, _) in &ws {
        for (h, c) in hi.iter_mut().zip(integral(&w.coords)?) {
            *h = (*h).max(c * k as i64);
        }
    }
    let shifts = steinberg_shifts(&rd)?;
    let points: u64 = hi.iter().map(|&h| (h + 1) as u64).product();
    if points.saturating_mul(shifts.len() as u64) > MEASURE_BUDGET {
        return Err(DhError::ScaleGuard(format!(
            "{points} candidate weights × {} difference terms exceeds {MEASURE_BUDGET}",
            shifts.len()
        )));
    }
    let m = WeightMultiplicityFn::for_rep(rep, k)?;
    let scale = k_power(k, -(dim as i64 - 1 - rd.positive_roots.len() as i64));
    let mut out = Vec::new();
    let mut lambda = vec![0i64; r];
    loop {
        let v = apply_shifts(&m, &shifts, &lambda);
        if v < 0 {
            return Err(DhError::Internal(format!("negative highest-weight multiplicity at {lambda:?}")));
        }
        if v > 0 {
            let coords: QVec = lambda.iter().map(|&c| Q::new(c.into(), (k as i64).into())).collect();
            out.push(Atom {
                point: RationalVector::new(coords, rd.frame()),
                multiplicity: v as u128,
                mass: &scale * q(v as i64),
            });
        }
        let mut j = 0;
        while j < r {
            lambda[j] += 1;
            if lambda[j] <= hi[j] {
                break;
            }
            lambda[j] = 0;
            j += 1;
        }
        if j == r {
            break;
        }
    }
    Ok(out)
}

fn orbit_multiplicity_measure(rep: &RepSpec, s: &[Q], k: usize) -> DhResult<Vec<Atom>> {
    if rep.factors.iter().any(|f| f.kind != FactorKind::Standard) {
        return Err(DhError::Precondition("orbit multiplicity measures need distinguishable particles".into()));
    }
    let h = rep.dim()? as usize;
    if s.len() != h || s.windows(2).any(|w| w[0] < w[1]) || s.iter().any(|x| x.is_negative()) {
        return Err(DhError::Precondition("spectrum must be nonincreasing, nonnegative, of length dim H".into()));
    }
    let ks: Vec<Q> = s.iter().map(|x| x * q(k as i64)).collect();
    let parts = integral(&ks)
        .map_err(|_| DhError::Precondition(format!("k = {k} does not clear the denominators of the spectrum")))?;
    let global = YoungDiagram::new(parts.iter().map(|&p| p as usize).collect())?;
    if global.boxes() != k {
        return Err(DhError::Precondition("spectrum must have trace one".into()));
    }
    let dims: Vec<usize> = rep.factors.iter().map(|f| f.dim).collect();
    let rd = build_root_data(&rep.group());
    let choices: Vec<Vec<YoungDiagram>> = dims.iter().map(|&d| YoungDiagram::with_height(k, d)).collect();
    let count: u64 = choices.iter().map(|c| c.len() as u64).product();
    if count > MEASURE_BUDGET / 100 {
        return Err(DhError::ScaleGuard(format!("{count} diagram tuples for k = {k}")));
    }
    let orbit_dim = (0..h).flat_map(|i| (i + 1..h).map(move |j| (i, j))).filter(|&(i, j)| s[i] != s[j]).count();
    let scale = k_power(k, -(orbit_dim as i64 - rd.positive_roots.len() as i64));
    let heights: Vec<usize> = std::iter::once(global.height().max(1)).chain(dims.iter().copied()).collect();
    let m = WeightMultiplicityFn::gl_tensor(&heights, k)?;
    let global_shifts = gl_shifts(&global.padded(heights[0]));
    let mut out = Vec::new();
    let mut idx = vec![0usize; dims.len()];
    'outer: loop {
        let tuple: Vec<&YoungDiagram> = idx.iter().zip(&choices).map(|(&i, c)| &c[i]).collect();
        let mut terms = global_shifts.clone();
        for (y, &d) in tuple.iter().zip(&dims) {
            let fs = gl_shifts(&y.padded(d));
            terms = terms
                .iter()
                .flat_map(|(a, sa)| fs.iter().map(move |(b, sb)| ([a.as_slice(), b].concat(), sa * sb)))
                .collect();
        }
        let base: Vec<i64> = std::iter::once(global.padded(heights[0]))
            .chain(tuple.iter().zip(&dims).map(|(y, &d)| y.padded(d)))
            .flatten()
            .collect();
        let v = apply_shifts(&m, &terms, &base);
        if v < 0 {
            return Err(DhError::Internal(format!("negative multiplicity for {tuple:?}")));
        }
        if v > 0 {
            let coords: QVec = tuple
                .iter()
                .zip(&dims)
                .flat_map(|(y, &d)| {
                    let p = y.padded(d);
                    (0..d - 1).map(move |i| Q::new((p[i] - p[i + 1]).into(), (k as i64).into())).collect::<Vec<_>>()
                })
                .collect();
            out.push(Atom {
                point: RationalVector::new(coords, rd.frame()),
                multiplicity: v as u128,
                mass: &scale * q(v as i64),
            });
        }
        for j in (0..idx.len()).rev() {
            idx[j] += 1;
            if idx[j] < choices[j].len() {
                continue 'outer;
            }
            idx[j] = 0;
        }
        break;
    }
    Ok(out)
}

/// `Σ mass · point` of a discrete measure.
pub fn first_moment(atoms: &[Atom]) -> QVec {
    let r = atoms.first().map_or(0, |a| a.point.len());
    atoms
        .iter()
        .fold(vec![Q::zero(); r], |acc, a| acc.iter().zip(&a.point.coords).map(|(x, y)| x + y * &a.mass).collect())
}

/// Total mass of a discrete measure.
pub fn total_mass(atoms: &[Atom]) -> Q {
    atoms.iter().fold(Q::zero(), |acc, a| acc + &a.mass)
}

/// Dimension check: `Σ_λ m_K(λ) dim V_λ` for `Sym^k(V)`.
pub fn dimension_from_highest_weights(rep: &RepSpec, k: usize) -> DhResult<Q> {
    let rd = build_root_data(&rep.group());
    let atoms = pure_multiplicity_measure(rep, k)?;
    let mut total = Q::zero();
    for a in atoms {
        let lambda: QVec = a.point.coords.iter().map(|c| c * q(k as i64)).collect();
        total += crate::rootdata::weyl_dimension(&rd, &lambda) * q(a.multiplicity as i64);
    }
    Ok(total)
}

/// `dim Sym^k(V) = C(dim V + k − 1, k)`.
pub fn sym_power_dim(rep: &RepSpec, k: usize) -> DhResult<Q> {
    let d = rep.dim()?;
    Ok(Q::from_integer(crate::exact::binomial((d as usize + k - 1) as i64, k as i64)))
}
