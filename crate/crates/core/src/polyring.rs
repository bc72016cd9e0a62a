//! Sparse multivariate polynomials with exact rational coefficients, truncated
//! Laurent series used by the wall-crossing residue, and exact simplex integration.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{DhError, DhResult};
use crate::exact::{self, factorial_q, QVec, Q};

pub type Exponent = Vec<u32>;

/// Polynomial over `nvars` coordinates; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Exponent, Q>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Q) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Q::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, Q::one());
        p
    }

    /// The affine form `c0 + Σ coeffs_i x_i`.
    pub fn affine(coeffs: &[Q], c0: &Q) -> Self {
        let n = coeffs.len();
        let mut p = Self::constant(n, c0.clone());
        for (i, c) in coeffs.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            p.add_term(e, c.clone());
        }
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exponent, Q)>) -> DhResult<Self> {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(DhError::FrameMismatch(format!(
                    "exponent of length {} in a polynomial over {} variables",
                    e.len(),
                    nvars
                )));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn add_term(&mut self, e: Exponent, c: Q) {
        debug_assert_eq!(e.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Q)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, e: &[u32]) -> Q {
        self.terms.get(e).cloned().unwrap_or_else(Q::zero)
    }

    /// Total degree; the zero polynomial has degree `None`.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn is_constant(&self) -> bool {
        self.degree().is_none_or(|d| d == 0)
    }

    pub fn constant_term(&self) -> Q {
        self.coeff(&vec![0; self.nvars])
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Polynomial { nvars: self.nvars, terms: self.terms.iter().map(|(e, x)| (e.clone(), x * c)).collect() }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.nvars);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval(&self, x: &[Q]) -> Q {
        assert_eq!(x.len(), self.nvars, "evaluation point has the wrong dimension");
        let mut s = Q::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    t *= xi;
                }
            }
            s += t;
        }
        s
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| exact::to_f64(c) * x.iter().zip(e).map(|(xi, &k)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut p = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut f = e.clone();
            f[i] -= 1;
            p.add_term(f, c * Q::from_integer(e[i].into()));
        }
        p
    }

    /// `Σ_i v_i ∂p/∂x_i`.
    pub fn directional_derivative(&self, v: &[Q]) -> DhResult<Self> {
        if v.len() != self.nvars {
            return Err(DhError::FrameMismatch(format!(
                "direction of length {} for a polynomial over {} variables",
                v.len(),
                self.nvars
            )));
        }
        let mut out = Self::zero(self.nvars);
        for (i, vi) in v.iter().enumerate() {
            if !vi.is_zero() {
                out = &out + &self.partial(i).scale(vi);
            }
        }
        Ok(out)
    }

    /// Substitutes polynomial `subs[i]` for variable `i`; all substitutes share one ring.
    pub fn compose(&self, subs: &[Polynomial]) -> Self {
        assert_eq!(subs.len(), self.nvars, "one substitute per variable");
        let m = subs.first().map_or(0, |s| s.nvars);
        let mut powers: Vec<Vec<Polynomial>> = subs.iter().map(|s| vec![Polynomial::one(s.nvars), s.clone()]).collect();
        let mut out = Self::zero(m);
        for (e, c) in &self.terms {
            let mut t = Self::constant(m, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                while powers[i].len() <= k as usize {
                    let next = &powers[i][powers[i].len() - 1] * &subs[i];
                    powers[i].push(next);
                }
                t = &t * &powers[i][k as usize];
            }
            out = &out + &t;
        }
        out
    }

    /// `x ↦ p(A x + b)` with `A` given row-wise (one row per old variable).
    pub fn substitute_affine(&self, a: &[QVec], b: &[Q]) -> Self {
        let subs: Vec<Polynomial> = a.iter().zip(b).map(|(row, bi)| Polynomial::affine(row, bi)).collect();
        if subs.is_empty() {
            return self.clone();
        }
        self.compose(&subs)
    }

    /// `x ↦ p(x − shift)`; the density of a measure translated by `shift`.
    pub fn translated(&self, shift: &[Q]) -> Self {
        let n = self.nvars;
        let a: Vec<QVec> = (0..n).map(|i| exact::unit(n, i)).collect();
        let b: QVec = shift.iter().map(|s| -s.clone()).collect();
        self.substitute_affine(&a, &b)
    }

    /// Embeds into a ring of `nvars` variables, mapping variable `i` to `offset + i`.
    pub fn embed(&self, nvars: usize, offset: usize) -> Self {
        let mut p = Self::zero(nvars);
        for (e, c) in &self.terms {
            let mut f = vec![0; nvars];
            f[offset..offset + self.nvars].copy_from_slice(e);
            p.add_term(f, c.clone());
        }
        p
    }

    pub fn map_coeffs(&self, f: impl Fn(&Q) -> Q) -> Self {
        let mut p = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            p.add_term(e.clone(), f(c));
        }
        p
    }

    /// `(exponent, "p/q")` pairs; the serialized coefficient list.
    pub fn to_coeff_list(&self) -> Vec<(Exponent, String)> {
        self.terms.iter().map(|(e, c)| (e.clone(), exact::fmt_q(c))).collect()
    }

    pub fn from_coeff_list(nvars: usize, list: &[(Exponent, String)]) -> DhResult<Self> {
        let terms = list.iter().map(|(e, c)| Ok((e.clone(), exact::parse_q(c)?))).collect::<DhResult<Vec<_>>>()?;
        Self::from_terms(nvars, terms)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let neg = c < &Q::zero();
            let abs = if neg { -c.clone() } else { c.clone() };
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { format!("x{i}") } else { format!("x{i}^{k}") })
                .collect();
            if mono.is_empty() {
                write!(f, "{}", exact::fmt_q(&abs))?;
            } else if abs.is_one() {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{}*{}", exact::fmt_q(&abs), mono.join("*"))?;
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars, "polynomial rings differ");
        let mut p = self.clone();
        for (e, c) in &rhs.terms {
            p.add_term(e.clone(), c.clone());
        }
        p
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars, "polynomial rings differ");
        let mut p = self.clone();
        for (e, c) in &rhs.terms {
            p.add_term(e.clone(), -c.clone());
        }
        p
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.map_coeffs(|c| -c.clone())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars, "polynomial rings differ");
        let mut p = Polynomial::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Exponent = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                p.add_term(e, c1 * c2);
            }
        }
        p
    }
}

/// Serialized form: variable count plus `(exponent, "p/q")` pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolynomialRepr {
    pub nvars: usize,
    pub terms: Vec<(Exponent, String)>,
}

impl From<&Polynomial> for PolynomialRepr {
    fn from(p: &Polynomial) -> Self {
        PolynomialRepr { nvars: p.nvars, terms: p.to_coeff_list() }
    }
}

impl TryFrom<&PolynomialRepr> for Polynomial {
    type Error = DhError;
    fn try_from(r: &PolynomialRepr) -> DhResult<Self> {
        Polynomial::from_coeff_list(r.nvars, &r.terms)
    }
}

/// Laurent series in `z` with polynomial coefficients, truncated in `z` to
/// `[z_min, z_max]` and in the auxiliary variables to total degree `max_aux_degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries {
    nvars: usize,
    aux: Vec<usize>,
    max_aux_degree: u32,
    z_min: i32,
    z_max: i32,
    coeffs: BTreeMap<i32, Polynomial>,
}

impl TruncatedSeries {
    pub fn new(nvars: usize, aux: Vec<usize>, max_aux_degree: u32, z_min: i32, z_max: i32) -> Self {
        TruncatedSeries { nvars, aux, max_aux_degree, z_min, z_max, coeffs: BTreeMap::new() }
    }

    pub fn one_like(&self) -> Self {
        let mut s = Self::new(self.nvars, self.aux.clone(), self.max_aux_degree, self.z_min, self.z_max);
        s.add_coeff(0, Polynomial::one(self.nvars));
        s
    }

    fn aux_degree(&self, e: &[u32]) -> u32 {
        self.aux.iter().map(|&i| e[i]).sum()
    }

    /// Drops monomials beyond the auxiliary degree cap.
    pub fn truncate_poly(&self, p: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (e, c) in p.terms() {
            if self.aux_degree(e) <= self.max_aux_degree {
                out.add_term(e.clone(), c.clone());
            }
        }
        out
    }

    pub fn add_coeff(&mut self, k: i32, p: Polynomial) {
        if k < self.z_min || k > self.z_max {
            return;
        }
        let p = self.truncate_poly(&p);
        if p.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(k).or_insert_with(|| Polynomial::zero(p.nvars()));
        *entry = &*entry + &p;
        if entry.is_zero() {
            self.coeffs.remove(&k);
        }
    }

    pub fn coeff(&self, k: i32) -> Polynomial {
        self.coeffs.get(&k).cloned().unwrap_or_else(|| Polynomial::zero(self.nvars))
    }

    pub fn z_window(&self) -> (i32, i32) {
        (self.z_min, self.z_max)
    }

    pub fn mul(&self, other: &TruncatedSeries) -> TruncatedSeries {
        let mut out = Self::new(self.nvars, self.aux.clone(), self.max_aux_degree, self.z_min, self.z_max);
        for (k1, p1) in &self.coeffs {
            for (k2, p2) in &other.coeffs {
                let k = k1 + k2;
                if k < self.z_min || k > self.z_max {
                    continue;
                }
                let prod = truncated_product(p1, p2, &self.aux, self.max_aux_degree);
                out.add_coeff(k, prod);
            }
        }
        out
    }
}

fn truncated_product(a: &Polynomial, b: &Polynomial, aux: &[usize], cap: u32) -> Polynomial {
    let mut p = Polynomial::zero(a.nvars());
    for (e1, c1) in a.terms() {
        let d1: u32 = aux.iter().map(|&i| e1[i]).sum();
        for (e2, c2) in b.terms() {
            let d2: u32 = aux.iter().map(|&i| e2[i]).sum();
            if d1 + d2 > cap {
                continue;
            }
            let e: Exponent = e1.iter().zip(e2).map(|(x, y)| x + y).collect();
            p.add_term(e, c1 * c2);
        }
    }
    p
}

/// Jump `f_+ − f_−` of a pushforward density across a wall.
///
/// Evaluates `Res_{z=0} f̂(∂_x,∂_y) e^{z ℓ(λ−ω_0) + ⟨λ,x⟩ + y} / Π_k (z ℓ(ω_k−ω_0) + ⟨ω_k,x⟩ + y)`
/// at `x = y = 0`, where `f̂(λ,s) = s^h f_W(λ/s)`. The `+` side is `ℓ > ℓ(ω_0)`.
/// With `ω_0 = 0` and `f_W` homogeneous of degree `h` this is the linear cone jump.
pub fn residue_jump(
    wall_poly: &Polynomial,
    offset_weight: &[Q],
    off_wall_weights: &[QVec],
    ell: &[Q],
    homogeneity: u32,
) -> DhResult<Polynomial> {
    let r = ell.len();
    if wall_poly.nvars() != r || offset_weight.len() != r || off_wall_weights.iter().any(|w| w.len() != r) {
        return Err(DhError::FrameMismatch("residue_jump inputs must share one coordinate frame".into()));
    }
    if let Some(d) = wall_poly.degree() {
        if d > homogeneity {
            return Err(DhError::Precondition(format!(
                "wall polynomial of degree {d} exceeds the homogeneity degree {homogeneity}"
            )));
        }
    } else {
        return Ok(Polynomial::zero(r));
    }
    let nv = 2 * r + 1;
    let aux: Vec<usize> = (r..nv).collect();
    let dcap = homogeneity;
    let q_off = off_wall_weights.len() as i32;
    let span = q_off + dcap as i32;
    let base = TruncatedSeries::new(nv, aux, dcap, -span, span);
    let y = Polynomial::var(nv, 2 * r);
    let mut series = base.one_like();
    for w in off_wall_weights {
        let a = exact::dot(ell, &exact::sub(w, offset_weight));
        if a.is_zero() {
            return Err(DhError::Precondition(
                "an off-wall weight lies on the wall hyperplane (misclassified wall)".into(),
            ));
        }
        let mut b = y.clone();
        for (i, wi) in w.iter().enumerate() {
            b = &b + &Polynomial::var(nv, r + i).scale(wi);
        }
        let mut factor = TruncatedSeries::new(nv, base.aux.clone(), dcap, -span, span);
        let mut bj = Polynomial::one(nv);
        let inv_a = a.recip();
        let mut coef = inv_a.clone();
        for j in 0..=dcap {
            let signed = if j % 2 == 0 { coef.clone() } else { -coef.clone() };
            factor.add_coeff(-(j as i32) - 1, bj.scale(&signed));
            bj = factor.truncate_poly(&(&bj * &b));
            coef *= &inv_a;
        }
        series = series.mul(&factor);
    }
    // e^{⟨λ,x⟩ + y} truncated at auxiliary degree D.
    let mut lin = y.clone();
    for i in 0..r {
        lin = &lin + &(&Polynomial::var(nv, i) * &Polynomial::var(nv, r + i));
    }
    let mut exp_series = TruncatedSeries::new(nv, base.aux.clone(), dcap, -span, span);
    let mut li = Polynomial::one(nv);
    for i in 0..=dcap {
        exp_series.add_coeff(0, li.scale(&factorial_q(i as usize).recip()));
        li = exp_series.truncate_poly(&(&li * &lin));
    }
    series = series.mul(&exp_series);
    // Pair with e^{zA}: the residue collects S_p · A^{−1−p}/(−1−p)!.
    let a_lin = {
        let mut coeffs = ell.to_vec();
        coeffs.extend(std::iter::repeat_n(Q::zero(), r + 1));
        Polynomial::affine(&coeffs, &-exact::dot(ell, offset_weight))
    };
    let mut residue = Polynomial::zero(nv);
    for p in -span..=-1 {
        let sp = series.coeff(p);
        if sp.is_zero() {
            continue;
        }
        let k = (-1 - p) as u32;
        let term = &sp * &a_lin.pow(k).scale(&factorial_q(k as usize).recip());
        residue = &residue + &term;
    }
    // Apply f̂(∂_x, ∂_y) at x = y = 0.
    let mut out = Polynomial::zero(r);
    for (beta, c) in wall_poly.terms() {
        let bdeg: u32 = beta.iter().sum();
        let ydeg = homogeneity - bdeg;
        let mut weight = c.clone() * factorial_q(ydeg as usize);
        for &bi in beta {
            weight *= factorial_q(bi as usize);
        }
        for (e, coef) in residue.terms() {
            if e[r..2 * r] == beta[..] && e[2 * r] == ydeg {
                out.add_term(e[..r].to_vec(), coef * &weight);
            }
        }
    }
    Ok(out)
}

/// Closed-form jump across a wall carrying a constant wall density:
/// `f_W · (Π_k ℓ(ω_k−ω_0))^{-1} · ℓ(λ−ω_0)^{d} / d!` with `d = #off-wall − 1`.
pub fn minimal_wall_jump(f_w: &Q, offset_weight: &[Q], off_wall_weights: &[QVec], ell: &[Q]) -> DhResult<Polynomial> {
    let mut prod = Q::one();
    for w in off_wall_weights {
        let a = exact::dot(ell, &exact::sub(w, offset_weight));
        if a.is_zero() {
            return Err(DhError::Precondition(
                "an off-wall weight lies on the wall hyperplane (misclassified wall)".into(),
            ));
        }
        prod *= a;
    }
    let d = off_wall_weights
        .len()
        .checked_sub(1)
        .ok_or_else(|| DhError::Precondition("a wall jump needs at least one off-wall weight".into()))?;
    let a_lin = Polynomial::affine(ell, &-exact::dot(ell, offset_weight));
    Ok(a_lin.pow(d as u32).scale(&(f_w / prod / factorial_q(d))))
}

/// Exact `∫_simplex p dλ` with Lebesgue measure in the given coordinates.
pub fn integrate_over_simplex(p: &Polynomial, vertices: &[QVec]) -> DhResult<Q> {
    let r = p.nvars();
    if vertices.len() != r + 1 || vertices.iter().any(|v| v.len() != r) {
        return Err(DhError::Precondition(format!(
            "a simplex in dimension {r} needs {} vertices of length {r}",
            r + 1
        )));
    }
    if r == 0 {
        return Ok(p.constant_term());
    }
    let v0 = &vertices[0];
    let edges: Vec<QVec> = vertices[1..].iter().map(|v| exact::sub(v, v0)).collect();
    let jac = exact::det(&edges);
    if jac.is_zero() {
        return Err(DhError::Precondition("degenerate simplex".into()));
    }
    // λ_j = v0_j + Σ_i t_i edges_i_j
    let a: Vec<QVec> = (0..r).map(|j| edges.iter().map(|e| e[j].clone()).collect()).collect();
    let pt = p.substitute_affine(&a, v0);
    let mut total = Q::zero();
    for (e, c) in pt.terms() {
        let deg: u32 = e.iter().sum();
        let mut num = Q::one();
        for &k in e {
            num *= factorial_q(k as usize);
        }
        total += c * num / factorial_q(deg as usize + r);
    }
    let vol = if jac < Q::zero() { -jac } else { jac };
    Ok(total * vol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q, qf, qvec};

    fn x(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    #[test]
    fn directional_derivative_examples() {
        let p = &Polynomial::one(2) - &x(2, 0);
        assert_eq!(p.directional_derivative(&qvec(&[-2, 0])).unwrap(), Polynomial::constant(2, q(2)));
        assert!(Polynomial::constant(2, q(7)).directional_derivative(&qvec(&[3, 1])).unwrap().is_zero());
        let p = &x(2, 0) * &x(2, 1);
        assert_eq!(p.directional_derivative(&qvec(&[1, 1])).unwrap(), &x(2, 0) + &x(2, 1));
        assert!(p.directional_derivative(&qvec(&[1])).is_err());
    }

    #[test]
    fn simplex_integrals() {
        let tri = vec![qvec(&[0, 0]), qvec(&[1, 0]), qvec(&[0, 1])];
        assert_eq!(integrate_over_simplex(&Polynomial::one(2), &tri).unwrap(), qf(1, 2));
        assert_eq!(integrate_over_simplex(&x(2, 0), &tri).unwrap(), qf(1, 6));
        let flat = vec![qvec(&[0, 0]), qvec(&[1, 1]), qvec(&[2, 2])];
        assert!(integrate_over_simplex(&Polynomial::one(2), &flat).is_err());
    }

    #[test]
    fn two_qubit_wall_jumps() {
        let w = |a: i64, b: i64| qvec(&[a, b]);
        // Top edge, inward covector −λ₂, constant wall density 1/2.
        let ell = qvec(&[0, -1]);
        let off = vec![w(1, -1), w(-1, -1)];
        let closed = minimal_wall_jump(&qf(1, 2), &w(1, 1), &off, &ell).unwrap();
        let expected = (&Polynomial::one(2) - &x(2, 1)).scale(&qf(1, 8));
        assert_eq!(closed, expected);
        let res = residue_jump(&Polynomial::constant(2, qf(1, 2)), &w(1, 1), &off, &ell, 0).unwrap();
        assert_eq!(res, expected);
        // Diagonal λ₁ = λ₂ with ℓ = λ₁ − λ₂.
        let ell = qvec(&[1, -1]);
        let off = vec![w(1, -1), w(-1, 1)];
        let res = residue_jump(&Polynomial::constant(2, qf(1, 2)), &w(1, 1), &off, &ell, 0).unwrap();
        assert_eq!(res, (&x(2, 1) - &x(2, 0)).scale(&qf(1, 8)));
    }

    #[test]
    fn residue_rejects_misclassified_walls() {
        let ell = qvec(&[0, 1]);
        let err = residue_jump(&Polynomial::one(2), &qvec(&[0, 0]), &[qvec(&[3, 0])], &ell, 0);
        assert!(err.is_err());
        let err = residue_jump(&x(2, 0), &qvec(&[0, 0]), &[qvec(&[0, 1])], &ell, 0);
        assert!(err.is_err());
    }

    #[test]
    fn one_dimensional_cone_jump() {
        // Generators {1,1,1}: jump at 0 is t²/2.
        let gens = vec![qvec(&[1]); 3];
        let j = residue_jump(&Polynomial::one(1), &qvec(&[0]), &gens, &qvec(&[1]), 0).unwrap();
        assert_eq!(j, x(1, 0).pow(2).scale(&qf(1, 2)));
    }

    #[test]
    fn series_window_is_respected() {
        let s = TruncatedSeries::new(2, vec![1], 1, -2, 2);
        let mut a = s.clone();
        a.add_coeff(-2, Polynomial::var(2, 1));
        let sq = a.mul(&a);
        assert_eq!(sq.coeff(-4), Polynomial::zero(2));
        assert_eq!(s.z_window(), (-2, 2));
    }
}
