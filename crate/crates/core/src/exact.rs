//! Exact rational scalars and small dense linear algebra over Q.
//!
//! Every routine here is exact; matrices are row-major `Vec<QVec>`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{DhError, DhResult};

pub type Q = BigRational;
pub type QVec = Vec<Q>;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qvec(xs: &[i64]) -> QVec {
    xs.iter().map(|&x| q(x)).collect()
}

pub fn zeros(n: usize) -> QVec {
    vec![Q::zero(); n]
}

pub fn unit(n: usize, i: usize) -> QVec {
    let mut v = zeros(n);
    v[i] = Q::one();
    v
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"0.25"`.
pub fn parse_q(s: &str) -> DhResult<Q> {
    let t = s.trim();
    let bad = || DhError::Parse(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        let neg = ip.starts_with('-');
        let ip_abs = ip.trim_start_matches(['-', '+']);
        if fp.is_empty() || !fp.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let whole: BigInt = if ip_abs.is_empty() { BigInt::zero() } else { ip_abs.parse().map_err(|_| bad())? };
        let frac: BigInt = fp.parse().map_err(|_| bad())?;
        let den = num_traits::pow(BigInt::from(10), fp.len());
        let mag = Q::new(whole * &den + frac, den);
        return Ok(if neg { -mag } else { mag });
    }
    let n: BigInt = t.parse().map_err(|_| bad())?;
    Ok(Q::from_integer(n))
}

pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn to_f64(x: &Q) -> f64 {
    match (x.numer().to_f64(), x.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Shift both parts down to keep the quotient in range.
            let shift = x.numer().bits().max(x.denom().bits()).saturating_sub(900);
            let n = (x.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (x.denom() >> shift).to_f64().unwrap_or(1.0);
            n / d
        }
    }
}

/// Nearest rational with denominator `2^40`, used to lift floating inputs.
pub fn from_f64(x: f64) -> Q {
    let den = BigInt::from(1u64 << 40);
    let num = BigInt::from((x * (1u64 << 40) as f64).round() as i128);
    Q::new(num, den)
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    debug_assert_eq!(a.len(), b.len());
    let mut s = Q::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            s += x * y;
        }
    }
    s
}

pub fn add(a: &[Q], b: &[Q]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Q], b: &[Q]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[Q], c: &Q) -> QVec {
    a.iter().map(|x| x * c).collect()
}

pub fn neg(a: &[Q]) -> QVec {
    a.iter().map(|x| -x).collect()
}

pub fn is_zero_vec(a: &[Q]) -> bool {
    a.iter().all(Zero::is_zero)
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn factorial_q(n: usize) -> Q {
    Q::from_integer(factorial(n))
}

pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Row echelon form in place; returns pivot columns.
fn echelon(m: &mut [QVec], ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row >= m.len() {
            break;
        }
        let Some(p) = (row..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].recip();
        for x in m[row].iter_mut() {
            *x *= &inv;
        }
        for i in 0..m.len() {
            if i != row && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                for j in col..m[row].len() {
                    let d = &m[row][j] * &f;
                    m[i][j] -= d;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

pub fn rank(rows: &[QVec]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].len();
    let mut m = rows.to_vec();
    echelon(&mut m, ncols).len()
}

pub fn det(m: &[QVec]) -> Q {
    let n = m.len();
    if n == 0 {
        return Q::one();
    }
    let mut a = m.to_vec();
    let mut d = Q::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&i| !a[i][col].is_zero()) else {
            return Q::zero();
        };
        if p != col {
            a.swap(p, col);
            d = -d;
        }
        let piv = a[col][col].clone();
        d *= &piv;
        for i in col + 1..n {
            if a[i][col].is_zero() {
                continue;
            }
            let f = &a[i][col] / &piv;
            for j in col..n {
                let t = &a[col][j] * &f;
                a[i][j] -= t;
            }
        }
    }
    d
}

/// Solves `a x = b` for square nonsingular `a`.
pub fn solve(a: &[QVec], b: &[Q]) -> Option<QVec> {
    let n = a.len();
    let mut m: Vec<QVec> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let piv = echelon(&mut m, n);
    if piv.len() < n || piv.iter().enumerate().any(|(i, &c)| i != c) {
        return None;
    }
    Some(m.into_iter().map(|r| r[n].clone()).collect())
}

pub fn transpose(m: &[QVec]) -> Vec<QVec> {
    if m.is_empty() {
        return Vec::new();
    }
    (0..m[0].len()).map(|j| m.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn inverse(m: &[QVec]) -> Option<Vec<QVec>> {
    let n = m.len();
    let mut a: Vec<QVec> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend(unit(n, i));
            row
        })
        .collect();
    let piv = echelon(&mut a, n);
    if piv.len() < n {
        return None;
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn mat_vec(m: &[QVec], v: &[Q]) -> QVec {
    m.iter().map(|r| dot(r, v)).collect()
}

/// Basis of `{x : rows · x = 0}`.
pub fn nullspace(rows: &[QVec], ncols: usize) -> Vec<QVec> {
    let mut m = rows.to_vec();
    let piv = echelon(&mut m, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !piv.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = zeros(ncols);
            v[f] = Q::one();
            for (i, &pc) in piv.iter().enumerate() {
                v[pc] = -m[i][f].clone();
            }
            v
        })
        .collect()
}

/// Rescales a nonzero rational vector to coprime integers, first nonzero entry positive.
pub fn primitive_integer(v: &[Q]) -> Vec<BigInt> {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Q::from_integer(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return ints;
    }
    let sign = ints
        .iter()
        .find(|x| !x.is_zero())
        .map(|x| if x.is_negative() { -BigInt::one() } else { BigInt::one() })
        .unwrap_or_else(BigInt::one);
    ints.into_iter().map(|x| x / &g * &sign).collect()
}

pub fn ints_to_q(v: &[BigInt]) -> QVec {
    v.iter().map(|x| Q::from_integer(x.clone())).collect()
}

/// Unimodular completion of a primitive integral covector `ell`.
///
/// Returns `(basis, u)` where `basis` is a Z-basis of `ker ell ∩ Z^r` and `ell(u) = 1`;
/// together they form a unimodular matrix.
pub fn kernel_lattice_frame(ell: &[BigInt]) -> (Vec<QVec>, QVec) {
    let r = ell.len();
    let mut a: Vec<BigInt> = ell.to_vec();
    let mut cols: Vec<Vec<BigInt>> =
        (0..r).map(|i| (0..r).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect();
    loop {
        let nz: Vec<usize> = (0..r).filter(|&i| !a[i].is_zero()).collect();
        if nz.len() <= 1 {
            break;
        }
        let p = *nz.iter().min_by_key(|&&i| a[i].abs()).unwrap();
        for &j in &nz {
            if j == p {
                continue;
            }
            let qt = a[j].div_floor(&a[p]);
            a[j] = &a[j] - &qt * &a[p];
            let cp = cols[p].clone();
            for (x, y) in cols[j].iter_mut().zip(&cp) {
                *x -= &qt * y;
            }
        }
    }
    let p = (0..r).find(|&i| !a[i].is_zero()).expect("nonzero covector");
    if a[p].is_negative() {
        a[p] = -a[p].clone();
        for x in cols[p].iter_mut() {
            *x = -x.clone();
        }
    }
    assert!(a[p].is_one(), "covector must be primitive");
    let u = ints_to_q(&cols[p]);
    let basis = (0..r).filter(|&i| i != p).map(|i| ints_to_q(&cols[i])).collect();
    (basis, u)
}

/// Barycentric coordinates of `p` with respect to affinely independent `pts`
/// spanning the affine hull that contains `p`; `None` if `p` is off the hull.
pub fn barycentric(pts: &[QVec], p: &[Q]) -> Option<QVec> {
    let k = pts.len();
    let dim = p.len();
    // Solve sum c_i pts_i = p, sum c_i = 1 via least-structure elimination.
    let mut rows: Vec<QVec> = (0..dim)
        .map(|d| {
            let mut r: QVec = pts.iter().map(|v| v[d].clone()).collect();
            r.push(p[d].clone());
            r
        })
        .collect();
    let mut last = vec![Q::one(); k];
    last.push(Q::one());
    rows.push(last);
    let piv = echelon(&mut rows, k + 1);
    if piv.contains(&k) {
        return None;
    }
    if piv.len() < k {
        return None;
    }
    let mut c = zeros(k);
    for (i, &pc) in piv.iter().enumerate() {
        c[pc] = rows[i][k].clone();
    }
    Some(c)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

pub fn sign(x: &Q) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}
