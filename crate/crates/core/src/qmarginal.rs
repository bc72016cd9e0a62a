//! Quantum marginal problems: from particle data to weight systems, and from
//! Duistermaat–Heckman measures to eigenvalue distributions of one-body marginals.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::chambers::{convex_hull, Cell, Hyperplane};
use crate::error::{DhError, DhResult};
use crate::exact::{self, q, QVec, Q};
use crate::measure_engine::{
    derivative_principle, heckman_sum, projective_density_via_cone, single_summand_density, DensityEngine, HeckmanTerm,
    PiecewiseMeasure, SignedPointMass,
};
use crate::polyring::Polynomial;
use crate::rootdata::{
    build_root_data, epsilon, from_diagonal, to_diagonal, volume_polynomial, weight_list, weights_of, FactorKind,
    Frame, RationalVector, RepFactor, RepSpec, RootData,
};

/// Largest global dimension for which the orbit formula sums over all permutations.
pub const MAX_ORBIT_DIM: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GlobalState {
    /// Fubini–Study random pure state on `P(V)`.
    Pure,
    /// Unitarily random mixed state with the given nonincreasing, trace-one spectrum.
    Orbit(QVec),
    /// Pure state on `V ⊗ C^{dim V}`; with a spectrum, the joint law is sliced back to it.
    PurifiedDouble { slice: Option<QVec> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFrame {
    /// Fundamental-weight coordinates of the moment map.
    Weyl,
    /// `(λ̂_1, …, λ̂_{d−1})` of every subsystem.
    Spectra,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarginalProblem {
    pub rep: RepSpec,
    pub global: GlobalState,
    pub report: ReportFrame,
}

impl MarginalProblem {
    pub fn pure(rep: RepSpec) -> Self {
        MarginalProblem { rep, global: GlobalState::Pure, report: ReportFrame::Spectra }
    }

    pub fn orbit(rep: RepSpec, spectrum: QVec) -> Self {
        MarginalProblem { rep, global: GlobalState::Orbit(spectrum), report: ReportFrame::Spectra }
    }

    pub fn in_frame(mut self, report: ReportFrame) -> Self {
        self.report = report;
        self
    }

    /// Group whose marginals are reported: the purifying factor is included only for
    /// unsliced purified doubles.
    pub fn reported_rep(&self) -> DhResult<RepSpec> {
        match &self.global {
            GlobalState::PurifiedDouble { slice: None } => extended_rep(&self.rep),
            _ => Ok(self.rep.clone()),
        }
    }
}

fn extended_rep(rep: &RepSpec) -> DhResult<RepSpec> {
    let h = rep.dim()? as usize;
    let mut ext = rep.clone();
    ext.factors.push(RepFactor { dim: h, kind: FactorKind::Standard });
    Ok(ext)
}

/// Adjoins a distinguishable particle of dimension `dim V`. Orbit problems keep their
/// spectrum as the slice at which the joint law is read back.
pub fn purified_double(p: &MarginalProblem) -> MarginalProblem {
    let slice = match &p.global {
        GlobalState::Orbit(s) => Some(s.clone()),
        GlobalState::PurifiedDouble { slice } => slice.clone(),
        GlobalState::Pure => None,
    };
    MarginalProblem { rep: p.rep.clone(), global: GlobalState::PurifiedDouble { slice }, report: p.report }
}

/// Number of particles carried by a factor: the moment map is `N` times the marginal.
pub fn factor_scale(f: &RepFactor) -> Option<Q> {
    match &f.kind {
        FactorKind::Standard => Some(Q::one()),
        FactorKind::Sym(n) | FactorKind::Alt(n) => Some(q(*n as i64)),
        FactorKind::Irreducible(hw) => {
            let boxes: i64 = hw.iter().enumerate().map(|(i, c)| (i as i64 + 1) * c).sum();
            Some(q(boxes.max(1)))
        }
        FactorKind::Spectator => None,
    }
}

fn acting_factors(rep: &RepSpec) -> Vec<(usize, Q)> {
    rep.factors.iter().filter_map(|f| factor_scale(f).map(|n| (f.dim, n))).collect()
}

/// Affine map `x = A y + b` from spectra coordinates `y` to Weyl coordinates `x`.
pub fn spectra_map(rep: &RepSpec) -> (Vec<QVec>, QVec) {
    let factors = acting_factors(rep);
    let r: usize = factors.iter().map(|(d, _)| d - 1).sum();
    let mut a = vec![exact::zeros(r); r];
    let mut b = exact::zeros(r);
    let mut off = 0;
    for (d, n) in factors {
        let k = d - 1;
        for i in 0..k {
            if i + 1 < k {
                a[off + i][off + i] = n.clone();
                a[off + i][off + i + 1] = -n.clone();
            } else {
                // λ̂_d = 1 − Σ y
                for j in 0..k {
                    a[off + i][off + j] = n.clone();
                }
                a[off + i][off + i] += &n;
                b[off + i] = -n.clone();
            }
        }
        off += k;
    }
    (a, b)
}

/// Per-subsystem spectra `λ̂` of Weyl coordinates.
pub fn to_spectrum(rep: &RepSpec, x: &[Q]) -> DhResult<Vec<QVec>> {
    let factors = acting_factors(rep);
    let r: usize = factors.iter().map(|(d, _)| d - 1).sum();
    if x.len() != r {
        return Err(DhError::FrameMismatch(format!("{} coordinates for rank {r}", x.len())));
    }
    let mut off = 0;
    let mut out = Vec::new();
    for (d, n) in factors {
        let c: QVec = x[off..off + d - 1].iter().map(|v| v / &n).collect();
        out.push(to_diagonal(&c, &Q::one()));
        off += d - 1;
    }
    Ok(out)
}

/// Weyl coordinates of per-subsystem spectra; every spectrum must have trace one.
pub fn to_weyl(rep: &RepSpec, spectra: &[QVec]) -> DhResult<QVec> {
    let factors = acting_factors(rep);
    if spectra.len() != factors.len() {
        return Err(DhError::FrameMismatch(format!("{} spectra for {} subsystems", spectra.len(), factors.len())));
    }
    let mut out = Vec::new();
    for ((d, n), s) in factors.iter().zip(spectra) {
        if s.len() != *d {
            return Err(DhError::FrameMismatch(format!("spectrum of length {} for C^{d}", s.len())));
        }
        let tr = s.iter().fold(Q::zero(), |a, b| a + b);
        if !tr.is_one() {
            return Err(DhError::Precondition(format!("spectrum has trace {}, not 1", exact::fmt_q(&tr))));
        }
        out.extend(exact::scale(&from_diagonal(s), n));
    }
    Ok(out)
}

/// Assumption screening: the support must reach the interior of the positive chamber.
pub fn screen(p: &MarginalProblem) -> DhResult<()> {
    p.rep.validate()?;
    let dims: Vec<usize> = p.rep.factors.iter().filter(|f| f.kind == FactorKind::Standard).map(|f| f.dim).collect();
    let all_standard = dims.len() == p.rep.factors.len();
    if all_standard && dims.len() >= 2 && p.global == GlobalState::Pure {
        let mut sorted = dims.clone();
        sorted.sort_unstable();
        let largest = *sorted.last().unwrap() as u128;
        let rest: u128 = sorted[..sorted.len() - 1].iter().map(|&d| d as u128).product();
        if largest > rest + 1 {
            return Err(DhError::Precondition(format!(
                "dimensions {dims:?}: the largest subsystem exceeds the product of the others plus one, so the \
                 marginal spectra lie on the chamber boundary; consider the purified double"
            )));
        }
    }
    if p.rep.group().factors.is_empty() {
        return Err(DhError::Precondition("no subsystem carries a group action".into()));
    }
    Ok(())
}

fn check_orbit_spectrum(rep: &RepSpec, s: &[Q]) -> DhResult<()> {
    if rep.factors.iter().any(|f| f.kind != FactorKind::Standard) {
        return Err(DhError::Precondition("mixed global states are supported for distinguishable particles".into()));
    }
    let h = rep.dim()? as usize;
    if s.len() != h {
        return Err(DhError::Precondition(format!("spectrum of length {} for a space of dimension {h}", s.len())));
    }
    if h > MAX_ORBIT_DIM {
        return Err(DhError::ScaleGuard(format!("orbit formula sums {h}! terms; limit is {MAX_ORBIT_DIM}")));
    }
    let tr = s.iter().fold(Q::zero(), |a, b| a + b);
    if !tr.is_one() || s.iter().any(|x| x.is_negative()) {
        return Err(DhError::Precondition("global spectrum must be nonnegative with trace one".into()));
    }
    if s.windows(2).any(|w| w[0] <= w[1]) {
        return Err(DhError::Precondition(
            "global spectrum must be strictly decreasing; degenerate spectra need the purified double".into(),
        ));
    }
    Ok(())
}

fn permutations(n: usize) -> Vec<(Vec<usize>, i8)> {
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
    rec(&mut (0..n).collect(), 0, 1, &mut out);
    out
}

/// Weights of the product basis `e_{i_1} ⊗ ⋯ ⊗ e_{i_N}` in lexicographic order.
fn basis_weights(rep: &RepSpec) -> Vec<QVec> {
    let mut acc: Vec<QVec> = vec![vec![]];
    for f in &rep.factors {
        let mut next = Vec::new();
        for a in &acc {
            for j in 0..f.dim {
                let mut w = a.clone();
                w.extend(epsilon(f.dim, j));
                next.push(w);
            }
        }
        acc = next;
    }
    acc
}

/// Heckman terms of a coadjoint `SU(H)` orbit pushed forward to the torus of `K`.
/// With `rd`, one copy of `−α` is removed per positive root of `K` (or `α`, flipping the sign).
pub fn orbit_heckman_terms(rep: &RepSpec, spectrum: &[Q], rd: Option<&RootData>) -> DhResult<Vec<HeckmanTerm>> {
    check_orbit_spectrum(rep, spectrum)?;
    let wts = basis_weights(rep);
    let h = wts.len();
    let mut gens = Vec::new();
    for a in 0..h {
        for b in a + 1..h {
            let g = exact::sub(&wts[b], &wts[a]);
            if exact::is_zero_vec(&g) {
                return Err(DhError::Precondition("a root of SU(H) projects to zero".into()));
            }
            gens.push(g);
        }
    }
    let mut sign_extra = 1i8;
    if let Some(rd) = rd {
        for alpha in &rd.positive_roots {
            let neg = exact::neg(&alpha.coords);
            if let Some(i) = gens.iter().position(|g| g == &neg) {
                gens.remove(i);
            } else if let Some(i) = gens.iter().position(|g| g == &alpha.coords) {
                gens.remove(i);
                sign_extra = -sign_extra;
            } else {
                return Err(DhError::Precondition("neither α nor −α occurs among the projected roots".into()));
            }
        }
    }
    let r = wts[0].len();
    Ok(permutations(h)
        .into_iter()
        .map(|(perm, s)| {
            let mut pt = exact::zeros(r);
            for (k, w) in wts.iter().enumerate() {
                pt = exact::add(&pt, &exact::scale(w, &spectrum[perm[k]]));
            }
            HeckmanTerm { point: SignedPointMass::new(pt, s * sign_extra), generators: gens.clone() }
        })
        .collect())
}

/// Abelian measure `DH^T` in the Weyl frame.
pub fn abelian_measure(p: &MarginalProblem) -> DhResult<PiecewiseMeasure> {
    screen(p)?;
    match &p.global {
        GlobalState::Pure => pure_abelian(&p.rep),
        GlobalState::Orbit(s) => heckman_sum(&orbit_heckman_terms(&p.rep, s, None)?, Frame::Lattice(p.rep.group())),
        GlobalState::PurifiedDouble { slice: None } => pure_abelian(&extended_rep(&p.rep)?),
        GlobalState::PurifiedDouble { slice: Some(_) } => {
            Err(DhError::Unsupported("the Abelian measure of a sliced purified double".into()))
        }
    }
}

fn pure_abelian(rep: &RepSpec) -> DhResult<PiecewiseMeasure> {
    let ws = weights_of(rep)?;
    if ws.iter().all(|(_, m)| *m == 1) {
        single_summand_density(&ws.into_iter().map(|(w, _)| w).collect::<Vec<_>>())
    } else {
        let frame = Frame::Lattice(rep.group());
        let all: Vec<RationalVector> =
            weight_list(rep)?.into_iter().map(|w| RationalVector::new(w, frame.clone())).collect();
        projective_density_via_cone(&all)
    }
}

/// Non-Abelian measure `DH^K` on the open positive chamber, in the Weyl frame.
pub fn nonabelian_measure(p: &MarginalProblem) -> DhResult<PiecewiseMeasure> {
    screen(p)?;
    let rep = p.reported_rep()?;
    let rd = build_root_data(&rep.group());
    match &p.global {
        GlobalState::Pure | GlobalState::PurifiedDouble { slice: None } => {
            Ok(derivative_principle(&abelian_measure(p)?, &rd)?.pruned())
        }
        GlobalState::Orbit(s) => {
            let m = heckman_sum(&orbit_heckman_terms(&p.rep, s, Some(&rd))?, Frame::Lattice(rep.group()))?;
            Ok(m.restrict_positive_chamber(&rd)?.pruned())
        }
        GlobalState::PurifiedDouble { slice: Some(s) } => purified_slice(&p.rep, s),
    }
}

/// Joint law of the marginal spectra: `p_K · DH^K / vol(M)` in the requested frame, of mass one.
pub fn eigenvalue_distribution(p: &MarginalProblem) -> DhResult<PiecewiseMeasure> {
    let rep = p.reported_rep()?;
    let rd = build_root_data(&rep.group());
    let k = nonabelian_measure(p)?;
    let weighted = k.times(&volume_polynomial(&rd));
    let mass = weighted.total_mass()?;
    if !mass.is_positive() {
        return Err(DhError::Precondition(
            "the measure has no mass in the open positive chamber; consider the purified double".into(),
        ));
    }
    let normalized = match &p.global {
        GlobalState::Pure | GlobalState::PurifiedDouble { slice: None } => {
            let full = match &p.global {
                GlobalState::Pure => p.rep.clone(),
                _ => extended_rep(&p.rep)?,
            };
            let n = full.dim()? as usize - 1;
            let vol = exact::factorial_q(n).recip();
            if mass != vol {
                return Err(DhError::Internal(format!(
                    "eigenvalue mass {} differs from the Liouville volume {}",
                    exact::fmt_q(&mass),
                    exact::fmt_q(&vol)
                )));
            }
            weighted.scaled(&vol.recip())
        }
        _ => weighted.scaled(&mass.recip()),
    };
    report(&normalized, &rep, p.report)
}

fn report(m: &PiecewiseMeasure, rep: &RepSpec, frame: ReportFrame) -> DhResult<PiecewiseMeasure> {
    match frame {
        ReportFrame::Weyl => Ok(m.clone()),
        ReportFrame::Spectra => {
            let (a, b) = spectra_map(rep);
            m.affine_pullback(&a, &b, Frame::Spectra(rep.group()))
        }
    }
}

/// Non-Abelian density of the purified double restricted to the fibre over a global spectrum,
/// in the Weyl frame of the original subsystems. Delta layers of the joint law are not sliced.
pub fn purified_slice(rep: &RepSpec, spectrum: &[Q]) -> DhResult<PiecewiseMeasure> {
    let ext = extended_rep(rep)?;
    let h = rep.dim()? as usize;
    if spectrum.len() != h {
        return Err(DhError::Precondition(format!("spectrum of length {} for dimension {h}", spectrum.len())));
    }
    let tr = spectrum.iter().fold(Q::zero(), |a, b| a + b);
    if !tr.is_one() {
        return Err(DhError::Precondition("global spectrum must have trace one".into()));
    }
    let z = from_diagonal(spectrum);
    let ws = weights_of(&ext)?;
    if ws.iter().any(|(_, m)| *m != 1) {
        return Err(DhError::Unsupported("slicing a purified double with repeated weights".into()));
    }
    let engine = DensityEngine::projective(ws.into_iter().map(|(w, _)| w.coords).collect())?;
    let rd_ext = build_root_data(&ext.group());
    let rd = build_root_data(&rep.group());
    let r = rd.rank();
    let mut planes: Vec<Hyperplane> = Vec::new();
    for hp in engine.arrangement().hyperplanes() {
        let (lx, lz) = hp.ell.split_at(r);
        let rhs = &hp.offset - exact::dot(lz, &z);
        if exact::is_zero_vec(lx) {
            if rhs.is_zero() {
                return Err(DhError::SingularPoint("the global spectrum lies on a wall of the joint law".into()));
            }
            continue;
        }
        planes.push(Hyperplane::new(lx, &rhs));
    }
    for i in 0..r {
        planes.push(Hyperplane::new(&exact::unit(r, i), &Q::zero()));
    }
    planes.sort();
    planes.dedup();
    let base: Vec<QVec> = weight_list(rep)?;
    let region = convex_hull(&dedup(base))?;
    let complex = crate::chambers::ChamberComplex::build(crate::chambers::ArrangementKind::Affine, region, planes);
    let keep: Vec<usize> =
        (0..complex.cells.len()).filter(|&i| rd.is_strictly_dominant(&complex.cells[i].interior_point)).collect();
    let mut densities = Vec::new();
    let subs: Vec<Polynomial> =
        (0..r).map(|i| Polynomial::var(r, i)).chain(z.iter().map(|v| Polynomial::constant(r, v.clone()))).collect();
    for &i in &keep {
        let mut x = complex.cells[i].interior_point.clone();
        x.extend(z.iter().cloned());
        let mut f = engine.density_at(&x)?;
        for a in &rd_ext.positive_roots {
            f = f.directional_derivative(&exact::neg(&a.coords))?;
        }
        densities.push(f.compose(&subs));
    }
    let cells: Vec<Cell> = keep.iter().map(|&i| complex.cells[i].clone()).collect();
    let complex = crate::chambers::ChamberComplex::assemble(complex.kind, r, complex.hyperplanes, cells);
    Ok(PiecewiseMeasure {
        frame: Frame::Lattice(rep.group()),
        complex,
        densities,
        layers: Vec::new(),
        support_in_region: true,
    }
    .pruned())
}

fn dedup(mut v: Vec<QVec>) -> Vec<QVec> {
    v.sort();
    v.dedup();
    v
}

/// Halfspace `normal · x ≤ bound` with a primitive integer normal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Inequality {
    pub normal: QVec,
    pub bound: Q,
}

impl Inequality {
    pub fn new(normal: &[Q], bound: &Q) -> Self {
        let h = Hyperplane::new(normal, bound);
        let i = normal.iter().position(|x| !x.is_zero()).expect("nonzero normal");
        if (&h.ell[i] / &normal[i]).is_negative() {
            Inequality { normal: exact::neg(&h.ell), bound: -h.offset }
        } else {
            Inequality { normal: h.ell, bound: h.offset }
        }
    }

    pub fn holds(&self, x: &[Q]) -> bool {
        exact::dot(&self.normal, x) <= self.bound
    }
}

/// Support of a non-Abelian measure as a convex polytope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentPolytope {
    pub vertices: Vec<QVec>,
    pub inequalities: Vec<Inequality>,
    /// Affine equations `normal · x = bound` when the polytope is not full-dimensional.
    pub equations: Vec<Inequality>,
    /// Supporting cells (full-dimensional case) or layer pieces (codimension one).
    pub num_pieces: usize,
}

impl MomentPolytope {
    pub fn contains(&self, x: &[Q]) -> bool {
        self.inequalities.iter().all(|i| i.holds(x))
            && self.equations.iter().all(|e| exact::dot(&e.normal, x) == e.bound)
    }
}

fn hull_inequalities(hull: &Cell) -> Vec<Inequality> {
    let mut out: Vec<Inequality> = hull.h_rep.iter().map(|k| Inequality::new(&k.normal, &k.bound)).collect();
    out.sort();
    out.dedup();
    out
}

/// Moment polytope of a problem, recovered from the cells where the non-Abelian density is nonzero.
pub fn moment_polytope(p: &MarginalProblem) -> DhResult<MomentPolytope> {
    let m = nonabelian_measure(p)?.pruned();
    polytope_of(&m)
}

/// Convex support of a pruned measure; fails if the union of pieces is not convex.
pub fn polytope_of(m: &PiecewiseMeasure) -> DhResult<MomentPolytope> {
    let r = m.dim();
    if !m.complex.cells.is_empty() {
        let mut pts: Vec<QVec> = m.complex.cells.iter().flat_map(|c| c.vertices.iter().cloned()).collect();
        pts = dedup(pts);
        let hull = convex_hull(&pts)?;
        let union: Q = m.complex.cells.iter().map(|c| c.volume()).fold(Q::zero(), |a, b| a + b);
        if union != hull.volume() {
            return Err(DhError::Internal("support is not convex".into()));
        }
        let vertices = dedup(hull.vertices.clone());
        return Ok(MomentPolytope {
            inequalities: hull_inequalities(&hull),
            vertices,
            equations: Vec::new(),
            num_pieces: m.complex.cells.len(),
        });
    }
    let Some(first) = m.layers.first() else {
        return Ok(MomentPolytope {
            vertices: Vec::new(),
            inequalities: Vec::new(),
            equations: Vec::new(),
            num_pieces: 0,
        });
    };
    if m.layers.iter().any(|l| l.plane != first.plane) {
        return Err(DhError::Internal("support spread over several hyperplanes is not convex".into()));
    }
    let frame = &first.frame;
    let equation = Inequality::new(&first.plane.ell, &first.plane.offset);
    let pieces: Vec<&Cell> = m.layers.iter().flat_map(|l| l.cells.iter()).collect();
    if r == 1 {
        return Ok(MomentPolytope {
            vertices: vec![frame.origin.clone()],
            inequalities: Vec::new(),
            equations: vec![equation],
            num_pieces: pieces.len(),
        });
    }
    let wpts = dedup(pieces.iter().flat_map(|c| c.vertices.iter().cloned()).collect());
    let hull = convex_hull(&wpts)?;
    let union: Q = pieces.iter().map(|c| c.volume()).fold(Q::zero(), |a, b| a + b);
    if union != hull.volume() {
        return Err(DhError::Internal("support is not convex".into()));
    }
    // n · w ≤ β with w = M (x − o)  ⇒  (Mᵀ n) · x ≤ β + n · M o
    let mo = exact::mat_vec(&frame.to_w, &frame.origin);
    let inequalities = {
        let mut v: Vec<Inequality> = hull
            .h_rep
            .iter()
            .map(|k| {
                let normal: QVec =
                    (0..r).map(|j| frame.to_w.iter().zip(&k.normal).map(|(row, n)| n * &row[j]).sum()).collect();
                Inequality::new(&normal, &(&k.bound + exact::dot(&k.normal, &mo)))
            })
            .collect();
        v.sort();
        v.dedup();
        v
    };
    Ok(MomentPolytope {
        vertices: dedup(hull.vertices.iter().map(|w| frame.embed(w)).collect()),
        inequalities,
        equations: vec![equation],
        num_pieces: pieces.len(),
    })
}

/// Expectation of a polynomial in spectra coordinates, by both routes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Average {
    /// Integral against the eigenvalue distribution.
    pub direct: Q,
    /// `∫ Π∂_α(p_K f) dDH^T / ∫ Π∂_α p_K dDH^T`; `None` when `f` is not Weyl invariant
    /// or the Abelian measure is unavailable.
    pub via_abelian: Option<Q>,
}

impl Average {
    pub fn value(&self) -> &Q {
        &self.direct
    }
}

/// `f` in spectra coordinates as a polynomial in Weyl coordinates.
pub fn spectra_to_weyl_poly(rep: &RepSpec, f: &Polynomial) -> DhResult<Polynomial> {
    let (a, b) = spectra_map(rep);
    let a_inv = exact::inverse(&a).ok_or_else(|| DhError::Internal("singular spectra map".into()))?;
    let off = exact::neg(&exact::mat_vec(&a_inv, &b));
    if f.nvars() != a.len() {
        return Err(DhError::FrameMismatch(format!("functional in {} variables for rank {}", f.nvars(), a.len())));
    }
    Ok(f.substitute_affine(&a_inv, &off))
}

/// Whether `F(s_i λ) = F(λ)` for every simple reflection.
pub fn is_weyl_invariant(rd: &RootData, f: &Polynomial) -> bool {
    let r = rd.rank();
    rd.simple_roots.iter().enumerate().all(|(i, alpha)| {
        // s_i(λ) = λ − λ_i α_i
        let rows: Vec<QVec> = (0..r)
            .map(|k| (0..r).map(|j| q((k == j) as i64) - if j == i { alpha[k].clone() } else { Q::zero() }).collect())
            .collect();
        f.substitute_affine(&rows, &exact::zeros(r)) == *f
    })
}

pub fn average_functional(p: &MarginalProblem, f: &Polynomial) -> DhResult<Average> {
    let rep = p.reported_rep()?;
    let dist = eigenvalue_distribution(&p.clone().in_frame(ReportFrame::Spectra))?;
    if f.nvars() != dist.dim() {
        return Err(DhError::FrameMismatch(format!("functional in {} variables for rank {}", f.nvars(), dist.dim())));
    }
    let direct = dist.integrate(f)?;
    let rd = build_root_data(&rep.group());
    let big_f = spectra_to_weyl_poly(&rep, f)?;
    let via_abelian = if is_weyl_invariant(&rd, &big_f) {
        match abelian_measure(p) {
            Ok(ab) => {
                let pk = volume_polynomial(&rd);
                let mut num = &pk * &big_f;
                let mut den = pk;
                for a in &rd.positive_roots {
                    num = num.directional_derivative(&a.coords)?;
                    den = den.directional_derivative(&a.coords)?;
                }
                Some(ab.integrate(&num)? / ab.integrate(&den)?)
            }
            Err(DhError::Unsupported(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    if let Some(v) = &via_abelian {
        if *v != direct {
            return Err(DhError::Internal(format!(
                "averages disagree: {} directly, {} via the Abelian measure",
                exact::fmt_q(&direct),
                exact::fmt_q(v)
            )));
        }
    }
    Ok(Average { direct, via_abelian })
}

/// `Σ_j λ̂_j²` of subsystem `which` in spectra coordinates.
pub fn purity_polynomial(rep: &RepSpec, which: usize) -> DhResult<Polynomial> {
    let factors = acting_factors(rep);
    let r: usize = factors.iter().map(|(d, _)| d - 1).sum();
    let (d, _) = *factors.get(which).ok_or_else(|| DhError::Precondition(format!("no subsystem {which}")))?;
    let off: usize = factors[..which].iter().map(|(d, _)| d - 1).sum();
    let mut acc = Polynomial::zero(r);
    let mut last = Polynomial::one(r);
    for i in 0..d - 1 {
        let y = Polynomial::var(r, off + i);
        acc = &acc + &y.pow(2);
        last = &last - &y;
    }
    Ok(&acc + &last.pow(2))
}

/// Numerical integral with an error estimate from doubling the rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Approximate {
    pub value: f64,
    pub error_estimate: f64,
}

fn simplex_quadrature(simplex: &[QVec], order: usize, f: &mut dyn FnMut(&[f64]) -> f64) -> f64 {
    let k = simplex.len() - 1;
    let v: Vec<Vec<f64>> = simplex.iter().map(|p| p.iter().map(exact::to_f64).collect()).collect();
    if k == 0 {
        return f(&v[0]);
    }
    let diffs: Vec<QVec> = simplex[1..].iter().map(|p| exact::sub(p, &simplex[0])).collect();
    let vol = if diffs.len() == diffs[0].len() {
        exact::to_f64(&exact::det(&diffs).abs()) / (1..=k).map(|i| i as f64).product::<f64>()
    } else {
        return 0.0;
    };
    let rule = GaussLegendre::new(NonZeroUsize::new(order).expect("positive order"));
    let nodes: Vec<(f64, f64)> = rule.as_node_weight_pairs().iter().map(|&(x, w)| ((x + 1.0) / 2.0, w / 2.0)).collect();
    let mut total = 0.0;
    let mut idx = vec![0usize; k];
    loop {
        // collapsed coordinates → barycentric weights
        let mut rest = 1.0;
        let mut jac = 1.0;
        let mut weight = 1.0;
        let mut point = v[0].clone();
        for (i, &ix) in idx.iter().enumerate() {
            let (u, w) = nodes[ix];
            let b = rest * u;
            for (pj, (vi, v0)) in point.iter_mut().zip(v[i + 1].iter().zip(&v[0])) {
                *pj += b * (vi - v0);
            }
            jac *= (1.0 - u).powi((k - 1 - i) as i32);
            rest *= 1.0 - u;
            weight *= w;
        }
        total += weight * jac * f(&point);
        let mut pos = 0;
        while pos < k {
            idx[pos] += 1;
            if idx[pos] < order {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == k {
            break;
        }
    }
    total * vol * (1..=k).map(|i| i as f64).product::<f64>()
}

fn integrate_numeric(m: &PiecewiseMeasure, f: &dyn Fn(&[f64]) -> f64, order: usize) -> f64 {
    let mut total = 0.0;
    for (c, d) in m.complex.cells.iter().zip(&m.densities) {
        if d.is_zero() {
            continue;
        }
        for s in c.triangulate() {
            total += simplex_quadrature(&s, order, &mut |x| f(x) * d.eval_f64(x));
        }
    }
    for l in &m.layers {
        let embed = |w: &[f64]| -> Vec<f64> {
            let mut x: Vec<f64> = l.frame.origin.iter().map(exact::to_f64).collect();
            for (wi, b) in w.iter().zip(&l.frame.basis) {
                for (xj, bj) in x.iter_mut().zip(b) {
                    *xj += wi * exact::to_f64(bj);
                }
            }
            x
        };
        for (c, d) in l.cells.iter().zip(&l.densities) {
            if l.frame.basis.is_empty() {
                total += f(&embed(&[])) * exact::to_f64(&d.constant_term());
                continue;
            }
            for s in c.triangulate() {
                total += simplex_quadrature(&s, order, &mut |w| f(&embed(w)) * d.eval_f64(w));
            }
        }
    }
    total
}

/// Expectation of an arbitrary function of the spectra coordinates by Gauss–Legendre
/// quadrature on every cell; approximate by construction.
pub fn average_numeric(p: &MarginalProblem, f: &dyn Fn(&[f64]) -> f64, order: usize) -> DhResult<Approximate> {
    let dist = eigenvalue_distribution(&p.clone().in_frame(ReportFrame::Spectra))?;
    let coarse = integrate_numeric(&dist, f, order.max(1));
    let fine = integrate_numeric(&dist, f, 2 * order.max(1));
    Ok(Approximate { value: fine, error_estimate: (fine - coarse).abs() })
}

/// Von Neumann entropy (natural log) of subsystem `which` as a function of spectra coordinates.
pub fn entropy_fn(rep: &RepSpec, which: usize) -> DhResult<impl Fn(&[f64]) -> f64> {
    let factors = acting_factors(rep);
    let (d, _) = *factors.get(which).ok_or_else(|| DhError::Precondition(format!("no subsystem {which}")))?;
    let off: usize = factors[..which].iter().map(|(d, _)| d - 1).sum();
    Ok(move |y: &[f64]| {
        let mut last = 1.0;
        let mut h = 0.0;
        for &p in &y[off..off + d - 1] {
            last -= p;
            if p > 0.0 {
                h -= p * p.ln();
            }
        }
        if last > 0.0 {
            h -= last * last.ln();
        }
        h
    })
}

/// Problem description as read from JSON; rationals are strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    /// `distinguishable`, `bosons`, `fermions`, or `bipartite` (only the first factor acts).
    pub kind: String,
    pub dims: Vec<usize>,
    #[serde(default)]
    pub particles: Option<usize>,
    /// Global spectrum for a mixed state.
    #[serde(default)]
    pub spectrum: Option<Vec<String>>,
    #[serde(default)]
    pub purify: bool,
    #[serde(default = "default_frame")]
    pub frame: ReportFrame,
}

fn default_frame() -> ReportFrame {
    ReportFrame::Spectra
}

impl ProblemSpec {
    pub fn to_problem(&self) -> DhResult<MarginalProblem> {
        let need_n = || self.particles.ok_or_else(|| DhError::Parse(format!("kind {} needs `particles`", self.kind)));
        let one_dim = || match self.dims.as_slice() {
            [d] => Ok(*d),
            _ => Err(DhError::Parse(format!("kind {} takes exactly one dimension", self.kind))),
        };
        let rep = match self.kind.as_str() {
            "distinguishable" => RepSpec::tensor(&self.dims),
            "bosons" => RepSpec::sym(one_dim()?, need_n()?),
            "fermions" => RepSpec::alt(one_dim()?, need_n()?),
            "bipartite" => match self.dims.as_slice() {
                [a, b] => RepSpec::with_spectator(*a, *b),
                _ => return Err(DhError::Parse("kind bipartite takes two dimensions".into())),
            },
            other => return Err(DhError::Parse(format!("unknown particle kind `{other}`"))),
        };
        if self.dims.iter().any(|&d| d < 2) {
            return Err(DhError::Parse("every dimension must be at least 2".into()));
        }
        let spectrum = self
            .spectrum
            .as_ref()
            .map(|s| s.iter().map(|x| exact::parse_q(x)).collect::<DhResult<QVec>>())
            .transpose()?;
        let global = match (spectrum, self.purify) {
            (None, false) => GlobalState::Pure,
            (Some(s), false) => GlobalState::Orbit(s),
            (slice, true) => GlobalState::PurifiedDouble { slice },
        };
        Ok(MarginalProblem { rep, global, report: self.frame })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{qf, qvec};

    #[test]
    fn spectra_round_trip() {
        let rep = RepSpec::tensor(&[2, 3]);
        let x = vec![q(1), qf(1, 3), qf(1, 6)];
        let s = to_spectrum(&rep, &x).unwrap();
        assert_eq!(s[0], vec![q(1), q(0)]);
        assert_eq!(to_weyl(&rep, &s).unwrap(), x);
        let origin = to_spectrum(&rep, &exact::zeros(3)).unwrap();
        assert_eq!(origin[1], vec![qf(1, 3); 3]);
        assert!(to_weyl(&rep, &[qvec(&[1, 1]), qvec(&[1, 0, 0])]).is_err());
        let (a, b) = spectra_map(&rep);
        let y = vec![q(1), qf(1, 2), qf(1, 3)];
        assert_eq!(
            exact::add(&exact::mat_vec(&a, &y), &b),
            to_weyl(&rep, &[vec![q(1), q(0)], vec![qf(1, 2), qf(1, 3), qf(1, 6)]]).unwrap()
        );
    }

    #[test]
    fn two_qubit_distribution() {
        let p = MarginalProblem::pure(RepSpec::tensor(&[2, 2]));
        let d = eigenvalue_distribution(&p).unwrap();
        assert_eq!(d.total_mass().unwrap(), q(1));
        let purity = purity_polynomial(&RepSpec::tensor(&[2, 2]), 0).unwrap();
        let avg = average_functional(&p, &purity).unwrap();
        assert_eq!(avg.direct, qf(4, 5));
        assert_eq!(avg.via_abelian, Some(qf(4, 5)));
    }

    #[test]
    fn bosonic_purity() {
        for n in 2..=4 {
            let rep = RepSpec::sym(2, n);
            let p = MarginalProblem::pure(rep.clone());
            let avg = average_functional(&p, &purity_polynomial(&rep, 0).unwrap()).unwrap();
            assert_eq!(avg.direct, qf(1, 2) + qf(1, 2 * n as i64));
        }
    }

    #[test]
    fn screening_rejects_large_environment() {
        let p = MarginalProblem::pure(RepSpec::tensor(&[2, 4]));
        assert!(matches!(eigenvalue_distribution(&p), Err(DhError::Precondition(_))));
    }

    #[test]
    fn entropy_quadrature_converges() {
        let p = MarginalProblem::pure(RepSpec::tensor(&[2, 2]));
        let e = average_numeric(&p, &entropy_fn(&RepSpec::tensor(&[2, 2]), 0).unwrap(), 8).unwrap();
        // ∫_{1/2}^1 24 (s − 1/2)² h(s) ds = 1/3 nats; the log endpoint singularity slows convergence
        assert!((e.value - 1.0 / 3.0).abs() < 1e-4, "{}", e.value);
        assert!(e.error_estimate < 1e-3 && e.error_estimate > 0.0);
    }
}
