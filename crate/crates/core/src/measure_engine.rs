//! Abelian and non-Abelian Duistermaat–Heckman measures.
//!
//! Densities are computed by wall crossing: the polynomial on a regular cell is
//! the sum of the jumps met along a generic straight walk from a point where the
//! density vanishes. Walls with more than the minimal number of weights recurse
//! into the weights on the wall, expressed in the wall's lattice frame.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::chambers::{
    affine_rank, convex_hull, Arrangement, ArrangementKind, Cell, ChamberComplex, Constraint, Hyperplane,
};
use crate::error::{DhError, DhResult};
use crate::exact::{self, q, QVec, Q};
use crate::polyring::{minimal_wall_jump, residue_jump, Polynomial, PolynomialRepr};
use crate::rootdata::{Frame, RationalVector, RootData};

/// Lattice frame of a hyperplane: `λ = origin + Σ w_i basis_i + s u` with `ℓ(u) = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaneFrame {
    pub origin: QVec,
    pub basis: Vec<QVec>,
    pub u: QVec,
    /// First `r − 1` rows of `[basis | u]^{-1}`.
    pub to_w: Vec<QVec>,
}

impl PlaneFrame {
    /// Frame with the given origin on the plane.
    pub fn with_origin(plane: &Hyperplane, origin: QVec) -> Self {
        let r = plane.ell.len();
        let (basis, u) = exact::kernel_lattice_frame(&plane.ell_int());
        let mut cols = basis.clone();
        cols.push(u.clone());
        let m: Vec<QVec> = (0..r).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect();
        let inv = exact::inverse(&m).expect("unimodular completion is invertible");
        PlaneFrame { origin, basis, u, to_w: inv[..r - 1].to_vec() }
    }

    /// Canonical frame with origin `offset · u`.
    pub fn canonical(plane: &Hyperplane) -> Self {
        let (_, u) = exact::kernel_lattice_frame(&plane.ell_int());
        Self::with_origin(plane, exact::scale(&u, &plane.offset))
    }

    pub fn to_w(&self, lambda: &[Q]) -> QVec {
        exact::mat_vec(&self.to_w, &exact::sub(lambda, &self.origin))
    }

    pub fn embed(&self, w: &[Q]) -> QVec {
        let mut x = self.origin.clone();
        for (wi, b) in w.iter().zip(&self.basis) {
            x = exact::add(&x, &exact::scale(b, wi));
        }
        x
    }

    /// A λ-polynomial restricted to the plane, in w-coordinates.
    pub fn restrict(&self, p: &Polynomial) -> Polynomial {
        let r = self.origin.len();
        let rows: Vec<QVec> = (0..r).map(|i| self.basis.iter().map(|b| b[i].clone()).collect()).collect();
        if self.basis.is_empty() {
            return Polynomial::constant(0, p.eval(&self.origin));
        }
        p.substitute_affine(&rows, &self.origin)
    }

    /// A w-polynomial extended to λ, constant along `u`.
    pub fn extend(&self, p: &Polynomial) -> Polynomial {
        let r = self.origin.len();
        if self.basis.is_empty() {
            return Polynomial::constant(r, p.constant_term());
        }
        let offset = exact::neg(&exact::mat_vec(&self.to_w, &self.origin));
        p.substitute_affine(&self.to_w, &offset)
    }
}

struct WallData {
    frame: PlaneFrame,
    off_wall: Vec<QVec>,
    minimal_constant: Option<Q>,
    sub: Option<DensityEngine>,
    homogeneity: u32,
}

/// Piecewise-polynomial density of a projective weight system (affine kind) or
/// of a cone pushforward (cone kind), evaluated cell by cell on demand.
pub struct DensityEngine {
    arr: Arrangement,
    hull: Option<Cell>,
    gamma: Option<QVec>,
    walls: Vec<OnceLock<DhResult<WallData>>>,
    memo: Mutex<HashMap<Vec<i8>, Polynomial>>,
    jumps: Mutex<HashMap<(usize, Vec<i8>), Polynomial>>,
}

const MAX_ATTEMPTS: u64 = 64;

impl DensityEngine {
    /// Engine for the weights of a projective space; weights must be distinct.
    pub fn projective(weights: Vec<QVec>) -> DhResult<Self> {
        let mut sorted = weights.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(DhError::Precondition(
                "repeated weights: the single-summand recursion needs one-dimensional weight spaces; \
                 use the cone or Heckman path instead"
                    .into(),
            ));
        }
        let arr = Arrangement::new(weights, ArrangementKind::Affine)?;
        let hull = Some(arr.hull_cell()?);
        Ok(Self::from_arrangement(arr, hull, None))
    }

    /// Engine for the pushforward of Lebesgue measure on `R^n_{≥0}` along the generators.
    pub fn cone(generators: Vec<QVec>) -> DhResult<Self> {
        if generators.iter().any(|g| exact::is_zero_vec(g)) {
            return Err(DhError::Precondition("zero generator: the cone measure is not locally finite".into()));
        }
        let arr = Arrangement::new(generators, ArrangementKind::Cone)?;
        let gamma = pointing_covector(&arr.points)?;
        Ok(Self::from_arrangement(arr, None, Some(gamma)))
    }

    fn from_arrangement(arr: Arrangement, hull: Option<Cell>, gamma: Option<QVec>) -> Self {
        let walls = (0..arr.walls.len()).map(|_| OnceLock::new()).collect();
        DensityEngine { arr, hull, gamma, walls, memo: Mutex::new(HashMap::new()), jumps: Mutex::new(HashMap::new()) }
    }

    pub fn arrangement(&self) -> &Arrangement {
        &self.arr
    }

    pub fn kind(&self) -> ArrangementKind {
        self.arr.kind
    }

    pub fn dim(&self) -> usize {
        self.arr.dim
    }

    /// Upper bound on the density degree.
    pub fn degree_bound(&self) -> usize {
        match self.arr.kind {
            ArrangementKind::Affine => self.arr.points.len() - 1 - self.arr.dim,
            ArrangementKind::Cone => self.arr.points.len() - self.arr.dim,
        }
    }

    fn wall_data(&self, i: usize) -> DhResult<&WallData> {
        self.walls[i].get_or_init(|| self.build_wall(i)).as_ref().map_err(|e| e.clone())
    }

    fn build_wall(&self, i: usize) -> DhResult<WallData> {
        let wall = &self.arr.walls[i];
        let r = self.arr.dim;
        let kind = self.arr.kind;
        let origin = match kind {
            ArrangementKind::Affine => wall.hull[0].clone(),
            ArrangementKind::Cone => exact::zeros(r),
        };
        let frame = PlaneFrame::with_origin(&wall.plane, origin.clone());
        let on: Vec<QVec> = wall.on_wall_indices.iter().map(|&k| self.arr.points[k].clone()).collect();
        let off_wall: Vec<QVec> = (0..self.arr.points.len())
            .filter(|k| !wall.on_wall_indices.contains(k))
            .map(|k| self.arr.points[k].clone())
            .collect();
        let m = on.len();
        let (minimal, homogeneity) = match kind {
            ArrangementKind::Affine => (m == r, m - r),
            ArrangementKind::Cone => (m + 1 == r, m + 1 - r),
        };
        let mut minimal_constant = None;
        let mut sub = None;
        if minimal {
            let mut rows: Vec<QVec> = match kind {
                ArrangementKind::Affine => on[1..].iter().map(|w| exact::sub(w, &origin)).collect(),
                ArrangementKind::Cone => on.clone(),
            };
            rows.push(frame.u.clone());
            minimal_constant = Some(exact::det(&rows).abs().recip());
        } else {
            let sub_points: Vec<QVec> = on.iter().map(|w| frame.to_w(w)).collect();
            sub = Some(match kind {
                ArrangementKind::Affine => DensityEngine::projective(sub_points)?,
                ArrangementKind::Cone => DensityEngine::cone(sub_points)?,
            });
        }
        Ok(WallData { frame, off_wall, minimal_constant, sub, homogeneity: homogeneity as u32 })
    }

    /// `f_+ − f_−` across wall `i` at a generic point `c` of its hyperplane.
    fn jump(&self, i: usize, c: &[Q]) -> DhResult<Polynomial> {
        let wd = self.wall_data(i)?;
        let wall = &self.arr.walls[i];
        let ell = &wall.plane.ell;
        let (key, f_w) = match (&wd.minimal_constant, &wd.sub) {
            (Some(f), _) => {
                if !wall.hull_contains(c, self.arr.kind) {
                    return Ok(Polynomial::zero(self.arr.dim));
                }
                ((i, Vec::new()), None::<Polynomial>.or(Some(Polynomial::constant(self.arr.dim, f.clone()))))
            }
            (None, Some(sub)) => {
                let wc = wd.frame.to_w(c);
                let signs = sub.arr.sign_vector(&wc);
                if signs.contains(&0) {
                    return Err(DhError::SingularPoint("crossing point is singular on its wall".into()));
                }
                ((i, signs), None)
            }
            (None, None) => return Err(DhError::Internal("wall without data".into())),
        };
        if let Some(j) = self.jumps.lock().unwrap().get(&key) {
            return Ok(j.clone());
        }
        let j = match (&wd.minimal_constant, f_w) {
            (Some(f), _) => minimal_wall_jump(f, &wd.frame.origin, &wd.off_wall, ell)?,
            (None, _) => {
                let sub = wd.sub.as_ref().unwrap();
                let fw = sub.density_at(&wd.frame.to_w(c))?;
                if fw.is_zero() {
                    Polynomial::zero(self.arr.dim)
                } else {
                    residue_jump(&wd.frame.extend(&fw), &wd.frame.origin, &wd.off_wall, ell, wd.homogeneity)?
                }
            }
        };
        self.jumps.lock().unwrap().insert(key, j.clone());
        Ok(j)
    }

    /// Density polynomial of the regular cell containing `x`.
    pub fn density_at(&self, x: &[Q]) -> DhResult<Polynomial> {
        if x.len() != self.arr.dim {
            return Err(DhError::FrameMismatch(format!("point of length {} in dimension {}", x.len(), self.arr.dim)));
        }
        let signs = self.arr.sign_vector(x);
        if signs.contains(&0) {
            return Err(DhError::SingularPoint(format!("{:?}", x.iter().map(exact::fmt_q).collect::<Vec<_>>())));
        }
        if let Some(p) = self.memo.lock().unwrap().get(&signs) {
            return Ok(p.clone());
        }
        let p = self.compute(x, None)?;
        self.memo.lock().unwrap().insert(signs, p.clone());
        Ok(p)
    }

    /// Density at `x` recomputed from the walk starting at base-point attempt `from_attempt`.
    pub fn density_from(&self, x: &[Q], from_attempt: u64) -> DhResult<Polynomial> {
        self.compute(x, Some(from_attempt))
    }

    fn compute(&self, x: &[Q], first_attempt: Option<u64>) -> DhResult<Polynomial> {
        let r = self.arr.dim;
        if let Some(h) = &self.hull {
            if !h.contains_strictly(x) {
                return Ok(Polynomial::zero(r));
            }
        }
        let start = first_attempt.unwrap_or(0);
        'attempts: for attempt in start..start + MAX_ATTEMPTS {
            let base = self.arr.base_point(attempt);
            if let Some(g) = &self.gamma {
                if !exact::dot(g, &base).is_negative() {
                    continue;
                }
            }
            let Some(crossings) = self.arr.walk(&base, x, false) else { continue };
            let mut acc = Polynomial::zero(r);
            for c in crossings {
                match self.jump(c.wall, &c.point) {
                    Ok(j) => acc = if c.upward { &acc + &j } else { &acc - &j },
                    Err(DhError::SingularPoint(_)) => continue 'attempts,
                    Err(e) => return Err(e),
                }
            }
            if acc.degree().is_some_and(|d| d as usize > self.degree_bound()) {
                return Err(DhError::Internal(format!("density degree exceeds {}", self.degree_bound())));
            }
            return Ok(acc);
        }
        Err(DhError::Internal("no generic walk found".into()))
    }

    /// Checks the closed-form minimal-wall jump against the residue formula on every
    /// minimal wall; returns the number of walls checked.
    pub fn verify_minimal_walls(&self) -> DhResult<usize> {
        let mut n = 0;
        for i in 0..self.arr.walls.len() {
            let wd = self.wall_data(i)?;
            if let Some(f) = &wd.minimal_constant {
                let ell = &self.arr.walls[i].plane.ell;
                let closed = minimal_wall_jump(f, &wd.frame.origin, &wd.off_wall, ell)?;
                let res = residue_jump(
                    &Polynomial::constant(self.arr.dim, f.clone()),
                    &wd.frame.origin,
                    &wd.off_wall,
                    ell,
                    0,
                )?;
                if closed != res {
                    return Err(DhError::Internal(format!("minimal wall {i}: closed form {closed} ≠ residue {res}")));
                }
                n += 1;
            }
        }
        Ok(n)
    }

    /// Materializes all cells inside `region` (the weight hull by default for affine kind).
    pub fn to_measure(&self, frame: Frame, region: Option<Cell>) -> DhResult<PiecewiseMeasure> {
        let support_in_region = self.arr.kind == ArrangementKind::Affine || region.is_none();
        let complex = self.arr.enumerate_cells(region)?;
        let densities =
            complex.cells.iter().map(|c| self.density_at(&c.interior_point)).collect::<DhResult<Vec<_>>>()?;
        let support_in_region = support_in_region && self.arr.kind == ArrangementKind::Affine;
        Ok(PiecewiseMeasure { frame, complex, densities, layers: Vec::new(), support_in_region })
    }
}

/// A covector strictly positive on every generator, or an error if the cone contains a line.
pub fn pointing_covector(gens: &[QVec]) -> DhResult<QVec> {
    let r = gens[0].len();
    let fail = || DhError::Precondition("generators do not span a proper cone (the cone contains a line)".into());
    if r == 1 {
        let s = exact::sign(&gens[0][0]);
        if gens.iter().all(|g| exact::sign(&g[0]) == s) {
            return Ok(vec![q(s as i64)]);
        }
        return Err(fail());
    }
    let mut gamma = exact::zeros(r);
    for s in exact::subsets(gens.len(), r - 1) {
        let rows: Vec<QVec> = s.iter().map(|&i| gens[i].clone()).collect();
        let ns = exact::nullspace(&rows, r);
        if ns.len() != 1 {
            continue;
        }
        let n = &ns[0];
        let vals: Vec<i8> = gens.iter().map(|g| exact::sign(&exact::dot(n, g))).collect();
        if vals.iter().all(|&v| v >= 0) {
            gamma = exact::add(&gamma, n);
        } else if vals.iter().all(|&v| v <= 0) {
            gamma = exact::sub(&gamma, n);
        }
    }
    if gens.iter().all(|g| exact::dot(&gamma, g).is_positive()) {
        Ok(gamma)
    } else {
        Err(fail())
    }
}

/// Codimension-one layer `g · δ_H` with `g` piecewise polynomial in the plane's lattice frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaLayer {
    pub plane: Hyperplane,
    pub frame: PlaneFrame,
    /// Pieces in w-coordinates; for rank one the single piece is a point.
    pub cells: Vec<Cell>,
    pub densities: Vec<Polynomial>,
}

impl DeltaLayer {
    pub fn mass(&self) -> DhResult<Q> {
        let mut total = Q::zero();
        for (c, d) in self.cells.iter().zip(&self.densities) {
            total += c.integrate(d)?;
        }
        Ok(total)
    }

    /// `∫ f g dw` for a λ-polynomial `f`.
    pub fn integrate(&self, f: &Polynomial) -> DhResult<Q> {
        let fw = self.frame.restrict(f);
        let mut total = Q::zero();
        for (c, d) in self.cells.iter().zip(&self.densities) {
            total += c.integrate(&(&fw * d))?;
        }
        Ok(total)
    }

    /// Layer density at a point of the plane that is interior to one piece.
    pub fn density_at(&self, lambda: &[Q]) -> DhResult<Q> {
        if !self.plane.value(lambda).is_zero() {
            return Ok(Q::zero());
        }
        let w = self.frame.to_w(lambda);
        for (c, d) in self.cells.iter().zip(&self.densities) {
            if c.contains_strictly(&w) {
                return Ok(d.eval(&w));
            }
            if c.contains(&w) && !d.is_zero() {
                return Err(DhError::SingularPoint("point on the boundary of a layer piece".into()));
            }
        }
        Ok(Q::zero())
    }
}

/// Finite union of polynomial pieces plus codimension-one layers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseMeasure {
    pub frame: Frame,
    pub complex: ChamberComplex,
    pub densities: Vec<Polynomial>,
    pub layers: Vec<DeltaLayer>,
    /// Whether the measure vanishes outside the union of the cells.
    pub support_in_region: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedPointMass {
    pub point: QVec,
    pub sign: i8,
    pub weight: Q,
}

impl SignedPointMass {
    pub fn new(point: QVec, sign: i8) -> Self {
        SignedPointMass { point, sign, weight: Q::one() }
    }

    pub fn coefficient(&self) -> Q {
        &self.weight * q(self.sign as i64)
    }
}

impl PiecewiseMeasure {
    pub fn dim(&self) -> usize {
        self.complex.dim
    }

    /// Density at a regular point; zero outside the support.
    pub fn evaluate(&self, x: &[Q]) -> DhResult<Q> {
        if x.len() != self.dim() {
            return Err(DhError::FrameMismatch(format!("point of length {} in dimension {}", x.len(), self.dim())));
        }
        for (c, d) in self.complex.cells.iter().zip(&self.densities) {
            if c.contains_strictly(x) {
                return Ok(d.eval(x));
            }
            if c.contains(x) {
                return Err(DhError::SingularPoint(format!(
                    "{:?} lies on a cell boundary",
                    x.iter().map(exact::fmt_q).collect::<Vec<_>>()
                )));
            }
        }
        if self.support_in_region {
            Ok(Q::zero())
        } else {
            Err(DhError::Precondition("point lies outside the computed region".into()))
        }
    }

    /// Polynomial of the cell whose interior contains `x`, or zero outside.
    pub fn polynomial_at(&self, x: &[Q]) -> DhResult<Polynomial> {
        match self.complex.locate_strict(x) {
            Some(i) => Ok(self.densities[i].clone()),
            None if self.complex.locate(x).is_some() => Err(DhError::SingularPoint("cell boundary".into())),
            None if self.support_in_region => Ok(Polynomial::zero(self.dim())),
            None => Err(DhError::Precondition("point lies outside the computed region".into())),
        }
    }

    pub fn total_mass(&self) -> DhResult<Q> {
        self.integrate(&Polynomial::one(self.dim()))
    }

    /// `∫ f dm` including layers.
    pub fn integrate(&self, f: &Polynomial) -> DhResult<Q> {
        let mut total = Q::zero();
        for (c, d) in self.complex.cells.iter().zip(&self.densities) {
            if !d.is_zero() {
                total += c.integrate(&(f * d))?;
            }
        }
        for l in &self.layers {
            total += l.integrate(f)?;
        }
        Ok(total)
    }

    /// Maximal density degree over all cells.
    pub fn max_degree(&self) -> Option<u32> {
        self.densities.iter().filter_map(|d| d.degree()).max()
    }

    pub fn support_cells(&self) -> Vec<&Cell> {
        self.complex.cells.iter().zip(&self.densities).filter(|(_, d)| !d.is_zero()).map(|(c, _)| c).collect()
    }

    /// Restricts to the open positive Weyl chamber `λ_i > 0`.
    pub fn restrict_positive_chamber(&self, rd: &RootData) -> DhResult<PiecewiseMeasure> {
        self.check_frame(rd)?;
        let r = self.dim();
        let walls: Vec<Hyperplane> = (0..r).map(|i| Hyperplane::new(&exact::unit(r, i), &Q::zero())).collect();
        let (complex, parents) = self.complex.refine(&walls);
        let keep: Vec<usize> =
            (0..complex.cells.len()).filter(|&i| rd.is_strictly_dominant(&complex.cells[i].interior_point)).collect();
        let cells: Vec<Cell> = keep.iter().map(|&i| complex.cells[i].clone()).collect();
        let densities: Vec<Polynomial> = keep.iter().map(|&i| self.densities[parents[i]].clone()).collect();
        let complex = ChamberComplex::assemble(complex.kind, r, complex.hyperplanes, cells);
        let layers = self.layers.iter().map(clip_layer_positive).filter(|l| !l.cells.is_empty()).collect();
        Ok(PiecewiseMeasure {
            frame: self.frame.clone(),
            complex,
            densities,
            layers,
            support_in_region: self.support_in_region,
        })
    }

    fn check_frame(&self, rd: &RootData) -> DhResult<()> {
        if self.dim() != rd.rank() {
            return Err(DhError::FrameMismatch(format!("measure of dimension {} vs rank {}", self.dim(), rd.rank())));
        }
        if let Frame::Lattice(g) = &self.frame {
            if g != &rd.group {
                return Err(DhError::FrameMismatch(format!("{} vs {}", self.frame, rd.frame())));
            }
        }
        Ok(())
    }

    /// Total density polynomial on the layer pieces through `lambda`, summed over layers.
    pub fn layer_density_at(&self, lambda: &[Q]) -> DhResult<Q> {
        let mut total = Q::zero();
        for l in &self.layers {
            total += l.density_at(lambda)?;
        }
        Ok(total)
    }

    /// Drops cells with zero density; the result is used only for support and integration.
    pub fn pruned(&self) -> PiecewiseMeasure {
        let keep: Vec<usize> = (0..self.densities.len()).filter(|&i| !self.densities[i].is_zero()).collect();
        let cells = keep.iter().map(|&i| self.complex.cells[i].clone()).collect();
        let densities = keep.iter().map(|&i| self.densities[i].clone()).collect();
        let complex = ChamberComplex::assemble(self.complex.kind, self.dim(), self.complex.hyperplanes.clone(), cells);
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let keep: Vec<usize> = (0..l.densities.len()).filter(|&i| !l.densities[i].is_zero()).collect();
                DeltaLayer {
                    plane: l.plane.clone(),
                    frame: l.frame.clone(),
                    cells: keep.iter().map(|&i| l.cells[i].clone()).collect(),
                    densities: keep.iter().map(|&i| l.densities[i].clone()).collect(),
                }
            })
            .filter(|l| !l.cells.is_empty())
            .collect();
        PiecewiseMeasure {
            frame: self.frame.clone(),
            complex,
            densities,
            layers,
            support_in_region: self.support_in_region,
        }
    }
}

/// Pulls a cell back along `x = A y + b`.
fn pull_back_cell(c: &Cell, a: &[QVec], b: &[Q], a_inv: &[QVec]) -> Cell {
    let h_rep = c
        .h_rep
        .iter()
        .map(|k| {
            let normal: QVec =
                (0..a_inv.len()).map(|j| a.iter().zip(&k.normal).map(|(row, n)| n * &row[j]).sum()).collect();
            Constraint { normal, bound: &k.bound - exact::dot(&k.normal, b), plane: k.plane }
        })
        .collect();
    let back = |x: &QVec| exact::mat_vec(a_inv, &exact::sub(x, b));
    Cell {
        h_rep,
        vertices: c.vertices.iter().map(back).collect(),
        interior_point: back(&c.interior_point),
        bounded: c.bounded,
    }
}

impl PiecewiseMeasure {
    /// The same measure in coordinates `y` with `x = A y + b`; densities pick up `|det A|`.
    pub fn affine_pullback(&self, a: &[QVec], b: &[Q], frame: Frame) -> DhResult<PiecewiseMeasure> {
        let r = self.dim();
        if a.len() != r || b.len() != r || a.iter().any(|row| row.len() != r) {
            return Err(DhError::FrameMismatch("affine map does not match the measure dimension".into()));
        }
        let a_inv = exact::inverse(a).ok_or_else(|| DhError::Precondition("affine map is singular".into()))?;
        let jac = exact::det(a).abs();
        let hyperplanes: Vec<Hyperplane> = self
            .complex
            .hyperplanes
            .iter()
            .map(|h| {
                let normal: QVec = (0..r).map(|j| a.iter().zip(&h.ell).map(|(row, n)| n * &row[j]).sum()).collect();
                Hyperplane::new(&normal, &(&h.offset - exact::dot(&h.ell, b)))
            })
            .collect();
        let cells: Vec<Cell> = self.complex.cells.iter().map(|c| pull_back_cell(c, a, b, &a_inv)).collect();
        let densities = self.densities.iter().map(|d| d.substitute_affine(a, b).scale(&jac)).collect();
        let complex = ChamberComplex::assemble(self.complex.kind, r, hyperplanes, cells);
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let normal: QVec = (0..r).map(|j| a.iter().zip(&l.plane.ell).map(|(row, n)| n * &row[j]).sum()).collect();
            let plane = Hyperplane::new(&normal, &(&l.plane.offset - exact::dot(&l.plane.ell, b)));
            let pf = PlaneFrame::canonical(&plane);
            // w_old = T w_new + e
            let t: Vec<QVec> = l
                .frame
                .to_w
                .iter()
                .map(|row| pf.basis.iter().map(|bv| exact::dot(row, &exact::mat_vec(a, bv))).collect())
                .collect();
            let e = l.frame.to_w(&exact::add(&exact::mat_vec(a, &pf.origin), b));
            let (cells, densities) = if t.is_empty() {
                (l.cells.clone(), l.densities.clone())
            } else {
                let t_inv = exact::inverse(&t).ok_or_else(|| DhError::Internal("singular layer frame map".into()))?;
                let tj = exact::det(&t).abs();
                (
                    l.cells.iter().map(|c| pull_back_cell(c, &t, &e, &t_inv)).collect(),
                    l.densities.iter().map(|d| d.substitute_affine(&t, &e).scale(&tj)).collect(),
                )
            };
            layers.push(DeltaLayer { plane, frame: pf, cells, densities });
        }
        Ok(PiecewiseMeasure { frame, complex, densities, layers, support_in_region: self.support_in_region })
    }

    /// Multiplies every density (cells and layers) by `f`.
    pub fn times(&self, f: &Polynomial) -> PiecewiseMeasure {
        let mut out = self.clone();
        out.densities = self.densities.iter().map(|d| d * f).collect();
        for l in &mut out.layers {
            let fw = l.frame.restrict(f);
            l.densities = l.densities.iter().map(|d| d * &fw).collect();
        }
        out
    }

    pub fn scaled(&self, c: &Q) -> PiecewiseMeasure {
        self.times(&Polynomial::constant(self.dim(), c.clone()))
    }
}

fn clip_layer_positive(l: &DeltaLayer) -> DeltaLayer {
    let r = l.frame.origin.len();
    let mut cells = Vec::new();
    let mut densities = Vec::new();
    for (c, d) in l.cells.iter().zip(&l.densities) {
        if l.frame.basis.is_empty() {
            if l.frame.origin.iter().all(|x| x.is_positive()) {
                cells.push(c.clone());
                densities.push(d.clone());
            }
            continue;
        }
        let mut piece = Some(c.clone());
        for i in 0..r {
            // λ_i = origin_i + Σ_j w_j basis_j[i] > 0
            let normal: QVec = l.frame.basis.iter().map(|b| -b[i].clone()).collect();
            if exact::is_zero_vec(&normal) {
                if !l.frame.origin[i].is_positive() {
                    piece = None;
                }
                continue;
            }
            piece = piece.and_then(|p| p.split(&normal, &l.frame.origin[i], None).0);
        }
        if let Some(p) = piece {
            if p.vertices.iter().all(|v| l.frame.embed(v).iter().all(|x| !x.is_negative())) {
                cells.push(p);
                densities.push(d.clone());
            }
        }
    }
    DeltaLayer { plane: l.plane.clone(), frame: l.frame.clone(), cells, densities }
}

fn frame_of(vs: &[RationalVector]) -> DhResult<Frame> {
    let first = vs.first().ok_or_else(|| DhError::Precondition("empty weight list".into()))?;
    for v in vs {
        first.check_frame(v)?;
    }
    Ok(first.frame.clone())
}

/// Abelian measure of `P(V)` for distinct weights.
pub fn single_summand_density(weights: &[RationalVector]) -> DhResult<PiecewiseMeasure> {
    let frame = frame_of(weights)?;
    let engine = DensityEngine::projective(weights.iter().map(|w| w.coords.clone()).collect())?;
    engine.to_measure(frame, None)
}

/// Cone pushforward density on the cells of its arrangement inside `region`
/// (a box around the origin by default).
pub fn cone_density(generators: &[RationalVector], region: Option<Cell>) -> DhResult<PiecewiseMeasure> {
    let frame = frame_of(generators)?;
    let engine = DensityEngine::cone(generators.iter().map(|w| w.coords.clone()).collect())?;
    engine.to_measure(frame, region)
}

/// Abelian measure of `P(V)` via the cone over `(ω, 1)` sliced at height one.
/// Repeated weights are allowed.
pub fn projective_density_via_cone(weights: &[RationalVector]) -> DhResult<PiecewiseMeasure> {
    let frame = frame_of(weights)?;
    let pts: Vec<QVec> = weights.iter().map(|w| w.coords.clone()).collect();
    let r = pts[0].len();
    let lifted: Vec<QVec> = pts
        .iter()
        .map(|w| {
            let mut v = w.clone();
            v.push(Q::one());
            v
        })
        .collect();
    let engine = DensityEngine::cone(lifted)?;
    let uniq = {
        let mut u = pts.clone();
        u.sort();
        u.dedup();
        u
    };
    if affine_rank(&uniq) != r {
        return Err(DhError::Precondition("weights are not full-dimensional".into()));
    }
    let region = convex_hull(&uniq)?;
    let planes: Vec<Hyperplane> = engine
        .arr
        .walls
        .iter()
        .filter(|w| !exact::is_zero_vec(&w.plane.ell[..r]))
        .map(|w| Hyperplane::new(&w.plane.ell[..r], &-w.plane.ell[r].clone()))
        .collect();
    let mut planes_sorted = planes;
    planes_sorted.sort();
    planes_sorted.dedup();
    let complex = ChamberComplex::build(ArrangementKind::Affine, region, planes_sorted);
    let slice = |p: &Polynomial| {
        let mut subs: Vec<Polynomial> = (0..r).map(|i| Polynomial::var(r, i)).collect();
        subs.push(Polynomial::one(r));
        p.compose(&subs)
    };
    let densities = complex
        .cells
        .iter()
        .map(|c| {
            let mut x = c.interior_point.clone();
            x.push(Q::one());
            engine.density_at(&x).map(|p| slice(&p))
        })
        .collect::<DhResult<Vec<_>>>()?;
    Ok(PiecewiseMeasure { frame, complex, densities, layers: Vec::new(), support_in_region: true })
}

/// One summand `sign · δ_point ⋆ H_{g_1} ⋆ ⋯ ⋆ H_{g_k}` of a Heckman-type formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeckmanTerm {
    pub point: SignedPointMass,
    pub generators: Vec<QVec>,
}

/// Renormalization direction `(1, 1/M, 1/M², …)` nonorthogonal to every vector given.
pub fn renormalization_direction(vectors: &[QVec]) -> QVec {
    let r = vectors.first().map_or(0, |v| v.len());
    let big = vectors.iter().flat_map(|v| v.iter().map(|x| x.abs())).fold(Q::one(), |a, b| if b > a { b } else { a });
    let mut m = (big * q(2 * r as i64 + 3)).ceil() + Q::one();
    loop {
        let gamma: QVec = (0..r).map(|i| (0..i).fold(Q::one(), |acc, _| acc / &m)).collect();
        if vectors.iter().all(|v| !exact::dot(&gamma, v).is_zero()) {
            return gamma;
        }
        m += Q::one();
    }
}

/// Flips isotropy weights with negative pairing against `gamma`; returns `(flips, weights)`.
pub fn renormalize(isotropy: &[QVec], gamma: &[Q]) -> (usize, Vec<QVec>) {
    let mut flips = 0;
    let out = isotropy
        .iter()
        .map(|w| {
            if exact::dot(gamma, w).is_negative() {
                flips += 1;
                exact::neg(w)
            } else {
                w.clone()
            }
        })
        .collect();
    (flips, out)
}

/// Fixed points `ω_k` of `P(V)` with isotropy weights `ω_l − ω_k`.
pub fn projective_fixed_points(weights: &[QVec]) -> Vec<(QVec, Vec<QVec>)> {
    (0..weights.len())
        .map(|k| {
            let iso = (0..weights.len()).filter(|&l| l != k).map(|l| exact::sub(&weights[l], &weights[k])).collect();
            (weights[k].clone(), iso)
        })
        .collect()
}

/// Abelian Heckman summands with sign `(−1)^{n_p}`.
pub fn abelian_heckman_terms(fixed_points: &[(QVec, Vec<QVec>)]) -> Vec<HeckmanTerm> {
    let all: Vec<QVec> = fixed_points.iter().flat_map(|(_, iso)| iso.iter().cloned()).collect();
    let gamma = renormalization_direction(&all);
    fixed_points
        .iter()
        .map(|(p, iso)| {
            let (flips, gens) = renormalize(iso, &gamma);
            HeckmanTerm {
                point: SignedPointMass::new(p.clone(), if flips % 2 == 0 { 1 } else { -1 }),
                generators: gens,
            }
        })
        .collect()
}

/// Non-Abelian Heckman summands: for every positive root, one of `±α` is removed from the
/// renormalized weights; the sign is `(−1)^{n_p + #(positive roots removed)}`.
pub fn nonabelian_heckman_terms(fixed_points: &[(QVec, Vec<QVec>)], rd: &RootData) -> DhResult<Vec<HeckmanTerm>> {
    let all: Vec<QVec> = fixed_points.iter().flat_map(|(_, iso)| iso.iter().cloned()).collect();
    let gamma = renormalization_direction(&all);
    let mut terms = Vec::new();
    for (p, iso) in fixed_points {
        let (flips, mut gens) = renormalize(iso, &gamma);
        let mut removed_positive = 0;
        for alpha in &rd.positive_roots {
            let neg = exact::neg(&alpha.coords);
            if let Some(i) = gens.iter().position(|g| g == &neg) {
                gens.remove(i);
            } else if let Some(i) = gens.iter().position(|g| g == &alpha.coords) {
                gens.remove(i);
                removed_positive += 1;
            } else {
                return Err(DhError::Precondition(format!(
                    "fixed point {:?}: neither α nor −α is an isotropy weight",
                    p.iter().map(exact::fmt_q).collect::<Vec<_>>()
                )));
            }
        }
        let sign = if (flips + removed_positive) % 2 == 0 { 1 } else { -1 };
        terms.push(HeckmanTerm { point: SignedPointMass::new(p.clone(), sign), generators: gens });
    }
    Ok(terms)
}

fn bbox_region(points: &[QVec], pad: &Q) -> Cell {
    let r = points[0].len();
    let lo: QVec = (0..r).map(|i| points.iter().map(|p| p[i].clone()).min().unwrap() - pad).collect();
    let hi: QVec = (0..r).map(|i| points.iter().map(|p| p[i].clone()).max().unwrap() + pad).collect();
    Cell::bounding_box(&lo, &hi)
}

fn generator_key(gens: &[QVec]) -> Vec<QVec> {
    let mut k = gens.to_vec();
    k.sort();
    k
}

/// Signed sum of translated cone measures on the common refinement of their chambers.
///
/// Terms whose generators span a hyperplane become delta layers. The result is
/// computed on a box around the points, which contains the support whenever the
/// sum has compact support.
pub fn heckman_sum(terms: &[HeckmanTerm], frame: Frame) -> DhResult<PiecewiseMeasure> {
    let r = terms.first().map_or(0, |t| t.point.point.len());
    if terms.iter().any(|t| t.point.point.len() != r || t.generators.iter().any(|g| g.len() != r)) {
        return Err(DhError::FrameMismatch("Heckman terms live in different frames".into()));
    }
    if r == 0 {
        let total = terms.iter().fold(Q::zero(), |a, t| a + t.point.coefficient());
        if terms.iter().any(|t| !t.generators.is_empty()) {
            return Err(DhError::Precondition("zero generator in rank zero".into()));
        }
        let cell = Cell::from_parts(Vec::new(), vec![vec![]]);
        let complex = ChamberComplex::assemble(ArrangementKind::Cone, 0, Vec::new(), vec![cell]);
        return Ok(PiecewiseMeasure {
            frame,
            complex,
            densities: vec![Polynomial::constant(0, total)],
            layers: Vec::new(),
            support_in_region: true,
        });
    }
    let points: Vec<QVec> = terms.iter().map(|t| t.point.point.clone()).collect();
    let region = bbox_region(&points, &q(1));
    let mut full: Vec<&HeckmanTerm> = Vec::new();
    let mut by_plane: BTreeMap<Hyperplane, Vec<&HeckmanTerm>> = BTreeMap::new();
    for t in terms {
        let rank = exact::rank(&t.generators);
        if rank == r {
            full.push(t);
        } else if rank + 1 == r {
            let ns = exact::nullspace(&t.generators, r);
            let plane = Hyperplane::new(&ns[0], &exact::dot(&ns[0], &t.point.point));
            by_plane.entry(plane).or_default().push(t);
        } else {
            return Err(DhError::Unsupported(format!(
                "a summand is supported on a subspace of codimension {}",
                r - rank
            )));
        }
    }
    let mut engines: HashMap<Vec<QVec>, DensityEngine> = HashMap::new();
    for t in &full {
        let key = generator_key(&t.generators);
        if !engines.contains_key(&key) {
            engines.insert(key.clone(), DensityEngine::cone(t.generators.clone())?);
        }
    }
    let mut planes: Vec<Hyperplane> = Vec::new();
    for t in &full {
        let eng = &engines[&generator_key(&t.generators)];
        for w in &eng.arr.walls {
            planes.push(Hyperplane::new(&w.plane.ell, &exact::dot(&w.plane.ell, &t.point.point)));
        }
    }
    planes.sort();
    planes.dedup();
    let complex = ChamberComplex::build(ArrangementKind::Cone, region, planes);
    let mut densities = Vec::with_capacity(complex.cells.len());
    for c in &complex.cells {
        let mut acc = Polynomial::zero(r);
        for t in &full {
            let eng = &engines[&generator_key(&t.generators)];
            let local = exact::sub(&c.interior_point, &t.point.point);
            let p = eng.density_at(&local)?;
            if !p.is_zero() {
                acc = &acc + &p.translated(&t.point.point).scale(&t.point.coefficient());
            }
        }
        densities.push(acc);
    }
    let mut layers = Vec::new();
    for (plane, ts) in by_plane {
        let pf = PlaneFrame::canonical(&plane);
        let sub_terms: Vec<HeckmanTerm> = ts
            .iter()
            .map(|t| HeckmanTerm {
                point: SignedPointMass {
                    point: pf.to_w(&t.point.point),
                    sign: t.point.sign,
                    weight: t.point.weight.clone(),
                },
                generators: t.generators.iter().map(|g| exact::mat_vec(&pf.to_w, g)).collect(),
            })
            .collect();
        let sub = heckman_sum(&sub_terms, Frame::Named("wall".into()))?;
        if !sub.layers.is_empty() {
            return Err(DhError::Unsupported("layers of codimension two".into()));
        }
        layers.push(DeltaLayer { plane, frame: pf, cells: sub.complex.cells, densities: sub.densities });
    }
    Ok(PiecewiseMeasure { frame, complex, densities, layers, support_in_region: true })
}

/// `Σ_p sign_p · weight_p · δ_p ⋆ m` on the common refinement of the translated cells.
pub fn signed_dirac_convolve(points: &[SignedPointMass], m: &PiecewiseMeasure) -> DhResult<PiecewiseMeasure> {
    let r = m.dim();
    if points.iter().any(|p| p.point.len() != r) {
        return Err(DhError::FrameMismatch("point masses and measure live in different frames".into()));
    }
    if !m.support_in_region {
        return Err(DhError::Precondition("convolution needs a measure with known bounded support".into()));
    }
    let mut planes: Vec<Hyperplane> = Vec::new();
    let mut verts: Vec<QVec> = Vec::new();
    for c in &m.complex.cells {
        for p in points {
            for k in &c.h_rep {
                planes.push(Hyperplane::new(&k.normal, &(&k.bound + exact::dot(&k.normal, &p.point))));
            }
            verts.extend(c.vertices.iter().map(|v| exact::add(v, &p.point)));
        }
    }
    for l in &m.layers {
        for c in &l.cells {
            for p in points {
                verts.extend(c.vertices.iter().map(|v| exact::add(&l.frame.embed(v), &p.point)));
            }
        }
    }
    planes.sort();
    planes.dedup();
    let region = if verts.is_empty() {
        bbox_region(&points.iter().map(|p| p.point.clone()).collect::<Vec<_>>(), &q(1))
    } else {
        bbox_region(&verts, &q(1))
    };
    let complex = ChamberComplex::build(m.complex.kind, region, planes);
    let mut densities = Vec::with_capacity(complex.cells.len());
    for c in &complex.cells {
        let mut acc = Polynomial::zero(r);
        for p in points {
            let local = exact::sub(&c.interior_point, &p.point);
            let f = m.polynomial_at(&local)?;
            if !f.is_zero() {
                acc = &acc + &f.translated(&p.point).scale(&p.coefficient());
            }
        }
        densities.push(acc);
    }
    let mut layers = Vec::new();
    for l in &m.layers {
        for p in points {
            let plane = Hyperplane::new(&l.plane.ell, &(&l.plane.offset + exact::dot(&l.plane.ell, &p.point)));
            let frame = PlaneFrame::with_origin(&plane, exact::add(&l.frame.origin, &p.point));
            let densities = l.densities.iter().map(|d| d.scale(&p.coefficient())).collect();
            layers.push(DeltaLayer { plane, frame, cells: l.cells.clone(), densities });
        }
    }
    Ok(PiecewiseMeasure { frame: m.frame.clone(), complex, densities, layers, support_in_region: true })
}

/// `∏_{α>0} ∂_{−α}` applied distributionally, restricted to the open positive chamber.
pub fn derivative_principle(m: &PiecewiseMeasure, rd: &RootData) -> DhResult<PiecewiseMeasure> {
    let dirs: Vec<QVec> = rd.positive_roots.iter().map(|a| exact::neg(&a.coords)).collect();
    derivative_principle_with(m, rd, &dirs)
}

/// Same as `derivative_principle` with an explicit order of the derivative directions.
pub fn derivative_principle_with(m: &PiecewiseMeasure, rd: &RootData, dirs: &[QVec]) -> DhResult<PiecewiseMeasure> {
    m.check_frame(rd)?;
    if !m.layers.is_empty() {
        return Err(DhError::Unsupported("derivatives of existing delta layers".into()));
    }
    if !m.support_in_region {
        return Err(DhError::Precondition("derivative principle needs a measure with bounded support".into()));
    }
    let r = m.dim();
    let chamber_walls: Vec<Hyperplane> = (0..r).map(|i| Hyperplane::new(&exact::unit(r, i), &Q::zero())).collect();
    let (complex, parents) = m.complex.refine(&chamber_walls);
    let dens: Vec<Polynomial> = parents.iter().map(|&p| m.densities[p].clone()).collect();
    let inside = |x: &[Q]| rd.is_strictly_dominant(x);
    // Facet layers: (plane index) -> pieces.
    let index: HashMap<&Vec<i8>, usize> = complex.signs.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut layer_pieces: BTreeMap<usize, Vec<(Vec<QVec>, Polynomial)>> = BTreeMap::new();
    for (a, cell) in complex.cells.iter().enumerate() {
        for k in &cell.h_rep {
            let Some(h) = k.plane else { continue };
            let plane = &complex.hyperplanes[h];
            let s = complex.signs[a][h];
            let mut t = complex.signs[a].clone();
            t[h] = -s;
            let other = index.get(&t).copied();
            // Visit each facet once: from the − side, or from the + side when nothing lies below.
            if s > 0 && other.is_some() {
                continue;
            }
            let face = cell.face_on(&plane.ell, &plane.offset);
            let mid = crate::chambers::centroid(&face);
            if !inside(&mid) {
                continue;
            }
            let zero = Polynomial::zero(r);
            let f_self = &dens[a];
            let f_other = other.map_or(&zero, |b| &dens[b]);
            let jump = if s < 0 { f_other - f_self } else { f_self - f_other };
            if jump.is_zero() {
                continue;
            }
            let pf = PlaneFrame::canonical(plane);
            let orders = layer_coefficients(&jump, dirs, &plane.ell, &pf.u)?;
            for (j, qj) in orders.iter().enumerate().skip(1) {
                if !pf.restrict(qj).is_zero() {
                    return Err(DhError::Unsupported(format!(
                        "a derivative of order {j} of a delta layer on {:?} survives in the open chamber",
                        plane.ell.iter().map(exact::fmt_q).collect::<Vec<_>>()
                    )));
                }
            }
            let q0 = pf.restrict(&orders[0]);
            if q0.is_zero() {
                continue;
            }
            let wface: Vec<QVec> = face.iter().map(|v| pf.to_w(v)).collect();
            layer_pieces.entry(h).or_default().push((wface, q0));
        }
    }
    let mut layers = Vec::new();
    for (h, pieces) in layer_pieces {
        let plane = complex.hyperplanes[h].clone();
        let pf = PlaneFrame::canonical(&plane);
        let mut cells = Vec::new();
        let mut densities = Vec::new();
        for (wface, q0) in pieces {
            let cell = if r == 1 { Cell::from_parts(Vec::new(), vec![vec![]]) } else { convex_hull(&wface)? };
            cells.push(cell);
            densities.push(q0);
        }
        layers.push(DeltaLayer { plane, frame: pf, cells, densities });
    }
    let keep: Vec<usize> = (0..complex.cells.len()).filter(|&i| inside(&complex.cells[i].interior_point)).collect();
    let mut densities = Vec::with_capacity(keep.len());
    for &i in &keep {
        let mut d = dens[i].clone();
        for v in dirs {
            d = d.directional_derivative(v)?;
        }
        densities.push(d);
    }
    let cells = keep.iter().map(|&i| complex.cells[i].clone()).collect();
    let complex = ChamberComplex::assemble(complex.kind, r, complex.hyperplanes, cells);
    Ok(PiecewiseMeasure { frame: m.frame.clone(), complex, densities, layers, support_in_region: true })
}

/// Coefficients `Q_j` (as λ-polynomials, before restriction) of `δ_H^{(j)}` produced by
/// `∏_i D_{v_i}` acting on `J · 1_{ℓ > c}`:
/// `Q_j = Σ_{|S| ≥ j+1} Π_{i∈S} a_i · Π_{i∉S} D_{t_i} · D_u^{|S|−1−j} J`
/// with `v_i = a_i u + t_i`, `a_i = ℓ(v_i)`.
fn layer_coefficients(jump: &Polynomial, dirs: &[QVec], ell: &[Q], u: &[Q]) -> DhResult<Vec<Polynomial>> {
    let r = ell.len();
    let n = dirs.len();
    let a: Vec<Q> = dirs.iter().map(|v| exact::dot(ell, v)).collect();
    let t: Vec<QVec> = dirs.iter().zip(&a).map(|(v, ai)| exact::sub(v, &exact::scale(u, ai))).collect();
    let mut out = vec![Polynomial::zero(r); n.max(1)];
    for mask in 1usize..(1 << n) {
        let size = mask.count_ones() as usize;
        let mut coef = Q::one();
        let mut p = jump.clone();
        for i in 0..n {
            if mask >> i & 1 == 1 {
                coef *= &a[i];
            } else {
                p = p.directional_derivative(&t[i])?;
            }
        }
        if coef.is_zero() || p.is_zero() {
            continue;
        }
        for j in 0..size {
            let mut pj = p.clone();
            for _ in 0..size - 1 - j {
                pj = pj.directional_derivative(u)?;
            }
            out[j] = &out[j] + &pj.scale(&coef);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Serialization

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintRepr {
    pub normal: Vec<String>,
    pub bound: String,
    pub plane: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRepr {
    pub h_rep: Vec<ConstraintRepr>,
    pub vertices: Vec<Vec<String>>,
    pub interior_point: Vec<String>,
    pub bounded: bool,
    pub density: PolynomialRepr,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperplaneRepr {
    pub ell: Vec<String>,
    pub offset: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerRepr {
    pub plane: HyperplaneRepr,
    pub origin: Vec<String>,
    pub basis: Vec<Vec<String>>,
    pub cells: Vec<CellRepr>,
}

/// JSON schema of a `PiecewiseMeasure`; rationals are `"p/q"` strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureRepr {
    pub frame: Frame,
    pub dim: usize,
    pub kind: ArrangementKind,
    pub support_in_region: bool,
    pub hyperplanes: Vec<HyperplaneRepr>,
    pub cells: Vec<CellRepr>,
    pub layers: Vec<LayerRepr>,
}

fn sv(v: &[Q]) -> Vec<String> {
    v.iter().map(exact::fmt_q).collect()
}

fn pv(v: &[String]) -> DhResult<QVec> {
    v.iter().map(|s| exact::parse_q(s)).collect()
}

fn cell_repr(c: &Cell, d: &Polynomial) -> CellRepr {
    CellRepr {
        h_rep: c
            .h_rep
            .iter()
            .map(|k| ConstraintRepr { normal: sv(&k.normal), bound: exact::fmt_q(&k.bound), plane: k.plane })
            .collect(),
        vertices: c.vertices.iter().map(|v| sv(v)).collect(),
        interior_point: sv(&c.interior_point),
        bounded: c.bounded,
        density: PolynomialRepr::from(d),
    }
}

fn cell_from(c: &CellRepr) -> DhResult<(Cell, Polynomial)> {
    let h_rep = c
        .h_rep
        .iter()
        .map(|k| Ok(Constraint { normal: pv(&k.normal)?, bound: exact::parse_q(&k.bound)?, plane: k.plane }))
        .collect::<DhResult<Vec<_>>>()?;
    let vertices = c.vertices.iter().map(|v| pv(v)).collect::<DhResult<Vec<_>>>()?;
    let cell = Cell { h_rep, vertices, interior_point: pv(&c.interior_point)?, bounded: c.bounded };
    Ok((cell, Polynomial::try_from(&c.density)?))
}

impl PiecewiseMeasure {
    pub fn to_repr(&self) -> MeasureRepr {
        MeasureRepr {
            frame: self.frame.clone(),
            dim: self.dim(),
            kind: self.complex.kind,
            support_in_region: self.support_in_region,
            hyperplanes: self
                .complex
                .hyperplanes
                .iter()
                .map(|h| HyperplaneRepr { ell: sv(&h.ell), offset: exact::fmt_q(&h.offset) })
                .collect(),
            cells: self.complex.cells.iter().zip(&self.densities).map(|(c, d)| cell_repr(c, d)).collect(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerRepr {
                    plane: HyperplaneRepr { ell: sv(&l.plane.ell), offset: exact::fmt_q(&l.plane.offset) },
                    origin: sv(&l.frame.origin),
                    basis: l.frame.basis.iter().map(|b| sv(b)).collect(),
                    cells: l.cells.iter().zip(&l.densities).map(|(c, d)| cell_repr(c, d)).collect(),
                })
                .collect(),
        }
    }

    pub fn from_repr(r: &MeasureRepr) -> DhResult<Self> {
        let hyperplanes = r
            .hyperplanes
            .iter()
            .map(|h| Ok(Hyperplane { ell: pv(&h.ell)?, offset: exact::parse_q(&h.offset)? }))
            .collect::<DhResult<Vec<_>>>()?;
        let (cells, densities): (Vec<Cell>, Vec<Polynomial>) =
            r.cells.iter().map(cell_from).collect::<DhResult<Vec<_>>>()?.into_iter().unzip();
        let complex = ChamberComplex::assemble(r.kind, r.dim, hyperplanes, cells);
        let layers = r
            .layers
            .iter()
            .map(|l| {
                let plane = Hyperplane { ell: pv(&l.plane.ell)?, offset: exact::parse_q(&l.plane.offset)? };
                let mut frame = PlaneFrame::with_origin(&plane, pv(&l.origin)?);
                let basis = l.basis.iter().map(|b| pv(b)).collect::<DhResult<Vec<_>>>()?;
                if basis != frame.basis {
                    return Err(DhError::Parse("layer basis is not the canonical lattice basis of its plane".into()));
                }
                frame.basis = basis;
                let (cells, densities): (Vec<Cell>, Vec<Polynomial>) =
                    l.cells.iter().map(cell_from).collect::<DhResult<Vec<_>>>()?.into_iter().unzip();
                Ok(DeltaLayer { plane, frame, cells, densities })
            })
            .collect::<DhResult<Vec<_>>>()?;
        Ok(PiecewiseMeasure {
            frame: r.frame.clone(),
            complex,
            densities,
            layers,
            support_in_region: r.support_in_region,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_repr()).expect("measure serializes")
    }

    pub fn from_json(s: &str) -> DhResult<Self> {
        let r: MeasureRepr = serde_json::from_str(s).map_err(|e| DhError::Parse(e.to_string()))?;
        Self::from_repr(&r)
    }
}

/// Integer-valued helper used by tests and callers that need `ℓ` as integers.
pub fn ell_as_integers(p: &Hyperplane) -> Vec<BigInt> {
    p.ell_int()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{qf, qvec};
    use crate::rootdata::{build_root_data, GroupSpec};

    fn lattice(spec: &[usize], pts: &[QVec]) -> Vec<RationalVector> {
        let f = Frame::Lattice(GroupSpec::new(spec.to_vec()).unwrap());
        pts.iter().map(|p| RationalVector::new(p.clone(), f.clone())).collect()
    }

    fn two_qubit() -> Vec<QVec> {
        vec![qvec(&[1, 1]), qvec(&[1, -1]), qvec(&[-1, 1]), qvec(&[-1, -1])]
    }

    #[test]
    fn two_qubit_abelian_density() {
        let m = single_summand_density(&lattice(&[2, 2], &two_qubit())).unwrap();
        assert_eq!(m.complex.cells.len(), 4);
        assert_eq!(m.total_mass().unwrap(), qf(1, 6));
        assert_eq!(m.evaluate(&[qf(1, 3), qf(1, 5)]).unwrap(), qf(1, 12));
        assert_eq!(m.evaluate(&[q(3), q(0)]).unwrap(), Q::zero());
        assert!(m.evaluate(&[qf(1, 3), qf(1, 3)]).is_err());
    }

    #[test]
    fn sym2_abelian_density() {
        let m = single_summand_density(&lattice(&[2], &[qvec(&[-2]), qvec(&[0]), qvec(&[2])])).unwrap();
        let x = Polynomial::var(1, 0);
        let left = (&Polynomial::constant(1, q(2)) + &x).scale(&qf(1, 8));
        let right = (&Polynomial::constant(1, q(2)) - &x).scale(&qf(1, 8));
        assert_eq!(m.polynomial_at(&[qf(-1, 2)]).unwrap(), left);
        assert_eq!(m.polynomial_at(&[qf(1, 2)]).unwrap(), right);
        assert_eq!(m.total_mass().unwrap(), qf(1, 2));
    }

    #[test]
    fn two_qubit_derivative_principle() {
        let rd = build_root_data(&GroupSpec::new(vec![2, 2]).unwrap());
        let m = single_summand_density(&lattice(&[2, 2], &two_qubit())).unwrap();
        let k = derivative_principle(&m, &rd).unwrap().pruned();
        assert!(k.densities.is_empty());
        assert_eq!(k.layers.len(), 1);
        assert_eq!(k.layers[0].plane.ell, qvec(&[1, -1]));
        assert_eq!(k.layer_density_at(&[qf(1, 2), qf(1, 2)]).unwrap(), qf(1, 2));
        assert_eq!(k.total_mass().unwrap(), qf(1, 2));
    }

    #[test]
    fn sym2_derivative_principle() {
        let rd = build_root_data(&GroupSpec::new(vec![2]).unwrap());
        let m = single_summand_density(&lattice(&[2], &[qvec(&[-2]), qvec(&[0]), qvec(&[2])])).unwrap();
        let k = derivative_principle(&m, &rd).unwrap().pruned();
        assert_eq!(k.evaluate(&[qf(1, 2)]).unwrap(), qf(1, 4));
        assert_eq!(k.evaluate(&[qf(5, 2)]).unwrap(), Q::zero());
        assert!(k.layers.is_empty());
    }

    #[test]
    fn minimal_walls_agree_with_residue() {
        let e = DensityEngine::projective(two_qubit()).unwrap();
        assert_eq!(e.verify_minimal_walls().unwrap(), 6);
    }

    #[test]
    fn cone_examples() {
        let f = Frame::Named("t".into());
        let one = |v: QVec| RationalVector::new(v, f.clone());
        let m = cone_density(&[one(qvec(&[1])), one(qvec(&[1])), one(qvec(&[1]))], None).unwrap();
        let x = Polynomial::var(1, 0);
        assert_eq!(m.polynomial_at(&[qf(1, 2)]).unwrap(), x.pow(2).scale(&qf(1, 2)));
        assert!(m.polynomial_at(&[qf(-1, 2)]).unwrap().is_zero());
        let m = cone_density(&[one(qvec(&[1, 0])), one(qvec(&[0, 1]))], None).unwrap();
        assert_eq!(m.polynomial_at(&[qf(1, 2), qf(1, 3)]).unwrap(), Polynomial::one(2));
        assert!(DensityEngine::cone(vec![qvec(&[1]), qvec(&[-1])]).is_err());
    }

    #[test]
    fn repeated_weights_rejected_then_handled_by_cone_slice() {
        let pts = vec![qvec(&[1]), qvec(&[1]), qvec(&[-1])];
        assert!(DensityEngine::projective(pts.clone()).is_err());
        let m = projective_density_via_cone(&lattice(&[2], &pts)).unwrap();
        assert_eq!(m.total_mass().unwrap(), qf(1, 2));
    }

    #[test]
    fn json_round_trip() {
        let rd = build_root_data(&GroupSpec::new(vec![2, 2]).unwrap());
        let m = single_summand_density(&lattice(&[2, 2], &two_qubit())).unwrap();
        let back = PiecewiseMeasure::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let k = derivative_principle(&m, &rd).unwrap();
        assert_eq!(PiecewiseMeasure::from_json(&k.to_json()).unwrap(), k);
    }
}
