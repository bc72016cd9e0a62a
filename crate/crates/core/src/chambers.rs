//! Singular hyperplanes, regular chambers and wall-crossing walks.
//!
//! Geometry is exact: every predicate is a sign decision on rationals.
//! Cells are convex polytopes kept in both H- and V-representation; an
//! arrangement is materialized by splitting a starting polytope by one
//! hyperplane at a time.

use std::collections::{BTreeSet, HashMap, HashSet};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DhError, DhResult};
use crate::exact::{self, factorial_q, q, QVec, Q};
use crate::polyring::{integrate_over_simplex, Polynomial};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArrangementKind {
    /// Weights of a projective space; hyperplanes through `r` affinely independent weights.
    Affine,
    /// Cone generators; hyperplanes through the origin and `r − 1` independent generators.
    Cone,
}

/// Hyperplane `ℓ(λ) = offset` with `ℓ` primitive integral, first nonzero entry positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hyperplane {
    pub ell: QVec,
    pub offset: Q,
}

impl Hyperplane {
    /// Normalizes an arbitrary nonzero covector and offset.
    pub fn new(normal: &[Q], offset: &Q) -> Self {
        let ints = exact::primitive_integer(normal);
        let ell = exact::ints_to_q(&ints);
        // ell = c · normal for a nonzero rational c.
        let i = normal.iter().position(|x| !x.is_zero()).expect("nonzero normal");
        let c = &ell[i] / &normal[i];
        Hyperplane { ell, offset: offset * c }
    }

    pub fn value(&self, x: &[Q]) -> Q {
        exact::dot(&self.ell, x) - &self.offset
    }

    pub fn side(&self, x: &[Q]) -> i8 {
        exact::sign(&self.value(x))
    }

    pub fn ell_int(&self) -> Vec<BigInt> {
        self.ell.iter().map(|x| x.to_integer()).collect()
    }
}

/// A singular hyperplane together with the weights it contains.
///
/// The `+` side is `ℓ > offset`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wall {
    pub plane: Hyperplane,
    pub on_wall_indices: Vec<usize>,
    /// Distinct on-wall points; their convex (affine kind) or conic (cone kind) hull is the singular wall.
    pub hull: Vec<QVec>,
    pub orientation: i8,
}

impl Wall {
    pub fn ell(&self) -> &QVec {
        &self.plane.ell
    }

    pub fn offset(&self) -> &Q {
        &self.plane.offset
    }

    /// Exact hull membership of a point already on the hyperplane.
    pub fn hull_contains(&self, p: &[Q], kind: ArrangementKind) -> bool {
        match kind {
            ArrangementKind::Affine => in_convex_hull(&self.hull, p),
            ArrangementKind::Cone => in_cone(&self.hull, p),
        }
    }
}

/// `p ∈ conv(points)`, decided by Carathéodory over affinely independent subsets.
pub fn in_convex_hull(points: &[QVec], p: &[Q]) -> bool {
    if points.is_empty() {
        return false;
    }
    let k = affine_rank(points) + 1;
    exact::subsets(points.len(), k).into_iter().any(|s| {
        let pts: Vec<QVec> = s.iter().map(|&i| points[i].clone()).collect();
        matches!(exact::barycentric(&pts, p), Some(c) if c.iter().all(|x| !x.is_negative()))
    })
}

/// `p ∈ cone(gens)`, decided by Carathéodory over linearly independent subsets.
pub fn in_cone(gens: &[QVec], p: &[Q]) -> bool {
    if exact::is_zero_vec(p) {
        return true;
    }
    let k = exact::rank(gens);
    if k == 0 {
        return false;
    }
    exact::subsets(gens.len(), k).into_iter().any(|s| {
        let cols: Vec<QVec> = s.iter().map(|&i| gens[i].clone()).collect();
        if exact::rank(&cols) < k {
            return false;
        }
        let mut with_p = cols.clone();
        with_p.push(p.to_vec());
        if exact::rank(&with_p) > k {
            return false;
        }
        let mut pts = cols.clone();
        pts.push(exact::zeros(p.len()));
        // Conic coordinates are barycentric coordinates with respect to (g_i, 0) minus the origin's.
        match exact::barycentric(&pts, p) {
            Some(c) => c[..k].iter().all(|x| !x.is_negative()),
            None => false,
        }
    })
}

pub fn affine_rank(points: &[QVec]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let diffs: Vec<QVec> = points[1..].iter().map(|p| exact::sub(p, &points[0])).collect();
    exact::rank(&diffs)
}

fn distinct(points: &[QVec]) -> Vec<QVec> {
    let mut seen = BTreeSet::new();
    points.iter().filter(|p| seen.insert((*p).clone())).cloned().collect()
}

/// All singular hyperplanes of a weight or generator list.
pub fn singular_hyperplanes(points: &[QVec], kind: ArrangementKind) -> DhResult<Vec<Wall>> {
    let r = points.first().map_or(0, |p| p.len());
    if r == 0 {
        return Err(DhError::Precondition("empty weight list or rank-zero frame".into()));
    }
    let uniq = distinct(points);
    let full = match kind {
        ArrangementKind::Affine => affine_rank(&uniq) == r,
        ArrangementKind::Cone => exact::rank(&uniq) == r,
    };
    if !full {
        return Err(DhError::Precondition(
            "weights are not full-dimensional; purify the problem or pass to the affine hull of the weights".into(),
        ));
    }
    let mut planes: BTreeSet<Hyperplane> = BTreeSet::new();
    match kind {
        ArrangementKind::Affine => {
            for s in exact::subsets(uniq.len(), r) {
                let diffs: Vec<QVec> = s[1..].iter().map(|&i| exact::sub(&uniq[i], &uniq[s[0]])).collect();
                let ns = exact::nullspace(&diffs, r);
                if ns.len() != 1 {
                    continue;
                }
                let off = exact::dot(&ns[0], &uniq[s[0]]);
                planes.insert(Hyperplane::new(&ns[0], &off));
            }
        }
        ArrangementKind::Cone => {
            let nonzero: Vec<QVec> = uniq.into_iter().filter(|p| !exact::is_zero_vec(p)).collect();
            if r == 1 {
                planes.insert(Hyperplane { ell: vec![q(1)], offset: Q::zero() });
            } else {
                for s in exact::subsets(nonzero.len(), r - 1) {
                    let rows: Vec<QVec> = s.iter().map(|&i| nonzero[i].clone()).collect();
                    let ns = exact::nullspace(&rows, r);
                    if ns.len() != 1 {
                        continue;
                    }
                    planes.insert(Hyperplane::new(&ns[0], &Q::zero()));
                }
            }
        }
    }
    Ok(planes
        .into_iter()
        .map(|plane| {
            let on: Vec<usize> = (0..points.len()).filter(|&i| plane.side(&points[i]) == 0).collect();
            let hull = distinct(&on.iter().map(|&i| points[i].clone()).collect::<Vec<_>>());
            Wall { plane, on_wall_indices: on, hull, orientation: 1 }
        })
        .collect())
}

/// Half-space `normal · x ≤ bound`, tagged with the hyperplane that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub normal: QVec,
    pub bound: Q,
    pub plane: Option<usize>,
}

impl Constraint {
    pub fn slack(&self, x: &[Q]) -> Q {
        &self.bound - exact::dot(&self.normal, x)
    }
}

/// Full-dimensional convex polytope with exact vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub h_rep: Vec<Constraint>,
    pub vertices: Vec<QVec>,
    pub interior_point: QVec,
    /// False when the cell touches the artificial bounding region.
    pub bounded: bool,
}

impl Cell {
    pub fn dim(&self) -> usize {
        self.interior_point.len()
    }

    /// Axis-aligned box `[lo, hi]^d`; its faces carry no hyperplane tag.
    pub fn bounding_box(lo: &[Q], hi: &[Q]) -> Self {
        let d = lo.len();
        let mut h_rep = Vec::new();
        for i in 0..d {
            h_rep.push(Constraint { normal: exact::unit(d, i), bound: hi[i].clone(), plane: None });
            h_rep.push(Constraint { normal: exact::neg(&exact::unit(d, i)), bound: -lo[i].clone(), plane: None });
        }
        let mut vertices = Vec::new();
        for mask in 0..(1usize << d) {
            vertices.push((0..d).map(|i| if mask >> i & 1 == 1 { hi[i].clone() } else { lo[i].clone() }).collect());
        }
        Self::from_parts(h_rep, vertices)
    }

    pub fn from_parts(h_rep: Vec<Constraint>, vertices: Vec<QVec>) -> Self {
        let interior_point = centroid(&vertices);
        let bounded = h_rep.iter().all(|c| c.plane.is_some());
        Cell { h_rep, vertices, interior_point, bounded }
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        self.h_rep.iter().all(|c| !c.slack(x).is_negative())
    }

    pub fn contains_strictly(&self, x: &[Q]) -> bool {
        self.h_rep.iter().all(|c| c.slack(x).is_positive())
    }

    fn tight(&self, v: &[Q]) -> Vec<usize> {
        (0..self.h_rep.len()).filter(|&k| self.h_rep[k].slack(v).is_zero()).collect()
    }

    fn is_edge(&self, ti: &[usize], tj: &[usize]) -> bool {
        let common: Vec<QVec> = ti.iter().filter(|k| tj.contains(k)).map(|&k| self.h_rep[k].normal.clone()).collect();
        exact::rank(&common) + 1 == self.dim()
    }

    /// Splits by `normal · x = bound`; returns the parts on the `≤` and `≥` sides
    /// that have nonempty interior.
    pub fn split(&self, normal: &[Q], bound: &Q, plane: Option<usize>) -> (Option<Cell>, Option<Cell>) {
        let vals: Vec<Q> = self.vertices.iter().map(|v| exact::dot(normal, v) - bound).collect();
        let has_neg = vals.iter().any(|s| s.is_negative());
        let has_pos = vals.iter().any(|s| s.is_positive());
        if !has_pos {
            return (Some(self.clone()), None);
        }
        if !has_neg {
            return (None, Some(self.clone()));
        }
        let tight: Vec<Vec<usize>> = self.vertices.iter().map(|v| self.tight(v)).collect();
        let mut new_vertices = Vec::new();
        for i in 0..self.vertices.len() {
            for j in 0..self.vertices.len() {
                if !(vals[i].is_negative() && vals[j].is_positive()) || !self.is_edge(&tight[i], &tight[j]) {
                    continue;
                }
                let t = &vals[i] / (&vals[i] - &vals[j]);
                let dir = exact::sub(&self.vertices[j], &self.vertices[i]);
                new_vertices.push(exact::add(&self.vertices[i], &exact::scale(&dir, &t)));
            }
        }
        let side = |keep_neg: bool| {
            let mut verts: Vec<QVec> = self
                .vertices
                .iter()
                .zip(&vals)
                .filter(|(_, s)| if keep_neg { !s.is_positive() } else { !s.is_negative() })
                .map(|(v, _)| v.clone())
                .collect();
            verts.extend(new_vertices.iter().cloned());
            let mut h = self.h_rep.clone();
            if keep_neg {
                h.push(Constraint { normal: normal.to_vec(), bound: bound.clone(), plane });
            } else {
                h.push(Constraint { normal: exact::neg(normal), bound: -bound.clone(), plane });
            }
            let mut cell = Cell::from_parts(h, verts);
            cell.prune();
            cell.bounded = self.bounded;
            cell
        };
        (Some(side(true)), Some(side(false)))
    }

    /// Drops constraints that do not support a facet.
    fn prune(&mut self) {
        let d = self.dim();
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut kept = Vec::new();
        for c in &self.h_rep {
            let on: Vec<usize> = (0..self.vertices.len()).filter(|&i| c.slack(&self.vertices[i]).is_zero()).collect();
            if on.len() < d {
                continue;
            }
            let pts: Vec<QVec> = on.iter().map(|&i| self.vertices[i].clone()).collect();
            if affine_rank(&pts) + 1 == d && seen.insert(on) {
                kept.push(c.clone());
            }
        }
        self.h_rep = kept;
    }

    /// Simplices (as vertex lists) whose union is the cell, with disjoint interiors.
    pub fn triangulate(&self) -> Vec<Vec<QVec>> {
        let d = self.dim();
        let tight: Vec<Vec<usize>> = self.vertices.iter().map(|v| self.tight(v)).collect();
        let mut out = Vec::new();
        let all: Vec<usize> = (0..self.vertices.len()).collect();
        self.tri_face(&all, d, &tight, &mut out);
        out.into_iter().map(|s| s.into_iter().map(|i| self.vertices[i].clone()).collect()).collect()
    }

    fn tri_face(&self, face: &[usize], face_dim: usize, tight: &[Vec<usize>], out: &mut Vec<Vec<usize>>) {
        if face_dim == 0 {
            out.push(vec![face[0]]);
            return;
        }
        let apex = face[0];
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        for k in 0..self.h_rep.len() {
            if tight[apex].contains(&k) {
                continue;
            }
            let sub: Vec<usize> = face.iter().copied().filter(|&i| tight[i].contains(&k)).collect();
            if sub.len() < face_dim {
                continue;
            }
            let pts: Vec<QVec> = sub.iter().map(|&i| self.vertices[i].clone()).collect();
            if affine_rank(&pts) + 1 != face_dim || !seen.insert(sub.clone()) {
                continue;
            }
            let mut inner = Vec::new();
            self.tri_face(&sub, face_dim - 1, tight, &mut inner);
            for mut s in inner {
                s.insert(0, apex);
                out.push(s);
            }
        }
    }

    pub fn volume(&self) -> Q {
        let d = self.dim();
        self.triangulate()
            .iter()
            .map(|s| {
                let edges: Vec<QVec> = s[1..].iter().map(|v| exact::sub(v, &s[0])).collect();
                exact::det(&edges).abs()
            })
            .fold(Q::zero(), |a, b| a + b)
            / factorial_q(d)
    }

    pub fn integrate(&self, p: &Polynomial) -> DhResult<Q> {
        let mut total = Q::zero();
        for s in self.triangulate() {
            total += integrate_over_simplex(p, &s)?;
        }
        Ok(total)
    }

    /// Vertices lying on the hyperplane `normal · x = bound`.
    pub fn face_on(&self, normal: &[Q], bound: &Q) -> Vec<QVec> {
        self.vertices.iter().filter(|v| (exact::dot(normal, v) - bound).is_zero()).cloned().collect()
    }
}

pub fn centroid(points: &[QVec]) -> QVec {
    let n = q(points.len() as i64);
    let mut acc = exact::zeros(points.first().map_or(0, |p| p.len()));
    for p in points {
        acc = exact::add(&acc, p);
    }
    exact::scale(&acc, &n.recip())
}

/// Cells of a hyperplane arrangement restricted to a convex region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChamberComplex {
    pub kind: ArrangementKind,
    pub dim: usize,
    pub hyperplanes: Vec<Hyperplane>,
    pub cells: Vec<Cell>,
    /// Sign of each cell's interior point with respect to every hyperplane.
    pub signs: Vec<Vec<i8>>,
    /// `(a, b, h)`: cells `a` and `b` share a facet on hyperplane `h`.
    pub adjacency: Vec<(usize, usize, usize)>,
}

impl ChamberComplex {
    /// Splits `region` by every hyperplane.
    pub fn build(kind: ArrangementKind, region: Cell, hyperplanes: Vec<Hyperplane>) -> Self {
        let mut cells = vec![region];
        for (h, plane) in hyperplanes.iter().enumerate() {
            let mut next = Vec::with_capacity(cells.len() * 2);
            for c in cells {
                let (a, b) = c.split(&plane.ell, &plane.offset, Some(h));
                next.extend(a);
                next.extend(b);
            }
            cells = next;
        }
        let dim = cells.first().map_or(0, |c| c.dim());
        Self::assemble(kind, dim, hyperplanes, cells)
    }

    /// Further splits every cell by `extra`; returns the refined complex and each new cell's parent.
    pub fn refine(&self, extra: &[Hyperplane]) -> (ChamberComplex, Vec<usize>) {
        let mut hyperplanes = self.hyperplanes.clone();
        let mut cells: Vec<(Cell, usize)> = self.cells.iter().cloned().zip(0..).collect();
        for plane in extra {
            if hyperplanes.contains(plane) {
                continue;
            }
            let h = hyperplanes.len();
            hyperplanes.push(plane.clone());
            let mut next = Vec::with_capacity(cells.len() * 2);
            for (c, parent) in cells {
                let (a, b) = c.split(&plane.ell, &plane.offset, Some(h));
                next.extend(a.map(|x| (x, parent)));
                next.extend(b.map(|x| (x, parent)));
            }
            cells = next;
        }
        let (cells, parents): (Vec<Cell>, Vec<usize>) = cells.into_iter().unzip();
        (Self::assemble(self.kind, self.dim, hyperplanes, cells), parents)
    }

    /// Computes sign vectors and adjacency for cells already cut by `hyperplanes`.
    pub fn assemble(kind: ArrangementKind, dim: usize, hyperplanes: Vec<Hyperplane>, cells: Vec<Cell>) -> Self {
        let signs: Vec<Vec<i8>> =
            cells.iter().map(|c| hyperplanes.iter().map(|h| h.side(&c.interior_point)).collect()).collect();
        // Within a convex region a sign vector determines at most one cell.
        let index: HashMap<&Vec<i8>, usize> = signs.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let mut adjacency = Vec::new();
        for (a, c) in cells.iter().enumerate() {
            for k in &c.h_rep {
                let Some(h) = k.plane else { continue };
                let mut t = signs[a].clone();
                t[h] = -t[h];
                if let Some(&b) = index.get(&t) {
                    if a < b {
                        adjacency.push((a, b, h));
                    }
                }
            }
        }
        adjacency.sort();
        adjacency.dedup();
        ChamberComplex { kind, dim, hyperplanes, cells, signs, adjacency }
    }

    /// Index of the cell whose closure contains `x` (first match).
    pub fn locate(&self, x: &[Q]) -> Option<usize> {
        self.cells.iter().position(|c| c.contains(x))
    }

    /// Index of the cell containing `x` in its interior.
    pub fn locate_strict(&self, x: &[Q]) -> Option<usize> {
        self.cells.iter().position(|c| c.contains_strictly(x))
    }

    pub fn total_volume(&self) -> Q {
        self.cells.iter().map(|c| c.volume()).fold(Q::zero(), |a, b| a + b)
    }
}

/// One crossing of a straight-line walk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Crossing {
    pub wall: usize,
    pub point: QVec,
    /// True when the walk moves to the `+` side (`ℓ` increasing).
    pub upward: bool,
    /// Whether the crossing point lies in the wall's hull; `None` when not computed.
    pub in_hull: Option<bool>,
}

/// Weights (or generators) together with their singular hyperplanes.
#[derive(Clone, Debug)]
pub struct Arrangement {
    pub kind: ArrangementKind,
    pub dim: usize,
    pub points: Vec<QVec>,
    pub walls: Vec<Wall>,
    seed: u64,
}

const MAX_WALK_ATTEMPTS: u64 = 64;

fn fnv_seed(points: &[QVec]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in points {
        for x in p {
            for b in exact::fmt_q(x).bytes().chain(std::iter::once(b',')) {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h ^= b';' as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl Arrangement {
    pub fn new(points: Vec<QVec>, kind: ArrangementKind) -> DhResult<Self> {
        let walls = singular_hyperplanes(&points, kind)?;
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(DhError::FrameMismatch("weights of different lengths".into()));
        }
        let seed = fnv_seed(&points);
        Ok(Arrangement { kind, dim, points, walls, seed })
    }

    pub fn hyperplanes(&self) -> Vec<Hyperplane> {
        self.walls.iter().map(|w| w.plane.clone()).collect()
    }

    pub fn sign_vector(&self, x: &[Q]) -> Vec<i8> {
        self.walls.iter().map(|w| w.plane.side(x)).collect()
    }

    pub fn is_regular(&self, x: &[Q]) -> bool {
        self.walls.iter().all(|w| w.plane.side(x) != 0)
    }

    /// Bounding radius: every point lies in `[−R, R]^d`.
    pub fn radius(&self) -> Q {
        self.points.iter().flat_map(|p| p.iter().map(|x| x.abs())).fold(q(1), |a, b| if b > a { b } else { a })
    }

    /// `conv(points)` as a cell; its facets lie on arrangement hyperplanes.
    pub fn hull_cell(&self) -> DhResult<Cell> {
        if self.kind != ArrangementKind::Affine {
            return Err(DhError::Precondition("hull_cell is defined for affine arrangements".into()));
        }
        let mut h_rep = Vec::new();
        for (i, w) in self.walls.iter().enumerate() {
            let sides: Vec<i8> = self.points.iter().map(|p| w.plane.side(p)).collect();
            if sides.iter().all(|&s| s <= 0) {
                h_rep.push(Constraint { normal: w.plane.ell.clone(), bound: w.plane.offset.clone(), plane: Some(i) });
            } else if sides.iter().all(|&s| s >= 0) {
                h_rep.push(Constraint {
                    normal: exact::neg(&w.plane.ell),
                    bound: -w.plane.offset.clone(),
                    plane: Some(i),
                });
            }
        }
        let vertices: Vec<QVec> = distinct(&self.points)
            .into_iter()
            .filter(|p| {
                let normals: Vec<QVec> =
                    h_rep.iter().filter(|c| c.slack(p).is_zero()).map(|c| c.normal.clone()).collect();
                exact::rank(&normals) == self.dim
            })
            .collect();
        Ok(Cell::from_parts(h_rep, vertices))
    }

    /// Whether `x` is in the support region where the density can be nonzero.
    pub fn may_support(&self, x: &[Q]) -> bool {
        match self.kind {
            ArrangementKind::Affine => self.hull_cell().is_ok_and(|c| c.contains(x)),
            ArrangementKind::Cone => in_cone(&self.points, x),
        }
    }

    /// Deterministic base point for attempt `k`, outside the support.
    pub fn base_point(&self, attempt: u64) -> QVec {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ attempt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let big = self.radius() * q(4) + q(3);
        let jitter = |rng: &mut ChaCha8Rng| Q::new(rng.random_range(1..=997i64).into(), 1009.into());
        match self.kind {
            ArrangementKind::Affine => (0..self.dim).map(|_| &big * (q(1) + jitter(&mut rng))).collect(),
            ArrangementKind::Cone => {
                let sum = self.points.iter().fold(exact::zeros(self.dim), |a, p| exact::add(&a, p));
                let scale = &big / (exact::dot(&sum, &sum) + q(1));
                (0..self.dim).map(|i| -(&sum[i] * &scale * &big) + jitter(&mut rng) / q(7)).collect()
            }
        }
    }

    /// Straight walk `from → to`; `None` when two crossings coincide.
    pub fn walk(&self, from: &[Q], to: &[Q], annotate: bool) -> Option<Vec<Crossing>> {
        let mut crossings: Vec<(Q, Crossing)> = Vec::new();
        for (i, w) in self.walls.iter().enumerate() {
            let a = w.plane.value(from);
            let b = w.plane.value(to);
            if a.is_zero() || b.is_zero() {
                return None;
            }
            if a.is_positive() == b.is_positive() {
                continue;
            }
            let t = &a / (&a - &b);
            let point = exact::add(from, &exact::scale(&exact::sub(to, from), &t));
            let in_hull = annotate.then(|| w.hull_contains(&point, self.kind));
            crossings.push((t, Crossing { wall: i, point, upward: a.is_negative(), in_hull }));
        }
        crossings.sort_by(|x, y| x.0.cmp(&y.0));
        if crossings.windows(2).any(|p| p[0].0 == p[1].0) {
            return None;
        }
        Some(crossings.into_iter().map(|(_, c)| c).collect())
    }

    /// Generic walk from a deterministic base point outside the support to `point`.
    pub fn walk_to(&self, point: &[Q]) -> DhResult<Vec<Crossing>> {
        self.walk_to_with(point, true).map(|(_, c)| c)
    }

    /// Same as `walk_to`, also returning the base point; `annotate` controls hull tests.
    pub fn walk_to_with(&self, point: &[Q], annotate: bool) -> DhResult<(QVec, Vec<Crossing>)> {
        if point.len() != self.dim {
            return Err(DhError::FrameMismatch(format!("point of length {} in dimension {}", point.len(), self.dim)));
        }
        if !self.is_regular(point) {
            return Err(DhError::SingularPoint(format!("{:?}", point.iter().map(exact::fmt_q).collect::<Vec<_>>())));
        }
        if self.kind == ArrangementKind::Affine && !self.may_support(point) {
            return Ok((point.to_vec(), Vec::new()));
        }
        for attempt in 0..MAX_WALK_ATTEMPTS {
            let base = self.base_point(attempt);
            if let Some(c) = self.walk(&base, point, annotate) {
                return Ok((base, c));
            }
        }
        Err(DhError::Internal("no generic walk found".into()))
    }

    /// Cells of the arrangement inside `region` (defaults to the hull for affine kind).
    pub fn enumerate_cells(&self, region: Option<Cell>) -> DhResult<ChamberComplex> {
        let region = match (region, self.kind) {
            (Some(r), _) => r,
            (None, ArrangementKind::Affine) => self.hull_cell()?,
            (None, ArrangementKind::Cone) => {
                let r = self.radius() * q(2);
                Cell::bounding_box(&vec![-r.clone(); self.dim], &vec![r; self.dim])
            }
        };
        Ok(ChamberComplex::build(self.kind, region, self.hyperplanes()))
    }
}

/// Convex hull of a full-dimensional point set as an H-representation plus vertices.
pub fn convex_hull(points: &[QVec]) -> DhResult<Cell> {
    let pts = distinct(points);
    let d = pts.first().map_or(0, |p| p.len());
    if affine_rank(&pts) != d {
        return Err(DhError::Precondition("point set is not full-dimensional".into()));
    }
    let mut planes: BTreeSet<Hyperplane> = BTreeSet::new();
    for s in exact::subsets(pts.len(), d) {
        let diffs: Vec<QVec> = s[1..].iter().map(|&i| exact::sub(&pts[i], &pts[s[0]])).collect();
        let ns = exact::nullspace(&diffs, d);
        if ns.len() != 1 {
            continue;
        }
        let plane = Hyperplane::new(&ns[0], &exact::dot(&ns[0], &pts[s[0]]));
        planes.insert(plane);
    }
    let mut h_rep = Vec::new();
    for p in planes {
        let sides: Vec<i8> = pts.iter().map(|x| p.side(x)).collect();
        if sides.iter().all(|&s| s <= 0) {
            h_rep.push(Constraint { normal: p.ell.clone(), bound: p.offset.clone(), plane: None });
        } else if sides.iter().all(|&s| s >= 0) {
            h_rep.push(Constraint { normal: exact::neg(&p.ell), bound: -p.offset.clone(), plane: None });
        }
    }
    let vertices: Vec<QVec> = pts
        .into_iter()
        .filter(|p| {
            let normals: Vec<QVec> = h_rep.iter().filter(|c| c.slack(p).is_zero()).map(|c| c.normal.clone()).collect();
            exact::rank(&normals) == d
        })
        .collect();
    let mut cell = Cell::from_parts(h_rep, vertices);
    cell.bounded = true;
    Ok(cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{qf, qvec};

    fn two_qubit() -> Vec<QVec> {
        vec![qvec(&[1, 1]), qvec(&[1, -1]), qvec(&[-1, 1]), qvec(&[-1, -1])]
    }

    #[test]
    fn two_qubit_hyperplanes_and_cells() {
        let walls = singular_hyperplanes(&two_qubit(), ArrangementKind::Affine).unwrap();
        assert_eq!(walls.len(), 6);
        let arr = Arrangement::new(two_qubit(), ArrangementKind::Affine).unwrap();
        let cx = arr.enumerate_cells(None).unwrap();
        assert_eq!(cx.cells.len(), 4);
        assert_eq!(cx.total_volume(), q(4));
        assert_eq!(cx.adjacency.len(), 4);
    }

    #[test]
    fn rank_one_singular_points() {
        let walls = singular_hyperplanes(&[qvec(&[-2]), qvec(&[0]), qvec(&[2])], ArrangementKind::Affine).unwrap();
        let offs: Vec<Q> = walls.iter().map(|w| w.plane.offset.clone()).collect();
        assert_eq!(offs, vec![q(-2), q(0), q(2)]);
    }

    #[test]
    fn walk_crossings_are_ordered_and_annotated() {
        let arr = Arrangement::new(two_qubit(), ArrangementKind::Affine).unwrap();
        let c = arr.walk(&qvec(&[7, 3]), &[qf(1, 3), qf(1, 5)], true).unwrap();
        // Both endpoints satisfy λ₁ > λ₂, so only the edge λ₁ = 1 is a true crossing.
        let true_walls: Vec<&Crossing> = c.iter().filter(|x| x.in_hull == Some(true)).collect();
        assert_eq!(true_walls.len(), 1);
        assert_eq!(arr.walls[true_walls[0].wall].plane.ell, qvec(&[1, 0]));
        assert!(!true_walls[0].upward);
        let c = arr.walk(&qvec(&[3, 7]), &[qf(1, 3), qf(1, 5)], true).unwrap();
        let true_walls: Vec<&Crossing> = c.iter().filter(|x| x.in_hull == Some(true)).collect();
        assert_eq!(true_walls.len(), 2);
        assert_eq!(arr.walls[true_walls[0].wall].plane.ell, qvec(&[0, 1]));
        assert_eq!(arr.walls[true_walls[1].wall].plane.ell, qvec(&[1, -1]));
        assert!(arr.walk_to(&[q(3), qf(1, 7)]).unwrap().is_empty());
        assert!(matches!(arr.walk_to(&[qf(1, 3), qf(1, 3)]), Err(DhError::SingularPoint(_))));
    }

    #[test]
    fn rank_one_walk_from_the_right() {
        let arr = Arrangement::new(vec![qvec(&[-2]), qvec(&[0]), qvec(&[2])], ArrangementKind::Affine).unwrap();
        let c = arr.walk(&qvec(&[10]), &[qf(1, 2)], true).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(arr.walls[c[0].wall].plane.offset, q(2));
    }

    #[test]
    fn triangulated_volumes() {
        let cube = Cell::bounding_box(&qvec(&[0, 0, 0]), &qvec(&[1, 2, 3]));
        assert_eq!(cube.volume(), q(6));
        let (a, b) = cube.split(&qvec(&[1, 1, 1]), &q(2), Some(0));
        assert_eq!(a.unwrap().volume() + b.unwrap().volume(), q(6));
    }

    #[test]
    fn cone_membership() {
        let gens = vec![qvec(&[1, 0]), qvec(&[1, 1])];
        assert!(in_cone(&gens, &qvec(&[3, 1])));
        assert!(!in_cone(&gens, &qvec(&[1, 2])));
        assert!(in_convex_hull(&two_qubit(), &qvec(&[0, 0])));
        assert!(!in_convex_hull(&two_qubit(), &qvec(&[2, 0])));
    }

    #[test]
    fn hull_of_square_with_interior_point() {
        let mut pts = two_qubit();
        pts.push(qvec(&[0, 0]));
        let h = convex_hull(&pts).unwrap();
        assert_eq!(h.vertices.len(), 4);
        assert_eq!(h.h_rep.len(), 4);
    }
}
