//! JSON and CSV renderings. Rationals stay exact in JSON; CSV densities are
//! presentation-only decimals with 12 significant digits.

use dhmeasure::chambers::Cell;
use dhmeasure::error::{DhError, DhResult};
use dhmeasure::exact::{fmt_q, to_f64, QVec, Q};
use dhmeasure::measure_engine::PiecewiseMeasure;
use dhmeasure::multiplicity::Atom;
use dhmeasure::polyring::Polynomial;
use dhmeasure::qmarginal::{Inequality, MomentPolytope};
use num_traits::{Signed, Zero};
use serde::Serialize;

/// Largest number of grid points a CSV export will evaluate.
pub const MAX_GRID_POINTS: u64 = 2_000_000;

pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0".into() } else { x.to_string() };
    }
    let e = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&e) {
        return format!("{x:.11e}");
    }
    let s = format!("{:.*}", (11 - e).max(0) as usize, x);
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn strings(v: &[Q]) -> Vec<String> {
    v.iter().map(fmt_q).collect()
}

fn csv_string(rows: Vec<Vec<String>>) -> DhResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).map_err(|e| DhError::Internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| DhError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| DhError::Internal(e.to_string()))
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

/// Density on cells that contain `x`: the open cell if there is one, else the mean over
/// the closed cells meeting `x`, else zero.
fn density_near(cells: &[Cell], densities: &[Polynomial], x: &[Q]) -> Q {
    let mut touching = Vec::new();
    for (c, d) in cells.iter().zip(densities) {
        if c.contains_strictly(x) {
            return d.eval(x);
        }
        if c.contains(x) {
            touching.push(d.eval(x));
        }
    }
    if touching.is_empty() {
        return Q::zero();
    }
    let n = Q::from_integer(touching.len().into());
    touching.into_iter().sum::<Q>() / n
}

/// Grid multiples of `h` covering the bounding box of `points`.
fn grid(points: &[&QVec], h: &Q) -> DhResult<Vec<QVec>> {
    let Some(first) = points.first() else { return Ok(Vec::new()) };
    let dim = first.len();
    let mut axes: Vec<Vec<Q>> = Vec::with_capacity(dim);
    let mut total: u64 = 1;
    for i in 0..dim {
        let lo = points.iter().map(|p| &p[i]).min().unwrap();
        let hi = points.iter().map(|p| &p[i]).max().unwrap();
        let (a, b) = ((lo / h).floor().to_integer(), (hi / h).ceil().to_integer());
        let mut axis = Vec::new();
        let mut k = a;
        while k <= b {
            axis.push(Q::from_integer(k.clone()) * h);
            k += 1;
        }
        total = total.saturating_mul(axis.len() as u64);
        axes.push(axis);
    }
    if total > MAX_GRID_POINTS {
        return Err(DhError::ScaleGuard(format!("{total} grid points exceed {MAX_GRID_POINTS}; use a coarser --grid")));
    }
    let mut out: Vec<QVec> = vec![Vec::new()];
    for axis in &axes {
        out = out.iter().flat_map(|p| axis.iter().map(move |a| [p.clone(), vec![a.clone()]].concat())).collect();
    }
    Ok(out)
}

/// `piece, x_1..x_r, density` rows: the regular part on a grid over its support, then
/// each delta layer on a grid of its own lattice coordinates.
pub fn measure_csv(m: &PiecewiseMeasure, h: &Q) -> DhResult<String> {
    if !h.is_positive() {
        return Err(DhError::Parse("grid spacing must be positive".into()));
    }
    let r = m.dim();
    let mut header = vec!["piece".to_string()];
    header.extend((1..=r).map(|i| format!("x{i}")));
    header.push("density".into());
    let mut rows = vec![header];
    let support: Vec<&QVec> = m
        .complex
        .cells
        .iter()
        .zip(&m.densities)
        .filter(|(_, d)| !d.is_zero())
        .flat_map(|(c, _)| c.vertices.iter())
        .collect();
    for x in grid(&support, h)? {
        let d = density_near(&m.complex.cells, &m.densities, &x);
        let mut row = vec!["cell".to_string()];
        row.extend(strings(&x));
        row.push(sig12(to_f64(&d)));
        rows.push(row);
    }
    for (i, l) in m.layers.iter().enumerate() {
        let verts: Vec<&QVec> = l.cells.iter().flat_map(|c| c.vertices.iter()).collect();
        for w in grid(&verts, h)? {
            let d = density_near(&l.cells, &l.densities, &w);
            let mut row = vec![format!("layer{i}")];
            row.extend(strings(&l.frame.embed(&w)));
            row.push(sig12(to_f64(&d)));
            rows.push(row);
        }
    }
    csv_string(rows)
}

#[derive(Serialize)]
struct InequalityJson {
    normal: Vec<String>,
    bound: String,
}

impl From<&Inequality> for InequalityJson {
    fn from(i: &Inequality) -> Self {
        InequalityJson { normal: strings(&i.normal), bound: fmt_q(&i.bound) }
    }
}

#[derive(Serialize)]
struct PolytopeJson {
    vertices: Vec<Vec<String>>,
    inequalities: Vec<InequalityJson>,
    equations: Vec<InequalityJson>,
}

pub fn polytope_json(p: &MomentPolytope) -> String {
    to_json(&PolytopeJson {
        vertices: p.vertices.iter().map(|v| strings(v)).collect(),
        inequalities: p.inequalities.iter().map(Into::into).collect(),
        equations: p.equations.iter().map(Into::into).collect(),
    })
}

pub fn polytope_csv(p: &MomentPolytope) -> DhResult<String> {
    let r = p.vertices.first().map_or(0, |v| v.len());
    let mut header: Vec<String> = (1..=r).map(|i| format!("x{i}")).collect();
    header.insert(0, "vertex".into());
    let mut rows = vec![header];
    for (i, v) in p.vertices.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(strings(v));
        rows.push(row);
    }
    csv_string(rows)
}

#[derive(Serialize)]
struct AtomJson {
    point: Vec<String>,
    multiplicity: String,
    mass: String,
}

pub fn atoms_json(atoms: &[Atom]) -> String {
    let v: Vec<AtomJson> = atoms
        .iter()
        .map(|a| AtomJson {
            point: strings(&a.point.coords),
            multiplicity: a.multiplicity.to_string(),
            mass: fmt_q(&a.mass),
        })
        .collect();
    to_json(&v)
}

pub fn atoms_csv(atoms: &[Atom]) -> DhResult<String> {
    let r = atoms.first().map_or(0, |a| a.point.coords.len());
    let mut header: Vec<String> = (1..=r).map(|i| format!("x{i}")).collect();
    header.push("multiplicity".into());
    header.push("mass".into());
    let mut rows = vec![header];
    for a in atoms {
        let mut row = strings(&a.point.coords);
        row.push(a.multiplicity.to_string());
        row.push(fmt_q(&a.mass));
        rows.push(row);
    }
    csv_string(rows)
}

/// Two-column `key,value` table.
pub fn pairs_csv(pairs: &[(&str, String)]) -> DhResult<String> {
    let mut rows = vec![vec!["key".to_string(), "value".to_string()]];
    rows.extend(pairs.iter().map(|(k, v)| vec![k.to_string(), v.clone()]));
    csv_string(rows)
}
