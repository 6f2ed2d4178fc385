//! Rebuilding maps from variables plus boundary data.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use thiserror::Error;

use crate::circle::{circumcircle, second_intersection, Circle, CircleError};
use crate::lattice::{add, is_even, tetra_vertices, vertex_tetrahedra, Color, Z3};
use crate::miquel::{MiquelError, MiquelMap};
use crate::variables::VariableField;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReconstructError {
    #[error("the unknown's coefficient vanishes at {0:?}")]
    SingularSolve(Z3),
    #[error("inconsistent boundary: {0}")]
    InconsistentBoundary(String),
    #[error("points around vertex {vertex:?} are not concyclic (residual {residual:e})")]
    ConcyclicityViolated { vertex: Z3, residual: f64 },
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error(transparent)]
    Miquel(#[from] MiquelError),
}

pub type PointMap = BTreeMap<Z3, Complex64>;

/// Solves mr(a₀, …, a₂ₘ₋₁) = v for the entry at position `k`; the value stored there is ignored.
///
/// The relation is linear-fractional in the unknown. Returns `None` when its coefficient vanishes.
pub fn solve_single(a: &[Complex64], k: usize, v: Complex64) -> Option<Complex64> {
    let n = a.len();
    assert!(n >= 4 && n.is_multiple_of(2) && k < n);
    let mut num = Complex64::new(1.0, 0.0);
    let mut den = Complex64::new(1.0, 0.0);
    for i in (0..n).step_by(2) {
        if i != k && i + 1 != k {
            num *= a[i] - a[i + 1];
        }
        if i + 1 != k && (i + 2) % n != k {
            den *= a[i + 1] - a[(i + 2) % n];
        }
    }
    let (x, y) = if k.is_multiple_of(2) { (a[k + 1], a[(k + n - 1) % n]) } else { (a[k - 1], a[(k + 1) % n]) };
    let coef = num + v * den;
    if coef.norm() <= 1e-12 * (num.norm() + (v * den).norm()) {
        return None;
    }
    Some((num * x + v * den * y) / coef)
}

/// Black points whose multi-ratio equals −X•(w) at w₃ = 0, using point levels 0 and 1 only.
pub const EIGHT_BLACK: [Z3; 8] =
    [[-1, -1, 0], [0, -2, 0], [0, -1, 1], [1, -1, 0], [0, 0, 0], [-1, 1, 0], [-1, 0, 1], [-2, 0, 0]];
/// White points whose multi-ratio equals −X°(w), using point levels w₃ and w₃+1.
pub const EIGHT_WHITE: [Z3; 8] =
    [[1, 0, 0], [0, 0, 1], [0, 1, 0], [-1, 0, 0], [-2, -1, 0], [-1, -1, 1], [-1, -2, 0], [0, -1, 0]];

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub values: PointMap,
    /// Sites inside the slab that no relation could reach.
    pub unreached: Vec<Z3>,
}

/// The two boundary rows z₂ ∈ {row, row+1} on levels 0 and 1 of a t-map.
pub fn y_boundary(t: &PointMap, row: i64) -> PointMap {
    t.iter().filter(|(z, _)| (0..=1).contains(&z[2]) && (row..=row + 1).contains(&z[1])).map(|(&z, &v)| (z, v)).collect()
}

/// The two crossing double-diagonal strips through `(c1, c2)` on point levels 0 and 1.
pub fn x_boundary(p: &PointMap, (c1, c2): (i64, i64)) -> PointMap {
    p.iter()
        .filter(|(z, _)| {
            let (a, b) = (z[0] - c1, z[1] - c2);
            (0..=1).contains(&z[2]) && ((0..=1).contains(&(a + b)) || (0..=1).contains(&(a - b)))
        })
        .map(|(&z, &v)| (z, v))
        .collect()
}

/// Rebuilds t on levels 0 and 1 from Y on levels −1 and 0 and two boundary rows.
///
/// Rows are swept upward. A level-1 center t(z+σ₂₃) is solved from Y(z) at z₃ = 0, a level-0 center
/// t(z+σ₂,₋₃) from the downward form at z₃ = 1, which equals 1/Y(z − 2e₃).
pub fn reconstruct_from_y(y: &VariableField, boundary: &PointMap) -> Result<Reconstruction, ReconstructError> {
    if boundary.is_empty() {
        return Err(ReconstructError::InconsistentBoundary("empty boundary".into()));
    }
    let r0 = boundary.keys().map(|z| z[1]).min().unwrap();
    let lo = boundary.keys().map(|z| z[0]).min().unwrap();
    let hi = boundary.keys().map(|z| z[0]).max().unwrap();
    for z in boundary.keys() {
        if !is_even(*z) || !(0..=1).contains(&z[2]) || z[1] > r0 + 1 {
            return Err(ReconstructError::InconsistentBoundary(format!("site {z:?} is outside the boundary strip")));
        }
    }
    for r in [r0, r0 + 1] {
        for i in lo..=hi {
            let z = row_site(i, r);
            if !boundary.contains_key(&z) {
                return Err(ReconstructError::InconsistentBoundary(format!("missing boundary center {z:?}")));
            }
        }
    }
    let top = y.values.keys().map(|z| z[1]).max().unwrap_or(r0) + 1;
    let mut t = boundary.clone();
    let mut unreached = Vec::new();
    for r in r0 + 2..=top {
        for i in lo..=hi {
            let target = row_site(i, r);
            let solved = if target[2] == 1 {
                let z = [i, r - 1, 0];
                solve_upper(&t, y, z)?
            } else {
                let z = [i, r - 1, 1];
                solve_lower(&t, y, z)?
            };
            match solved {
                Some(v) => {
                    t.insert(target, v);
                }
                None => unreached.push(target),
            }
        }
    }
    Ok(Reconstruction { values: t, unreached })
}

/// The center stored at column i of row r in the two-level slab.
fn row_site(i: i64, r: i64) -> Z3 {
    if (i + r).rem_euclid(2) == 0 {
        [i, r, 0]
    } else {
        [i, r, 1]
    }
}

fn gather<const N: usize>(t: &PointMap, z: Z3, offs: [Z3; N]) -> Option<[Complex64; N]> {
    let mut out = [Complex64::new(0.0, 0.0); N];
    for (o, d) in out.iter_mut().zip(offs) {
        *o = *t.get(&add(z, d))?;
    }
    Some(out)
}

fn solve_upper(t: &PointMap, y: &VariableField, z: Z3) -> Result<Option<Complex64>, ReconstructError> {
    let (Some(yv), Some([a, n1, n2, d2])) = (y.get(z), gather(t, z, [[0, 0, 0], [1, 0, 1], [-1, 0, 1], [0, -1, 1]]))
    else {
        return Ok(None);
    };
    let den = yv * (d2 - a);
    if den.norm() <= 1e-12 * (d2 - a).norm().max(1.0) {
        return Err(ReconstructError::SingularSolve(add(z, [0, 1, 1])));
    }
    Ok(Some(a - (n1 - a) * (n2 - a) / den))
}

fn solve_lower(t: &PointMap, y: &VariableField, z: Z3) -> Result<Option<Complex64>, ReconstructError> {
    let (Some(y_below), Some([a, n2, d1, d2])) =
        (y.get(add(z, [0, 0, -2])), gather(t, z, [[0, 0, 0], [0, -1, -1], [1, 0, -1], [-1, 0, -1]]))
    else {
        return Ok(None);
    };
    if y_below.norm() == 0.0 || (n2 - a).norm() == 0.0 {
        return Err(ReconstructError::SingularSolve(add(z, [0, 1, -1])));
    }
    let yy = 1.0 / y_below;
    Ok(Some(a - yy * (d1 - a) * (d2 - a) / (n2 - a)))
}

/// Rebuilds same-color points on levels 0 and 1 from X on levels 0 and 1 and the crossing strips.
///
/// Uses the four-point relation at X-level 1 and the eight-point relation at X-level 0, solving any
/// relation with a single unknown until nothing changes.
pub fn reconstruct_from_x(x: &VariableField, boundary: &PointMap, color: Color) -> Result<Reconstruction, ReconstructError> {
    for z in boundary.keys() {
        if Color::of(*z) != color || !(0..=1).contains(&z[2]) {
            return Err(ReconstructError::InconsistentBoundary(format!("site {z:?} is not a boundary point")));
        }
    }
    let eight = if color == Color::Black { EIGHT_BLACK } else { EIGHT_WHITE };
    let mut relations: Vec<(Vec<Z3>, Complex64)> = Vec::new();
    for (&w, &v) in &x.values {
        let seq: Vec<Z3> = match w[2] {
            1 => vertex_tetrahedra(w, color).to_vec(),
            0 => eight.iter().map(|&d| add(w, d)).collect(),
            _ => continue,
        };
        relations.push((seq, -v));
    }
    let slab: BTreeSet<Z3> = relations.iter().flat_map(|(s, _)| s.iter().copied()).collect();
    let mut known = boundary.clone();
    let mut changed = true;
    while changed {
        changed = false;
        for (seq, v) in &relations {
            let mut unknown = seq.iter().enumerate().filter(|(_, z)| !known.contains_key(*z));
            let (Some((k, &site)), None) = (unknown.next(), unknown.next()) else { continue };
            let vals: Vec<Complex64> = seq.iter().map(|z| known.get(z).copied().unwrap_or_default()).collect();
            let u = solve_single(&vals, k, *v).ok_or(ReconstructError::SingularSolve(site))?;
            known.insert(site, u);
            changed = true;
        }
    }
    let unreached = slab.into_iter().filter(|z| !known.contains_key(z)).collect();
    Ok(Reconstruction { values: known, unreached })
}

/// Relative incidence tolerance for circles fit through four same-color points.
pub const CONCYCLIC_TOL: f64 = 1e-8;

/// Fits circles through the four same-color points at each vertex and adds the other color
/// as second intersections.
pub fn complete_map_from_pcolor(p: &PointMap, color: Color, tol: f64) -> Result<MiquelMap, ReconstructError> {
    let mut vertices = BTreeSet::new();
    for t in p.keys() {
        vertices.extend(tetra_vertices(*t));
    }
    let mut circles = BTreeMap::new();
    for z in vertices {
        let Some(pts) = vertex_tetrahedra(z, color).iter().map(|t| p.get(t).copied()).collect::<Option<Vec<_>>>() else {
            continue;
        };
        let c = circumcircle(pts[0], pts[1], pts[2])?;
        let residual = c.signed_residual(pts[3]).abs();
        if residual > tol {
            return Err(ReconstructError::ConcyclicityViolated { vertex: z, residual });
        }
        circles.insert(z, c);
    }
    let mut points = p.clone();
    let mut others = BTreeSet::new();
    for t in p.keys() {
        others.extend([add(*t, [0, 0, 1]), add(*t, [0, 0, -1])]);
    }
    for t in others {
        if let Some(q) = other_color_point(&circles, p, t, color) {
            points.insert(t, q?);
        }
    }
    points.retain(|t, _| tetra_vertices(*t).iter().all(|v| circles.contains_key(v)));
    Ok(MiquelMap::from_parts(circles, points, tol.max(1e-9))?)
}

fn other_color_point(
    circles: &BTreeMap<Z3, Circle>,
    p: &PointMap,
    t: Z3,
    color: Color,
) -> Option<Result<Complex64, ReconstructError>> {
    // shared edge with the same-color tetrahedron below, else the one above
    let options: [(Z3, Z3, Z3); 2] = if color == Color::Black {
        [([1, 0, 0], [0, 1, 0], [0, 0, -1]), ([0, 0, 1], [1, 1, 1], [0, 0, 1])]
    } else {
        [([0, 0, 0], [1, 1, 0], [0, 0, -1]), ([1, 0, 1], [0, 1, 1], [0, 0, 1])]
    };
    for (a, b, from) in options {
        if let (Some(c1), Some(c2), Some(&q)) = (circles.get(&add(t, a)), circles.get(&add(t, b)), p.get(&add(t, from))) {
            return Some(second_intersection(c1, c2, q, 1e-8).map_err(Into::into));
        }
    }
    None
}
