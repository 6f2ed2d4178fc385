//! Miquel maps: circles on ℒ, intersection points on tetrahedra, and the evolution in z₃.

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::circle::{circumcircle, collinearity, intersections, second_intersection, Circle, CircleError};
use crate::lattice::{add, is_even, tetra_vertices, Color, Window, Z3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MiquelError {
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error("Miquel residual {residual:e} exceeds tolerance at octahedron {octahedron:?}")]
    MiquelResidualExceeded { octahedron: Z3, residual: f64 },
    #[error("centers around octahedron {0:?} are collinear")]
    DegenerateOctahedron(Z3),
    #[error("window too small for another step")]
    WindowExhausted,
    #[error("the four circles of face ({0}, {1}) share no point")]
    NoCommonPoint(i64, i64),
    #[error("circles at face ({0}, {1}) do not intersect")]
    DisjointCircles(i64, i64),
    #[error("layer {0} is not covered")]
    LayerNotCovered(i64),
    #[error("point {tetra:?} is off circle {vertex:?} (residual {residual:e})")]
    Incidence { tetra: Z3, vertex: Z3, residual: f64 },
    #[error("point {tetra:?} lacks circle {vertex:?}")]
    MissingCircle { tetra: Z3, vertex: Z3 },
    #[error("circle stored at odd site {0:?}")]
    Parity(Z3),
    #[error("map is empty")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineTolerances {
    /// Relative incidence tolerance for points on circles.
    pub incidence: f64,
    /// Relative residual allowed for the witness point of a new circle.
    pub miquel: f64,
    /// Relative collinearity threshold for the centers around an octahedron.
    pub collinear: f64,
}

impl Default for EngineTolerances {
    fn default() -> Self {
        EngineTolerances { incidence: 1e-8, miquel: 1e-8, collinear: 1e-12 }
    }
}

/// A planar circle pattern on ℤ²: circles at vertices, points at faces `(i, j)`
/// with corners `(i, j), (i+1, j), (i, j+1), (i+1, j+1)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CirclePatternLayer {
    pub k: i64,
    pub circles: BTreeMap<(i64, i64), Circle>,
    pub points: BTreeMap<(i64, i64), Complex64>,
}

impl CirclePatternLayer {
    pub fn face_corners(i: i64, j: i64) -> [(i64, i64); 4] {
        [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MiquelMap {
    circles: BTreeMap<Z3, Circle>,
    points: BTreeMap<Z3, Complex64>,
}

fn pattern_site(i: i64, j: i64, k: i64) -> Z3 {
    if (i + j + k).rem_euclid(2) == 0 {
        [i, j, k]
    } else {
        [i, j, k + 1]
    }
}

impl MiquelMap {
    /// Assembles a map from raw parts and checks every incidence.
    pub fn from_parts(
        circles: BTreeMap<Z3, Circle>,
        points: BTreeMap<Z3, Complex64>,
        tol: f64,
    ) -> Result<Self, MiquelError> {
        let m = MiquelMap { circles, points };
        m.validate(tol)?;
        Ok(m)
    }

    /// Circles on ℒ, four circles per stored point, every stored point on its circles.
    pub fn validate(&self, tol: f64) -> Result<(), MiquelError> {
        if let Some(z) = self.circles.keys().find(|z| !is_even(**z)) {
            return Err(MiquelError::Parity(*z));
        }
        for (&t, &p) in &self.points {
            for v in tetra_vertices(t) {
                let c = self.circles.get(&v).ok_or(MiquelError::MissingCircle { tetra: t, vertex: v })?;
                let r = c.signed_residual(p);
                if !(r.abs() <= tol) {
                    return Err(MiquelError::Incidence { tetra: t, vertex: v, residual: r });
                }
            }
        }
        Ok(())
    }

    /// Largest relative incidence residual and the number of (point, circle) pairs checked.
    pub fn incidence_residual(&self) -> (usize, f64) {
        let mut n = 0;
        let mut worst: f64 = 0.0;
        for (&t, &p) in &self.points {
            for v in tetra_vertices(t) {
                if let Some(c) = self.circles.get(&v) {
                    n += 1;
                    worst = worst.max(c.signed_residual(p).abs());
                }
            }
        }
        (n, worst)
    }

    /// Embeds a planar pattern at level 0: circle (i, j) goes to (i, j, 0) or (i, j, 1) by parity.
    pub fn from_layer(layer: &CirclePatternLayer, tol: f64) -> Result<Self, MiquelError> {
        let circles = layer.circles.iter().map(|(&(i, j), &c)| (pattern_site(i, j, 0), c)).collect();
        let points = layer.points.iter().map(|(&(i, j), &p)| ([i, j, 0], p)).collect();
        Self::from_parts(circles, points, tol)
    }

    /// Builds the level-0 map from circles alone.
    ///
    /// For each face the two intersections of circles (i, j) and (i+1, j) are candidates;
    /// `false` picks the one left of the directed center line, `true` the other.
    /// Faces without a branch entry use `false`.
    pub fn from_circle_pattern(
        circles: &BTreeMap<(i64, i64), Circle>,
        branches: &BTreeMap<(i64, i64), bool>,
        tol: f64,
    ) -> Result<Self, MiquelError> {
        let mut layer = CirclePatternLayer { k: 0, circles: circles.clone(), points: BTreeMap::new() };
        for &(i, j) in circles.keys() {
            let corners = CirclePatternLayer::face_corners(i, j);
            let Some(cs) = corners.iter().map(|c| circles.get(c)).collect::<Option<Vec<_>>>() else {
                continue;
            };
            let (left, right) = intersections(cs[0], cs[1]).map_err(|_| MiquelError::DisjointCircles(i, j))?;
            let p = if branches.get(&(i, j)).copied().unwrap_or(false) { right } else { left };
            if cs[2..].iter().any(|c| c.signed_residual(p).abs() > tol) {
                return Err(MiquelError::NoCommonPoint(i, j));
            }
            layer.points.insert((i, j), p);
        }
        Self::from_layer(&layer, tol)
    }

    pub fn circles(&self) -> &BTreeMap<Z3, Circle> {
        &self.circles
    }

    pub fn points(&self) -> &BTreeMap<Z3, Complex64> {
        &self.points
    }

    pub fn circle(&self, z: Z3) -> Option<&Circle> {
        self.circles.get(&z)
    }

    pub fn point(&self, t: Z3) -> Option<Complex64> {
        self.points.get(&t).copied()
    }

    /// Per-layer bounding boxes of the stored circles.
    pub fn window(&self) -> Window {
        Window::bounding(self.circles.keys())
    }

    pub fn point_levels(&self) -> Option<(i64, i64)> {
        let lo = self.points.keys().map(|t| t[2]).min()?;
        let hi = self.points.keys().map(|t| t[2]).max()?;
        Some((lo, hi))
    }

    pub fn circle_levels(&self) -> Option<(i64, i64)> {
        let lo = self.circles.keys().map(|t| t[2]).min()?;
        let hi = self.circles.keys().map(|t| t[2]).max()?;
        Some((lo, hi))
    }

    /// Keeps points with z₃ in `lo..=hi` and circles with z₃ in `lo..=hi+1`.
    pub fn restrict_levels(&self, lo: i64, hi: i64) -> MiquelMap {
        MiquelMap {
            circles: self.circles.iter().filter(|(z, _)| lo <= z[2] && z[2] <= hi + 1).map(|(&z, &c)| (z, c)).collect(),
            points: self.points.iter().filter(|(t, _)| lo <= t[2] && t[2] <= hi).map(|(&t, &p)| (t, p)).collect(),
        }
    }

    /// Circle centers.
    pub fn extract_t(&self) -> BTreeMap<Z3, Complex64> {
        self.circles.iter().map(|(&z, c)| (z, c.center())).collect()
    }

    pub fn extract_p(&self, color: Color) -> BTreeMap<Z3, Complex64> {
        self.points.iter().filter(|(t, _)| Color::of(**t) == color).map(|(&t, &p)| (t, p)).collect()
    }

    /// The planar pattern `(c_k, p_k)`.
    pub fn layer(&self, k: i64) -> Result<CirclePatternLayer, MiquelError> {
        let mut out = CirclePatternLayer { k, ..Default::default() };
        for (&t, &p) in self.points.range([i64::MIN, i64::MIN, i64::MIN]..) {
            if t[2] == k {
                out.points.insert((t[0], t[1]), p);
            }
        }
        for (&z, &c) in &self.circles {
            let (i, j) = (z[0], z[1]);
            if pattern_site(i, j, k) == z {
                out.circles.insert((i, j), c);
            }
        }
        if out.points.is_empty() {
            return Err(MiquelError::LayerNotCovered(k));
        }
        Ok(out)
    }

    pub fn evolve_step(&self, direction: Direction) -> Result<MiquelMap, MiquelError> {
        self.evolve_step_with(direction, &EngineTolerances::default())
    }

    pub fn evolve(&self, steps: usize, direction: Direction) -> Result<MiquelMap, MiquelError> {
        let mut m = self.clone();
        for _ in 0..steps {
            m = m.evolve_step(direction)?;
        }
        Ok(m)
    }

    /// One Miquel step; all earlier layers are kept, the new layer is eroded by one ring.
    pub fn evolve_step_with(&self, direction: Direction, tol: &EngineTolerances) -> Result<MiquelMap, MiquelError> {
        let (lo, hi) = self.point_levels().ok_or(MiquelError::Empty)?;
        // s: direction of travel; k: the point level we start from.
        let (s, k) = match direction {
            Direction::Forward => (1, hi),
            Direction::Backward => (-1, lo),
        };
        let mut new_points = BTreeMap::new();
        for (&t, &p) in &self.points {
            if t[2] != k {
                continue;
            }
            let nt = add(t, [0, 0, s]);
            // the two vertices nt shares with t lie on the level both tetrahedra touch
            let shared_level = if s == 1 { k + 1 } else { k };
            let shared: Vec<Z3> = tetra_vertices(nt).into_iter().filter(|v| v[2] == shared_level).collect();
            let (Some(c1), Some(c2)) = (self.circles.get(&shared[0]), self.circles.get(&shared[1])) else {
                continue;
            };
            new_points.insert(nt, second_intersection(c1, c2, p, tol.incidence)?);
        }
        let next = k + s;
        let mut new_circles = BTreeMap::new();
        for &z in self.circles.keys() {
            // z is replaced by z + 2s·e₃ through the octahedron between them.
            if z[2] != (if s == 1 { k } else { k + 1 }) {
                continue;
            }
            let o = add(z, [0, 0, s]);
            let ring = [add(o, [1, 0, 0]), add(o, [-1, 0, 0]), add(o, [0, 1, 0]), add(o, [0, -1, 0])];
            let Some(centers) = ring.iter().map(|v| self.circles.get(v).map(|c| c.center())).collect::<Option<Vec<_>>>()
            else {
                continue;
            };
            let base = add(o, [0, 0, if s == 1 { 0 } else { -1 }]);
            let quad = [base, add(base, [-1, 0, 0]), add(base, [-1, -1, 0]), add(base, [0, -1, 0])];
            let Some(pts) = quad.iter().map(|t| new_points.get(t).copied()).collect::<Option<Vec<_>>>() else {
                continue;
            };
            let mut six = centers.clone();
            six.push(self.circles[&z].center());
            if collinearity(&six) < tol.collinear {
                return Err(MiquelError::DegenerateOctahedron(o));
            }
            let c = circumcircle(pts[0], pts[1], pts[2])?;
            let residual = c.signed_residual(pts[3]).abs();
            if !(residual <= tol.miquel) {
                return Err(MiquelError::MiquelResidualExceeded { octahedron: o, residual });
            }
            new_circles.insert(add(o, [0, 0, s]), c);
        }
        if new_circles.is_empty() {
            return Err(MiquelError::WindowExhausted);
        }
        let mut out = self.clone();
        out.circles.extend(new_circles);
        for (t, p) in new_points {
            debug_assert_eq!(t[2], next);
            if tetra_vertices(t).iter().all(|v| out.circles.contains_key(v)) {
                out.points.insert(t, p);
            }
        }
        Ok(out)
    }
}
