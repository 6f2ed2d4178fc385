//! Circles in the finite plane and the few constructions Miquel dynamics needs.

use num_complex::Complex64;
use thiserror::Error;

use crate::projective::{cro, Ext};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircleError {
    #[error("radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("center must be finite")]
    InfiniteCenter,
    #[error("point at infinity cannot be tested for incidence")]
    InfinitePoint,
    #[error("point is not on both circles (residuals {0:e}, {1:e})")]
    NotOnBothCircles(f64, f64),
    #[error("circles have coincident centers")]
    CoincidentCenters,
    #[error("points are collinear")]
    CollinearPoints,
    #[error("points coincide")]
    CoincidentPoints,
    #[error("line through two equal points")]
    DegenerateLine,
    #[error("circles do not intersect")]
    DisjointCircles,
    #[error("image of the circle passes through infinity")]
    CircleThroughInfinity,
}

/// Points within `TANGENCY_TOL · radius` of the center line count as tangency points.
pub const TANGENCY_TOL: f64 = 1e-10;
/// Triangle area below `COLLINEAR_TOL · diameter²` counts as collinear.
pub const COLLINEAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    center: Complex64,
    radius: f64,
}

impl Circle {
    pub fn new(center: Complex64, radius: f64) -> Result<Self, CircleError> {
        if !(center.re.is_finite() && center.im.is_finite()) {
            return Err(CircleError::InfiniteCenter);
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(CircleError::BadRadius(radius));
        }
        Ok(Circle { center, radius })
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `(|p − center| − radius) / radius`.
    pub fn signed_residual(&self, p: Complex64) -> f64 {
        ((p - self.center).norm() - self.radius) / self.radius
    }

    pub fn point_at(&self, angle: f64) -> Complex64 {
        self.center + Complex64::from_polar(self.radius, angle)
    }

    pub fn incidence(&self, p: Complex64) -> IncidenceReport {
        IncidenceReport { point: Ext::Finite(p), circle: *self, signed_residual: self.signed_residual(p) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidenceReport {
    pub point: Ext,
    pub circle: Circle,
    pub signed_residual: f64,
}

impl IncidenceReport {
    pub fn accepted(&self, tol: f64) -> bool {
        self.signed_residual.abs() <= tol
    }
}

pub fn on_circle(c: &Circle, p: Ext, tol: f64) -> Result<bool, CircleError> {
    let z = p.finite().ok_or(CircleError::InfinitePoint)?;
    Ok(c.signed_residual(z).abs() <= tol)
}

/// Euclidean reflection of `p` across the line through `a` and `b`.
pub fn reflect_about_line(p: Complex64, a: Complex64, b: Complex64) -> Result<Complex64, CircleError> {
    let d = b - a;
    if d.norm() == 0.0 {
        return Err(CircleError::DegenerateLine);
    }
    Ok(a + (p - a).conj() * d / d.conj())
}

fn line_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    ((p - a) * d.conj()).im.abs() / d.norm()
}

/// The other common point of two circles through `p`.
///
/// Tangency (p on the center line up to [`TANGENCY_TOL`]) returns `p`.
pub fn second_intersection(c1: &Circle, c2: &Circle, p: Complex64, tol: f64) -> Result<Complex64, CircleError> {
    let (r1, r2) = (c1.signed_residual(p), c2.signed_residual(p));
    if r1.abs() > tol || r2.abs() > tol {
        return Err(CircleError::NotOnBothCircles(r1, r2));
    }
    second_intersection_unchecked(c1, c2, p)
}

pub(crate) fn second_intersection_unchecked(c1: &Circle, c2: &Circle, p: Complex64) -> Result<Complex64, CircleError> {
    let (a, b) = (c1.center, c2.center);
    if (b - a).norm() <= 1e-15 * (c1.radius + c2.radius) {
        return Err(CircleError::CoincidentCenters);
    }
    if line_distance(p, a, b) < TANGENCY_TOL * c1.radius.min(c2.radius) {
        return Ok(p);
    }
    reflect_about_line(p, a, b)
}

/// Both intersection points; the first lies left of the directed line from `c1` to `c2`.
pub fn intersections(c1: &Circle, c2: &Circle) -> Result<(Complex64, Complex64), CircleError> {
    let (a, b) = (c1.center, c2.center);
    let d = (b - a).norm();
    if d == 0.0 {
        return Err(CircleError::CoincidentCenters);
    }
    let (r1, r2) = (c1.radius, c2.radius);
    let x = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let h2 = r1 * r1 - x * x;
    if h2 < -1e-12 * r1 * r1 {
        return Err(CircleError::DisjointCircles);
    }
    let h = h2.max(0.0).sqrt();
    let u = (b - a) / d;
    let base = a + u * x;
    let iu = Complex64::new(0.0, 1.0) * u;
    Ok((base + iu * h, base - iu * h))
}

/// Twice the signed triangle area.
fn area2(p1: Complex64, p2: Complex64, p3: Complex64) -> f64 {
    ((p2 - p1).conj() * (p3 - p1)).im
}

pub fn circumcircle(p1: Complex64, p2: Complex64, p3: Complex64) -> Result<Circle, CircleError> {
    if p1 == p2 || p2 == p3 || p1 == p3 {
        return Err(CircleError::CoincidentPoints);
    }
    let diam = (p1 - p2).norm().max((p2 - p3).norm()).max((p1 - p3).norm());
    let a2 = area2(p1, p2, p3);
    if a2.abs() * 0.5 < COLLINEAR_TOL * diam * diam {
        return Err(CircleError::CollinearPoints);
    }
    // Work relative to p1 to keep the numerators small.
    let (b, c) = (p2 - p1, p3 - p1);
    let (bb, cc) = (b.norm_sqr(), c.norm_sqr());
    let ux = (c.im * bb - b.im * cc) / (2.0 * a2);
    let uy = (b.re * cc - c.re * bb) / (2.0 * a2);
    let u = Complex64::new(ux, uy);
    // Average of the three distances keeps all residuals symmetric.
    let r = ((u).norm() + (u - b).norm() + (u - c).norm()) / 3.0;
    Circle::new(p1 + u, r)
}

/// Incidence residual of `p4` against the circle through the first three points.
pub fn concyclic_residual(p1: Complex64, p2: Complex64, p3: Complex64, p4: Complex64) -> Result<f64, CircleError> {
    Ok(circumcircle(p1, p2, p3)?.signed_residual(p4).abs())
}

/// `|Im cro(p1,p2,p3,p4)|`, the Möbius-invariant alternative to [`concyclic_residual`].
pub fn cross_ratio_residual(p1: Complex64, p2: Complex64, p3: Complex64, p4: Complex64) -> Option<f64> {
    cro(p1, p2, p3, p4).ok().map(|v| v.im.abs())
}

/// Largest distance of a point from the best line through the extreme pair, relative to the diameter.
pub fn collinearity(points: &[Complex64]) -> f64 {
    let mut best = (0.0, 0, 0);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = (points[i] - points[j]).norm();
            if d > best.0 {
                best = (d, i, j);
            }
        }
    }
    let (diam, i, j) = best;
    if diam == 0.0 {
        return 0.0;
    }
    points
        .iter()
        .map(|&p| line_distance(p, points[i], points[j]) / diam)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit() -> Circle {
        Circle::new(c(0.0, 0.0), 1.0).unwrap()
    }

    #[test]
    fn incidence_on_unit_circle() {
        assert!(on_circle(&unit(), Ext::new(1.0, 0.0), 1e-12).unwrap());
        assert!(!on_circle(&unit(), Ext::new(1.1, 0.0), 1e-9).unwrap());
        assert_eq!(on_circle(&unit(), Ext::Infinity, 1e-9), Err(CircleError::InfinitePoint));
    }

    #[test]
    fn rejects_bad_radius() {
        assert!(Circle::new(c(0.0, 0.0), 0.0).is_err());
        assert!(Circle::new(c(0.0, 0.0), -1.0).is_err());
        assert!(Circle::new(c(f64::NAN, 0.0), 1.0).is_err());
    }

    #[test]
    fn mirror_intersection() {
        let c2 = Circle::new(c(1.0, 0.0), 1.0).unwrap();
        let h = 3f64.sqrt() / 2.0;
        let q = second_intersection(&unit(), &c2, c(0.5, h), 1e-12).unwrap();
        assert!((q - c(0.5, -h)).norm() < 1e-15);
    }

    #[test]
    fn tangency_returns_same_point() {
        let c2 = Circle::new(c(2.0, 0.0), 1.0).unwrap();
        assert_eq!(second_intersection(&unit(), &c2, c(1.0, 0.0), 1e-12).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn second_intersection_errors() {
        let c2 = Circle::new(c(1.0, 0.0), 1.0).unwrap();
        assert!(matches!(second_intersection(&unit(), &c2, c(3.0, 0.0), 1e-9), Err(CircleError::NotOnBothCircles(..))));
        assert_eq!(second_intersection(&unit(), &unit(), c(1.0, 0.0), 1e-9), Err(CircleError::CoincidentCenters));
    }

    #[test]
    fn circumcircles() {
        let u = circumcircle(c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)).unwrap();
        assert!(u.center().norm() < 1e-15 && (u.radius() - 1.0).abs() < 1e-15);
        // perpendicular bisectors of (0,1) and (1,1+i) meet at 0.5+0.5i
        let v = circumcircle(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0)).unwrap();
        assert!((v.center() - c(0.5, 0.5)).norm() < 1e-15);
        assert!((v.radius() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(circumcircle(c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)), Err(CircleError::CollinearPoints));
        assert_eq!(circumcircle(c(0.0, 0.0), c(0.0, 0.0), c(2.0, 1.0)), Err(CircleError::CoincidentPoints));
    }

    #[test]
    fn concyclic_examples() {
        let r = concyclic_residual(c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)).unwrap();
        assert!(r < 1e-12);
        let r = concyclic_residual(c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(2.0, 0.0)).unwrap();
        assert!(r > 0.1);
    }

    #[test]
    fn collinear_cross_ratio_is_real() {
        let v = cro(c(0.0, 0.0), c(1.0, 1.0), c(3.0, 3.0), c(-2.0, -2.0)).unwrap();
        assert!(v.im.abs() < 1e-14);
    }

    #[test]
    fn reflections() {
        assert!((reflect_about_line(c(0.0, 1.0), c(0.0, 0.0), c(1.0, 0.0)).unwrap() - c(0.0, -1.0)).norm() < 1e-15);
        let p = c(0.3, 0.3);
        assert!((reflect_about_line(p, c(0.0, 0.0), c(1.0, 1.0)).unwrap() - p).norm() < 1e-15);
        assert_eq!(reflect_about_line(p, c(1.0, 1.0), c(1.0, 1.0)), Err(CircleError::DegenerateLine));
    }

    fn pt() -> impl Strategy<Value = Complex64> {
        (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(a, b)| c(a, b))
    }

    fn triangle() -> impl Strategy<Value = (Complex64, Complex64, Complex64)> {
        (pt(), pt(), pt()).prop_filter("thin", |(a, b, cc)| {
            let d = (*a - *b).norm().max((*b - *cc).norm()).max((*a - *cc).norm());
            area2(*a, *b, *cc).abs() > 0.05 * d * d && (*a - *b).norm() > 0.1 && (*b - *cc).norm() > 0.1 && (*a - *cc).norm() > 0.1
        })
    }

    proptest! {
        #[test]
        fn circumcircle_passes_through_points((a, b, cc) in triangle()) {
            let k = circumcircle(a, b, cc).unwrap();
            for p in [a, b, cc] {
                prop_assert!(k.signed_residual(p).abs() < 1e-12);
            }
            for (x, y, z) in [(b, a, cc), (cc, b, a), (b, cc, a)] {
                let k2 = circumcircle(x, y, z).unwrap();
                prop_assert!((k2.center() - k.center()).norm() < 1e-12 * k.radius().max(1.0));
            }
        }

        #[test]
        fn second_intersection_is_involution(ca in pt(), cb in pt(), ra in 0.5..3.0f64, rb in 0.5..3.0f64) {
            let d = (ca - cb).norm();
            prop_assume!(d > 0.1 && d < (ra + rb) * 0.95 && d > (ra - rb).abs() * 1.05);
            let (k1, k2) = (Circle::new(ca, ra).unwrap(), Circle::new(cb, rb).unwrap());
            let (p, q) = intersections(&k1, &k2).unwrap();
            let s = second_intersection(&k1, &k2, p, 1e-9).unwrap();
            // the independent quadratic solve gives the other root
            prop_assert!((s - q).norm() < 1e-9 * (1.0 + ra + rb));
            prop_assert!(k1.signed_residual(s).abs() < 1e-10 && k2.signed_residual(s).abs() < 1e-10);
            let back = second_intersection(&k1, &k2, s, 1e-9).unwrap();
            prop_assert!((back - p).norm() < 1e-12 * (1.0 + ra + rb));
        }

        #[test]
        fn reflection_is_involution(p in pt(), a in pt(), b in pt()) {
            prop_assume!((a - b).norm() > 0.1);
            let q = reflect_about_line(reflect_about_line(p, a, b).unwrap(), a, b).unwrap();
            prop_assert!((q - p).norm() < 1e-12 * (1.0 + p.norm() + a.norm()));
        }

        #[test]
        fn moebius_pushes_circles_to_circles(center in pt(), r in 0.5..2.0f64, th in prop::collection::vec(0.0..std::f64::consts::TAU, 4), pole in pt()) {
            use crate::projective::Moebius;
            prop_assume!((pole - center).norm() > r * 1.5);
            let m = Moebius::new(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), -pole).unwrap();
            let k = Circle::new(center, r).unwrap();
            let pts: Vec<Complex64> = th.iter().map(|&t| m.apply_finite(k.point_at(t)).unwrap()).collect();
            if let Ok(img) = circumcircle(pts[0], pts[1], pts[2]) {
                let spread = (pts[0] - pts[1]).norm().min((pts[1] - pts[2]).norm()).min((pts[0] - pts[2]).norm());
                prop_assume!(spread > 1e-2 * img.radius());
                prop_assert!(img.signed_residual(pts[3]).abs() < 1e-9);
            }
        }
    }
}
