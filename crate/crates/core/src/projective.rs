//! Points of the extended complex plane, multi-ratios and Möbius maps.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectiveError {
    #[error("multi-ratio needs an even number of arguments, got {0}")]
    OddLength(usize),
    #[error("multi-ratio needs at least four arguments, got {0}")]
    TooFewArguments(usize),
    #[error("multi-ratio is ill-defined: consecutive arguments coincide around index {0}")]
    IllDefinedMultiRatio(usize),
    #[error("value is not a finite complex number")]
    NotFinite,
    #[error("Möbius determinant {det:e} is below tolerance")]
    SingularMoebius { det: f64 },
}

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ext {
    Finite(Complex64),
    Infinity,
}

impl Ext {
    pub const ZERO: Ext = Ext::Finite(Complex64::new(0.0, 0.0));

    pub fn new(re: f64, im: f64) -> Self {
        Ext::from(Complex64::new(re, im))
    }

    /// Rejects NaN and infinite components instead of mapping them to `Infinity`.
    pub fn try_finite(z: Complex64) -> Result<Self, ProjectiveError> {
        if z.re.is_finite() && z.im.is_finite() {
            Ok(Ext::Finite(z))
        } else {
            Err(ProjectiveError::NotFinite)
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Ext::Infinity)
    }

    pub fn finite(&self) -> Option<Complex64> {
        match self {
            Ext::Finite(z) => Some(*z),
            Ext::Infinity => None,
        }
    }
}

/// Any non-finite component (including NaN) is read as the point at infinity.
impl From<Complex64> for Ext {
    fn from(z: Complex64) -> Self {
        if z.re.is_finite() && z.im.is_finite() {
            Ext::Finite(z)
        } else {
            Ext::Infinity
        }
    }
}

impl From<f64> for Ext {
    fn from(x: f64) -> Self {
        Ext::from(Complex64::new(x, 0.0))
    }
}

/// Side information about how a multi-ratio was evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MultiRatioDiagnostics {
    /// Number of infinite arguments whose factor pair was replaced by −1.
    pub infinite_pairs: usize,
    /// A consecutive coincident pair produced a zero factor.
    pub coincident_pair: bool,
}

impl MultiRatioDiagnostics {
    /// Both an infinite argument and a coincident pair occurred; the value
    /// was obtained by taking the infinity limit first.
    pub fn iterated_limit(&self) -> bool {
        self.infinite_pairs > 0 && self.coincident_pair
    }
}

/// `mr(a₁,…,a₂ₘ) = Π(a₂ᵢ₋₁ − a₂ᵢ) / Π(a₂ᵢ − a₂ᵢ₊₁)` with cyclic indices.
pub fn multi_ratio(points: &[Ext]) -> Result<Ext, ProjectiveError> {
    multi_ratio_diagnosed(points).map(|(v, _)| v)
}

pub fn multi_ratio_diagnosed(
    points: &[Ext],
) -> Result<(Ext, MultiRatioDiagnostics), ProjectiveError> {
    let n = points.len();
    if n % 2 == 1 {
        return Err(ProjectiveError::OddLength(n));
    }
    if n < 4 {
        return Err(ProjectiveError::TooFewArguments(n));
    }
    let mut diag = MultiRatioDiagnostics::default();
    // Argument k sits in numerator factor k/2 and in denominator factor (k-1)/2 (cyclic).
    let mut num_skip = vec![false; n / 2];
    let mut den_skip = vec![false; n / 2];
    let mut value = Complex64::new(1.0, 0.0);
    for (k, p) in points.iter().enumerate() {
        if p.is_infinite() {
            let nf = k / 2;
            let df = (k + n - 1) % n / 2;
            if num_skip[nf] || den_skip[df] {
                return Err(ProjectiveError::IllDefinedMultiRatio(k));
            }
            num_skip[nf] = true;
            den_skip[df] = true;
            value = -value;
            diag.infinite_pairs += 1;
        }
    }
    let fin = |k: usize| points[k % n].finite().expect("infinite factors are skipped");
    let mut zero_num = None;
    let mut zero_den = None;
    for i in 0..n / 2 {
        if !num_skip[i] {
            let f = fin(2 * i) - fin(2 * i + 1);
            if f == Complex64::new(0.0, 0.0) {
                zero_num = Some(2 * i);
            } else {
                value *= f;
            }
        }
        if !den_skip[i] {
            let f = fin(2 * i + 1) - fin(2 * i + 2);
            if f == Complex64::new(0.0, 0.0) {
                zero_den = Some(2 * i + 1);
            } else {
                value /= f;
            }
        }
    }
    match (zero_num, zero_den) {
        (Some(_), Some(k)) => Err(ProjectiveError::IllDefinedMultiRatio(k)),
        (Some(_), None) => {
            diag.coincident_pair = true;
            Ok((Ext::ZERO, diag))
        }
        (None, Some(_)) => {
            diag.coincident_pair = true;
            Ok((Ext::Infinity, diag))
        }
        (None, None) => Ok((Ext::from(value), diag)),
    }
}

pub fn cross_ratio(a: Ext, b: Ext, c: Ext, d: Ext) -> Result<Ext, ProjectiveError> {
    multi_ratio(&[a, b, c, d])
}

/// Multi-ratio of finite points; the common case inside the lattice code.
pub fn mr(points: &[Complex64]) -> Result<Complex64, ProjectiveError> {
    let ext: Vec<Ext> = points.iter().map(|&z| Ext::from(z)).collect();
    match multi_ratio(&ext)? {
        Ext::Finite(z) => Ok(z),
        Ext::Infinity => Ok(Complex64::new(f64::INFINITY, f64::INFINITY)),
    }
}

pub fn cro(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Complex64, ProjectiveError> {
    mr(&[a, b, c, d])
}

pub const DEFAULT_DET_TOL: f64 = 1e-12;

/// `z ↦ (az + b)/(cz + d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moebius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Moebius {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self, ProjectiveError> {
        Self::with_tolerance(a, b, c, d, DEFAULT_DET_TOL)
    }

    /// The determinant must exceed `tol · max(|a|,|b|,|c|,|d|)²`.
    pub fn with_tolerance(
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
        tol: f64,
    ) -> Result<Self, ProjectiveError> {
        let det = (a * d - b * c).norm();
        let scale = [a, b, c, d].iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(det > tol * scale * scale) {
            return Err(ProjectiveError::SingularMoebius { det });
        }
        Ok(Moebius { a, b, c, d })
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Moebius { a: one, b: zero, c: zero, d: one }
    }

    pub fn apply(&self, p: Ext) -> Ext {
        match p {
            Ext::Infinity => {
                if self.c == Complex64::new(0.0, 0.0) {
                    Ext::Infinity
                } else {
                    Ext::from(self.a / self.c)
                }
            }
            Ext::Finite(z) => {
                let den = self.c * z + self.d;
                if den == Complex64::new(0.0, 0.0) {
                    Ext::Infinity
                } else {
                    Ext::from((self.a * z + self.b) / den)
                }
            }
        }
    }

    /// Image of a finite point, `None` at the pole.
    pub fn apply_finite(&self, z: Complex64) -> Option<Complex64> {
        self.apply(Ext::Finite(z)).finite()
    }

    pub fn inverse(&self) -> Self {
        Moebius { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Moebius) -> Self {
        Moebius {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn pole(&self) -> Option<Complex64> {
        if self.c == Complex64::new(0.0, 0.0) {
            None
        } else {
            Some(-self.d / self.c)
        }
    }
}

/// `|mr(points) − mr(M(points))|`; both infinite counts as zero.
pub fn moebius_invariance_residual(m: &Moebius, points: &[Ext]) -> Result<f64, ProjectiveError> {
    let before = multi_ratio(points)?;
    let mapped: Vec<Ext> = points.iter().map(|&p| m.apply(p)).collect();
    let after = multi_ratio(&mapped)?;
    Ok(match (before, after) {
        (Ext::Finite(x), Ext::Finite(y)) => (x - y).norm(),
        (Ext::Infinity, Ext::Infinity) => 0.0,
        _ => f64::INFINITY,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn f(re: f64, im: f64) -> Ext {
        Ext::new(re, im)
    }

    fn close(a: Ext, b: Complex64, tol: f64) -> bool {
        a.finite().is_some_and(|z| (z - b).norm() < tol)
    }

    #[test]
    fn repeated_triple_has_unit_ratio() {
        let pts: Vec<Ext> = [1.0, 2.0, 3.0, 1.0, 2.0, 3.0].iter().map(|&x| Ext::from(x)).collect();
        assert!(close(multi_ratio(&pts).unwrap(), c(1.0, 0.0), 1e-15));
    }

    #[test]
    fn infinity_factors_cancel() {
        let pts = [Ext::ZERO, Ext::from(1.0), Ext::Infinity, Ext::from(2.0)];
        assert!(close(multi_ratio(&pts).unwrap(), c(0.5, 0.0), 1e-15));
        assert!(close(cross_ratio(pts[0], pts[1], pts[2], pts[3]).unwrap(), c(0.5, 0.0), 1e-15));
    }

    #[test]
    fn square_on_unit_circle() {
        let v = cross_ratio(f(1.0, 0.0), f(0.0, 1.0), f(-1.0, 0.0), f(0.0, -1.0)).unwrap();
        assert!(close(v, c(-1.0, 0.0), 1e-15));
    }

    #[test]
    fn length_errors() {
        let three = [Ext::ZERO; 3];
        assert_eq!(multi_ratio(&three), Err(ProjectiveError::OddLength(3)));
        assert_eq!(multi_ratio(&[Ext::ZERO; 2]), Err(ProjectiveError::TooFewArguments(2)));
    }

    #[test]
    fn coincidences() {
        // one consecutive pair in a numerator factor gives zero
        let v = cross_ratio(f(1.0, 0.0), f(1.0, 0.0), f(2.0, 0.0), f(3.0, 0.0)).unwrap();
        assert_eq!(v, Ext::ZERO);
        // in a denominator factor gives infinity
        let v = cross_ratio(f(1.0, 0.0), f(2.0, 0.0), f(2.0, 0.0), f(3.0, 0.0)).unwrap();
        assert_eq!(v, Ext::Infinity);
        // a run of three is ill-defined
        let e = cross_ratio(f(1.0, 0.0), f(1.0, 0.0), f(1.0, 0.0), f(3.0, 0.0));
        assert!(matches!(e, Err(ProjectiveError::IllDefinedMultiRatio(_))));
        // two adjacent infinities share a factor
        let e = cross_ratio(Ext::Infinity, Ext::Infinity, f(1.0, 0.0), f(3.0, 0.0));
        assert!(matches!(e, Err(ProjectiveError::IllDefinedMultiRatio(_))));
        // non-consecutive coincidence is fine
        let v = cross_ratio(f(1.0, 0.0), f(2.0, 0.0), f(1.0, 0.0), f(3.0, 0.0)).unwrap();
        assert!(v.finite().is_some());
    }

    #[test]
    fn iterated_limit_is_flagged() {
        let (v, d) = multi_ratio_diagnosed(&[Ext::Infinity, f(1.0, 0.0), f(1.0, 0.0), f(2.0, 0.0)]).unwrap();
        assert_eq!(v, Ext::Infinity);
        assert!(d.iterated_limit());
    }

    #[test]
    fn moebius_basics() {
        let id = Moebius::identity();
        assert_eq!(id.apply(f(3.0, 4.0)), f(3.0, 4.0));
        let inv = Moebius::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(inv.apply(Ext::ZERO), Ext::Infinity);
        assert_eq!(inv.apply(Ext::Infinity), Ext::ZERO);
        assert!(Moebius::new(c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)).is_err());
    }

    #[test]
    fn inversion_keeps_cross_ratio() {
        let inv = Moebius::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let pts: Vec<Ext> = [1.0, 2.0, 3.0, 5.0].iter().map(|&x| Ext::from(x)).collect();
        assert!(moebius_invariance_residual(&inv, &pts).unwrap() < 1e-12);
        assert_eq!(moebius_invariance_residual(&Moebius::identity(), &pts).unwrap(), 0.0);
    }

    fn pt() -> impl Strategy<Value = Complex64> {
        (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(a, b)| c(a, b))
    }

    fn moebius() -> impl Strategy<Value = Moebius> {
        (pt(), pt(), pt(), pt()).prop_filter_map("singular", |(a, b, cc, d)| {
            if (a * d - b * cc).norm() < 0.5 {
                None
            } else {
                Moebius::new(a, b, cc, d).ok()
            }
        })
    }

    fn spread(pts: &[Complex64], min: f64) -> bool {
        let n = pts.len();
        (0..n).all(|i| (pts[i] - pts[(i + 1) % n]).norm() > min)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / a.norm().max(b.norm()).max(1.0)
    }

    proptest! {
        #[test]
        fn inverse_composition_is_identity(m in moebius(), p in pt()) {
            let q = m.inverse().apply(m.apply(Ext::Finite(p)));
            if let Some(z) = q.finite() {
                prop_assert!((z - p).norm() < 1e-9 * (1.0 + p.norm()));
            }
        }

        #[test]
        fn mr_is_moebius_invariant(m in moebius(), pts in prop::collection::vec(pt(), 6)) {
            prop_assume!(spread(&pts, 0.3));
            let img: Vec<Complex64> = pts.iter().filter_map(|&z| m.apply_finite(z)).collect();
            prop_assume!(img.len() == 6 && img.iter().all(|z| z.norm() < 1e4) && spread(&img, 1e-3));
            let a = mr(&pts).unwrap();
            let b = mr(&img).unwrap();
            prop_assert!(rel(a, b) < 1e-8, "{} vs {}", a, b);
        }

        #[test]
        fn shift_and_reflection_rules(pts in prop::collection::vec(pt(), 6)) {
            prop_assume!(spread(&pts, 0.3));
            let v = mr(&pts).unwrap();
            let mut s2 = pts.clone();
            s2.rotate_left(2);
            prop_assert!(rel(v, mr(&s2).unwrap()) < 1e-9);
            let mut s1 = pts.clone();
            s1.rotate_left(1);
            prop_assert!(rel(v * mr(&s1).unwrap(), c(1.0, 0.0)) < 1e-9);
            // full reversal keeps the value
            let rev: Vec<Complex64> = pts.iter().rev().copied().collect();
            prop_assert!(rel(v, mr(&rev).unwrap()) < 1e-9);
            // reflection a1, a6, ..., a2 inverts it
            let mut refl = vec![pts[0]];
            refl.extend(pts[1..].iter().rev());
            prop_assert!(rel(v * mr(&refl).unwrap(), c(1.0, 0.0)) < 1e-9);
            // cyclic shift by three is an odd shift
            let s3 = [pts[3], pts[4], pts[5], pts[0], pts[1], pts[2]];
            prop_assert!(rel(v * mr(&s3).unwrap(), c(1.0, 0.0)) < 1e-9);
        }

        #[test]
        fn concyclic_iff_real(center in pt(), r in 0.5..4.0f64, th in prop::collection::vec(0.0..std::f64::consts::TAU, 4), off in 0.05..1.0f64) {
            let on: Vec<Complex64> = th.iter().map(|&t| center + Complex64::from_polar(r, t)).collect();
            prop_assume!(spread(&on, 0.05) && (on[0] - on[2]).norm() > 0.05 && (on[1] - on[3]).norm() > 0.05);
            let v = cro(on[0], on[1], on[2], on[3]).unwrap();
            prop_assert!(v.im.abs() < 1e-9 * v.norm().max(1.0));
            let moved = center + Complex64::from_polar(r * (1.0 + off), th[3]);
            let w = cro(on[0], on[1], on[2], moved).unwrap();
            prop_assert!(w.im.abs() > 1e-6 * w.norm());
        }
    }
}
