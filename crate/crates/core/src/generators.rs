//! Pattern constructors: generic, isoradial, orthodiagonal (h-Miquel) and tangent-packing (s-Miquel).

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle::{circumcircle, intersections, second_intersection, Circle, CircleError};
use crate::miquel::{CirclePatternLayer, MiquelError, MiquelMap};
use crate::projective::{Ext, Moebius};

/// Incidence tolerance used to validate every generated pattern.
pub const GENERATOR_TOL: f64 = 1e-9;
const MAX_ATTEMPTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("window {0}×{1} is smaller than 4×4")]
    TooSmall(usize, usize),
    #[error("random draws kept producing non-intersecting circles")]
    RetryExhausted,
    #[error("zig-zag vectors {0} and {1} are parallel")]
    DegenerateRhombus(usize, usize),
    #[error("zig-zag vector has modulus {0}, expected 1")]
    NotUnit(f64),
    #[error("expected {expected} zig-zag vectors, got {got}")]
    ZigZagCount { expected: usize, got: usize },
    #[error("diagonals of the quad at face ({0}, {1}) do not cross")]
    FoldedQuad(i64, i64),
    #[error("Möbius pole {0} lies inside the pattern")]
    PoleInsidePattern(Complex64),
    #[error("Möbius pole lies on a circle of the pattern")]
    CircleThroughInfinity,
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error(transparent)]
    Miquel(#[from] MiquelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Generic,
    Isoradial,
    Orthodiagonal,
    Packing,
}

impl std::str::FromStr for GeneratorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "generic" => Ok(GeneratorKind::Generic),
            "isoradial" => Ok(GeneratorKind::Isoradial),
            "orthodiagonal" => Ok(GeneratorKind::Orthodiagonal),
            "packing" => Ok(GeneratorKind::Packing),
            _ => Err(format!("unknown generator kind `{s}`")),
        }
    }
}

/// What to build. `cols` counts circles along z₁, `rows` along z₂.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub cols: usize,
    pub rows: usize,
    pub seed: u64,
    /// Perturbation strength; 0 yields the regular member of each class.
    pub scale: f64,
    /// Optional deformation `(a, b, c, d)` applied after construction.
    pub moebius: Option<[[f64; 2]; 4]>,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, cols: usize, rows: usize, seed: u64) -> Self {
        GeneratorSpec { kind, cols, rows, seed, scale: 0.15, moebius: None }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_moebius(mut self, m: &Moebius) -> Self {
        self.moebius = Some([m.a, m.b, m.c, m.d].map(|z| [z.re, z.im]));
        self
    }

    pub fn moebius_transform(&self) -> Option<Result<Moebius, GeneratorError>> {
        self.moebius.map(|k| {
            let [a, b, c, d] = k.map(|[re, im]| Complex64::new(re, im));
            Moebius::new(a, b, c, d).map_err(|_| GeneratorError::CircleThroughInfinity)
        })
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<MiquelMap, GeneratorError> {
    if spec.cols < 4 || spec.rows < 4 {
        return Err(GeneratorError::TooSmall(spec.cols, spec.rows));
    }
    let m = match spec.kind {
        GeneratorKind::Generic => gen_generic(spec)?,
        GeneratorKind::Isoradial => {
            let (u, v) = random_zigzags(spec.cols, spec.rows, spec.seed, spec.scale);
            gen_isoradial(&u, &v, spec.cols, spec.rows)?
        }
        GeneratorKind::Orthodiagonal => gen_orthodiagonal(spec)?,
        GeneratorKind::Packing => gen_packing(spec)?,
    };
    match spec.moebius_transform() {
        None => Ok(m),
        Some(t) => {
            let t = t?;
            if spec.kind == GeneratorKind::Packing {
                check_pole_outside(&m, &t)?;
            }
            apply_moebius(&m, &t)
        }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-1.0..=1.0)
}

fn jitter(rng: &mut ChaCha8Rng, s: f64) -> Complex64 {
    let (x, y) = (unit(rng), unit(rng));
    c(x, y) * (0.3 * s)
}

fn row_rng(seed: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64);
    rng
}

/// The orthogonal grid: unit-spaced centers, radius √2/2, face points at face centers.
pub fn regular_grid(cols: usize, rows: usize) -> Result<MiquelMap, GeneratorError> {
    let mut layer = CirclePatternLayer::default();
    for i in 0..cols as i64 {
        for j in 0..rows as i64 {
            layer.circles.insert((i, j), Circle::new(c(i as f64, j as f64), SQRT_2 / 2.0)?);
            if i + 1 < cols as i64 && j + 1 < rows as i64 {
                layer.points.insert((i, j), c(i as f64 + 0.5, j as f64 + 0.5));
            }
        }
    }
    Ok(MiquelMap::from_layer(&layer, GENERATOR_TOL)?)
}

/// Row-by-row propagation: row 0 is random, each later circle passes through the
/// face points below it with its center as the free parameter.
pub fn gen_generic(spec: &GeneratorSpec) -> Result<MiquelMap, GeneratorError> {
    let (n, m) = (spec.cols as i64, spec.rows as i64);
    let s = spec.scale;
    let r0 = SQRT_2 / 2.0;
    let mut circles = BTreeMap::new();
    let mut points: BTreeMap<(i64, i64), Complex64> = BTreeMap::new();

    let mut rng = row_rng(spec.seed, 0);
    let mut ok = false;
    for _ in 0..MAX_ATTEMPTS {
        let row: Vec<Circle> = (0..n)
            .map(|i| Circle::new(c(i as f64, 0.0) + jitter(&mut rng, s), r0 * (1.0 + s * unit(&mut rng))))
            .collect::<Result<_, _>>()?;
        let pts: Option<Vec<Complex64>> = (0..n - 1)
            .map(|i| {
                let (a, b) = intersections(&row[i as usize], &row[i as usize + 1]).ok()?;
                (a - b).norm().gt(&1e-6).then_some(if a.im > b.im { a } else { b })
            })
            .collect();
        if let Some(pts) = pts {
            for (i, circle) in row.into_iter().enumerate() {
                circles.insert((i as i64, 0), circle);
            }
            for (i, p) in pts.into_iter().enumerate() {
                points.insert((i as i64, 0), p);
            }
            ok = true;
            break;
        }
    }
    if !ok {
        return Err(GeneratorError::RetryExhausted);
    }

    for j in 1..m {
        let mut rng = row_rng(spec.seed, j as usize);
        let mut done = false;
        for _ in 0..MAX_ATTEMPTS {
            let mut row = Vec::with_capacity(n as usize);
            for i in 0..n {
                let ideal = c(i as f64, j as f64) + jitter(&mut rng, s);
                let (center, through) = if i == 0 {
                    (ideal, points[&(0, j - 1)])
                } else if i == n - 1 {
                    (ideal, points[&(i - 1, j - 1)])
                } else {
                    // project onto the perpendicular bisector of the two known points
                    let (q1, q2) = (points[&(i - 1, j - 1)], points[&(i, j - 1)]);
                    let mid = (q1 + q2) / 2.0;
                    let perp = c(0.0, 1.0) * (q2 - q1) / (q2 - q1).norm();
                    let t = ((ideal - mid) * perp.conj()).re;
                    (mid + perp * t, q1)
                };
                row.push(Circle::new(center, (center - through).norm())?);
            }
            let mut new_pts = Vec::with_capacity(n as usize - 1);
            for i in 0..n - 1 {
                let q = points[&(i, j - 1)];
                let p = second_intersection(&row[i as usize], &row[i as usize + 1], q, 1e-9)?;
                if (p - q).norm() < 1e-6 {
                    break;
                }
                new_pts.push(p);
            }
            if new_pts.len() == n as usize - 1 {
                for (i, circle) in row.into_iter().enumerate() {
                    circles.insert((i as i64, j), circle);
                }
                if j < m - 1 {
                    for (i, p) in new_pts.into_iter().enumerate() {
                        points.insert((i as i64, j), p);
                    }
                }
                done = true;
                break;
            }
        }
        if !done {
            return Err(GeneratorError::RetryExhausted);
        }
    }
    let layer = CirclePatternLayer { k: 0, circles, points };
    Ok(MiquelMap::from_layer(&layer, GENERATOR_TOL)?)
}

/// Random zig-zag unit vectors near the orthogonal grid, `cols + rows − 2` of each kind.
pub fn random_zigzags(cols: usize, rows: usize, seed: u64, scale: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let k = cols + rows - 2;
    let mut rng = row_rng(seed, 0);
    let u = (0..k).map(|_| Complex64::from_polar(1.0, 2.0 * scale * unit(&mut rng))).collect();
    let v = (0..k).map(|_| Complex64::from_polar(1.0, FRAC_PI_2 + 2.0 * scale * unit(&mut rng))).collect();
    (u, v)
}

/// Integrable pattern from zig-zag unit vectors.
///
/// With α = i+j and β = j−i, vertex (i, j) sits at P(α, β) and face (i, j) at P(α+1, β),
/// where P(α, β) = Σ_{a<α} u_a + Σ_{b<β} v_b. The `v` index is shifted by `cols − 1`
/// so that β starts at 0. All circles have radius 1. Each slice needs `cols + rows − 2` entries.
pub fn gen_isoradial(u: &[Complex64], v: &[Complex64], cols: usize, rows: usize) -> Result<MiquelMap, GeneratorError> {
    let k = cols + rows - 2;
    for w in [u, v] {
        if w.len() != k {
            return Err(GeneratorError::ZigZagCount { expected: k, got: w.len() });
        }
        if let Some(z) = w.iter().find(|z| (z.norm() - 1.0).abs() > 1e-14) {
            return Err(GeneratorError::NotUnit(z.norm()));
        }
    }
    let off = cols as i64 - 1;
    let mut su = vec![Complex64::new(0.0, 0.0)];
    for x in u {
        su.push(su.last().unwrap() + x);
    }
    let mut sv = vec![Complex64::new(0.0, 0.0)];
    for x in v {
        sv.push(sv.last().unwrap() + x);
    }
    let pos = |a: i64, b: i64| su[a as usize] + sv[(b + off) as usize];

    let mut layer = CirclePatternLayer::default();
    for i in 0..cols as i64 {
        for j in 0..rows as i64 {
            let (a, b) = (i + j, j - i);
            // edge rhombi: horizontal uses (u_a, v_{b−1}), vertical (u_a, v_b)
            for (bb, ok) in [(b - 1, i + 1 < cols as i64), (b, j + 1 < rows as i64)] {
                if ok && (a as usize) < k && (0..k as i64).contains(&(bb + off)) {
                    let (x, y) = (u[a as usize], v[(bb + off) as usize]);
                    if (x * y.conj()).im.abs() < 1e-9 {
                        return Err(GeneratorError::DegenerateRhombus(a as usize, (bb + off) as usize));
                    }
                }
            }
            layer.circles.insert((i, j), Circle::new(pos(a, b), 1.0)?);
            if i + 1 < cols as i64 && j + 1 < rows as i64 {
                layer.points.insert((i, j), pos(a + 1, b));
            }
        }
    }
    Ok(MiquelMap::from_layer(&layer, GENERATOR_TOL)?)
}

/// h-Miquel pattern built from a discrete harmonic map and its conjugate.
///
/// Black face points Q(m, n) use m = (i+j)/2, n = (j−i)/2. The sites with m+n even carry a
/// harmonic map for random conductances c > 0 with jittered square boundary values; the others
/// carry its conjugate, fixed by Q(D) − Q(B) = i·c·(Q(C) − Q(A)) on each quad A, B, C, D. Every
/// quad then has perpendicular diagonals. White face points are the diagonal crossings.
pub fn gen_orthodiagonal(spec: &GeneratorSpec) -> Result<MiquelMap, GeneratorError> {
    let (n, m) = (spec.cols as i64, spec.rows as i64);
    let mut last = GeneratorError::RetryExhausted;
    let mut rng = row_rng(spec.seed, 0);
    for _ in 0..MAX_ATTEMPTS {
        match orthodiagonal_attempt(n, m, spec.scale, &mut rng) {
            Ok(map) => return Ok(map),
            Err(e @ GeneratorError::FoldedQuad(..)) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

fn orthodiagonal_attempt(n: i64, m: i64, s: f64, rng: &mut ChaCha8Rng) -> Result<MiquelMap, GeneratorError> {
    let faces = (-1..n).flat_map(|i| (-1..m).map(move |j| (i, j))).filter(|(i, j)| (i + j).rem_euclid(2) == 0);
    let (mut m0, mut m1, mut n0, mut n1) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
    for (i, j) in faces {
        m0 = m0.min((i + j) / 2);
        m1 = m1.max((i + j) / 2);
        n0 = n0.min((j - i).div_euclid(2));
        n1 = n1.max((j - i).div_euclid(2));
    }
    let regular = |a: i64, b: i64| c((a - b) as f64 + 0.5, (a + b) as f64 + 0.5);
    let even = |a: i64, b: i64| (a + b).rem_euclid(2) == 0;
    let on_rim = |a: i64, b: i64| a == m0 || a == m1 || b == n0 || b == n1;

    let mut cond = BTreeMap::new();
    for a in m0..m1 {
        for b in n0..n1 {
            cond.insert((a, b), 1.0 + s * unit(rng));
        }
    }
    let mut q: BTreeMap<(i64, i64), Complex64> = BTreeMap::new();
    let mut inner = BTreeMap::new();
    for a in m0..=m1 {
        for b in (n0..=n1).filter(|&b| even(a, b)) {
            if on_rim(a, b) {
                q.insert((a, b), regular(a, b) + jitter(rng, s));
            } else {
                let k = inner.len();
                inner.insert((a, b), k);
            }
        }
    }

    // Dirichlet problem: Σ c·(Q(w) − Q(v)) = 0 over the four quads at each inner site v.
    let dim = inner.len();
    let mut lap = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DMatrix::<f64>::zeros(dim, 2);
    for (&(a, b), &r) in &inner {
        let around = [((a, b), (a + 1, b + 1)), ((a - 1, b - 1), (a - 1, b - 1)), ((a - 1, b), (a - 1, b + 1)), ((a, b - 1), (a + 1, b - 1))];
        for (quad, w) in around {
            let k = cond[&quad];
            lap[(r, r)] += k;
            match inner.get(&w) {
                Some(&col) => lap[(r, col)] -= k,
                None => {
                    rhs[(r, 0)] += k * q[&w].re;
                    rhs[(r, 1)] += k * q[&w].im;
                }
            }
        }
    }
    let sol = lap.lu().solve(&rhs).ok_or(GeneratorError::RetryExhausted)?;
    for (&site, &r) in &inner {
        q.insert(site, c(sol[(r, 0)], sol[(r, 1)]));
    }

    // integrate the conjugate across quads
    let start = if even(m0, n0 + 1) { (m0 + 1, n0 + 1) } else { (m0, n0 + 1) };
    q.insert(start, regular(start.0, start.1));
    let mut changed = true;
    while changed {
        changed = false;
        for (&(a, b), &k) in &cond {
            let (f, g, d) = if even(a, b) {
                ((a + 1, b), (a, b + 1), c(0.0, k) * (q[&(a + 1, b + 1)] - q[&(a, b)]))
            } else {
                ((a, b), (a + 1, b + 1), c(0.0, -k) * (q[&(a, b + 1)] - q[&(a + 1, b)]))
            };
            match (q.get(&f).copied(), q.get(&g).copied()) {
                (Some(x), None) => {
                    q.insert(g, x + d);
                    changed = true;
                }
                (None, Some(y)) => {
                    q.insert(f, y - d);
                    changed = true;
                }
                _ => {}
            }
        }
    }
    let qf = |i: i64, j: i64| q[&((i + j).div_euclid(2), (j - i).div_euclid(2))];

    let mut layer = CirclePatternLayer::default();
    for i in 0..n {
        for j in 0..m {
            let (a, b) = if (i + j).rem_euclid(2) == 0 { (qf(i - 1, j - 1), qf(i, j)) } else { (qf(i - 1, j), qf(i, j - 1)) };
            layer.circles.insert((i, j), Circle::new((a + b) / 2.0, (a - b).norm() / 2.0)?);
        }
    }
    for i in 0..n - 1 {
        for j in 0..m - 1 {
            let p = if (i + j).rem_euclid(2) == 0 {
                qf(i, j)
            } else {
                let (a, b, c_, d) = (qf(i - 1, j), qf(i + 1, j), qf(i, j - 1), qf(i, j + 1));
                let den = ((b - a) * (d - c_).conj()).im;
                let t = ((c_ - a) * (d - c_).conj()).im / den;
                let u = ((c_ - a) * (b - a).conj()).im / den;
                if !(0.0 < t && t < 1.0 && 0.0 < u && u < 1.0) {
                    return Err(GeneratorError::FoldedQuad(i, j));
                }
                a + (b - a) * t
            };
            layer.points.insert((i, j), p);
        }
    }
    Ok(MiquelMap::from_layer(&layer, GENERATOR_TOL)?)
}

/// The coin tangent to the given lower neighbours whose center is closest to `ideal`.
/// Radii are kept within `band` around the regular radius.
fn tangent_coin(a: Option<&Circle>, b: Option<&Circle>, ideal: Complex64, band: (f64, f64)) -> Option<(Complex64, f64)> {
    match (a, b) {
        (Some(a), Some(b)) => {
            let center = |r: f64| {
                let ga = Circle::new(a.center(), a.radius() + r).ok()?;
                let gb = Circle::new(b.center(), b.radius() + r).ok()?;
                let (x, y) = intersections(&ga, &gb).ok()?;
                Some(if x.im > y.im { x } else { y })
            };
            let gap = (b.center() - a.center()).norm() - a.radius() - b.radius();
            let (mut lo, mut hi) = (((gap / 2.0).max(0.0) + 1e-9).max(band.0), band.1);
            if lo >= hi {
                return None;
            }
            let cost = |r: f64| center(r).map_or(f64::INFINITY, |z| (z - ideal).norm());
            // golden-section search along the tangency locus
            let g = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..100 {
                let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
                if cost(x1) < cost(x2) {
                    hi = x2;
                } else {
                    lo = x1;
                }
            }
            let r = (lo + hi) / 2.0;
            center(r).map(|z| (z, r))
        }
        // a single neighbour leaves both direction and radius free
        (Some(a), None) | (None, Some(a)) => {
            let d = ideal - a.center();
            let r = (d.norm() - a.radius()).clamp(band.0, band.1);
            Some((a.center() + d / d.norm() * (a.radius() + r), r))
        }
        (None, None) => None,
    }
}

/// s-Miquel pattern: circles with even i+j form a packing whose diagonal neighbours touch;
/// odd circles pass through the four tangency points around them.
///
/// Coins are propagated row by row. Each is tangent to its two lower diagonal neighbours, and its
/// center is the point of that tangency locus nearest a jittered lattice position. A one-ring margin is built and cropped so every odd circle sees four points.
pub fn gen_packing(spec: &GeneratorSpec) -> Result<MiquelMap, GeneratorError> {
    for attempt in 0..MAX_ATTEMPTS {
        match build_packing(spec, attempt) {
            Err(
                GeneratorError::RetryExhausted
                | GeneratorError::Circle(CircleError::CollinearPoints | CircleError::CoincidentPoints),
            ) => continue,
            other => return other,
        }
    }
    Err(GeneratorError::RetryExhausted)
}

fn build_packing(spec: &GeneratorSpec, attempt: usize) -> Result<MiquelMap, GeneratorError> {
    let (n, m) = (spec.cols as i64 + 2, spec.rows as i64 + 2);
    let s = spec.scale;
    let r0 = SQRT_2 / 2.0;
    let mut coins: BTreeMap<(i64, i64), Circle> = BTreeMap::new();
    for j in 0..m {
        // later attempts draw from fresh streams
        let mut rng = row_rng(spec.seed, j as usize + attempt * m as usize);
        let mut done = false;
        for _ in 0..MAX_ATTEMPTS {
            let mut row = Vec::new();
            for i in (0..n).filter(|i| (i + j) % 2 == 0) {
                let ideal = c(i as f64, j as f64) + jitter(&mut rng, s);
                let coin = if j == 0 {
                    Some((ideal, r0 * (1.0 + s * unit(&mut rng))))
                } else {
                    tangent_coin(coins.get(&(i - 1, j - 1)), coins.get(&(i + 1, j - 1)), ideal, (0.6 * r0, 1.4 * r0))
                };
                match coin {
                    // coins two apart in a row may not overlap
                    Some((center, r))
                        if row.last().is_none_or(|(_, p): &(_, Circle)| (p.center() - center).norm() > p.radius() + r) =>
                    {
                        row.push(((i, j), Circle::new(center, r)?))
                    }
                    _ => break,
                }
            }
            if row.len() == (0..n).filter(|i| (i + j) % 2 == 0).count() {
                coins.extend(row);
                done = true;
                break;
            }
        }
        if !done {
            return Err(GeneratorError::RetryExhausted);
        }
    }
    let mut touch = BTreeMap::new();
    for i in 0..n - 1 {
        for j in 0..m - 1 {
            let (a, b) = if (i + j) % 2 == 0 { ((i, j), (i + 1, j + 1)) } else { ((i + 1, j), (i, j + 1)) };
            let (ca, cb) = (coins[&a], coins[&b]);
            let gap = (cb.center() - ca.center()).norm() - ca.radius() - cb.radius();
            if gap.abs() > 1e-9 {
                return Err(GeneratorError::RetryExhausted);
            }
            let p = ca.center() + (cb.center() - ca.center()) * (ca.radius() / (ca.radius() + cb.radius()));
            touch.insert((i, j), p);
        }
    }
    let mut layer = CirclePatternLayer::default();
    for i in 1..n - 1 {
        for j in 1..m - 1 {
            let circle = if (i + j) % 2 == 0 {
                coins[&(i, j)]
            } else {
                circumcircle(touch[&(i - 1, j - 1)], touch[&(i, j - 1)], touch[&(i, j)])?
            };
            layer.circles.insert((i - 1, j - 1), circle);
            if i < n - 2 && j < m - 2 {
                layer.points.insert((i - 1, j - 1), touch[&(i, j)]);
            }
        }
    }
    Ok(MiquelMap::from_layer(&layer, GENERATOR_TOL)?)
}

fn check_pole_outside(m: &MiquelMap, t: &Moebius) -> Result<(), GeneratorError> {
    let Some(pole) = t.pole() else { return Ok(()) };
    let (mut lo, mut hi) = (c(f64::INFINITY, f64::INFINITY), c(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for circle in m.circles().values() {
        let (z, r) = (circle.center(), circle.radius());
        lo = c(lo.re.min(z.re - r), lo.im.min(z.im - r));
        hi = c(hi.re.max(z.re + r), hi.im.max(z.im + r));
    }
    if lo.re <= pole.re && pole.re <= hi.re && lo.im <= pole.im && pole.im <= hi.im {
        return Err(GeneratorError::PoleInsidePattern(pole));
    }
    Ok(())
}

/// Pushes every point and circle forward by `t`; circles are refit through three image points.
pub fn apply_moebius(m: &MiquelMap, t: &Moebius) -> Result<MiquelMap, GeneratorError> {
    let pole = t.pole();
    let mut circles = BTreeMap::new();
    for (&z, circle) in m.circles() {
        if let Some(pole) = pole {
            if circle.signed_residual(pole).abs() < 1e-9 {
                return Err(GeneratorError::CircleThroughInfinity);
            }
        }
        let img: Vec<Complex64> = (0..3)
            .map(|k| circle.point_at(2.0 * std::f64::consts::PI * k as f64 / 3.0))
            .map(|p| t.apply(Ext::Finite(p)).finite().ok_or(GeneratorError::CircleThroughInfinity))
            .collect::<Result<_, _>>()?;
        circles.insert(z, circumcircle(img[0], img[1], img[2])?);
    }
    let mut points = BTreeMap::new();
    for (&tt, &p) in m.points() {
        points.insert(tt, t.apply_finite(p).ok_or(GeneratorError::CircleThroughInfinity)?);
    }
    // images far from the pole lose relative accuracy, so validate loosely
    Ok(MiquelMap::from_parts(circles, points, 1e-7)?)
}
