//! Y-, X- and W-variables, edge cross-ratios, Y-system residuals and the special-class identities.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{add, is_even, Color, Z3};
use crate::miquel::{CirclePatternLayer, MiquelMap};
use crate::projective::{cro, ProjectiveError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VariableError {
    #[error("missing data at {0:?}")]
    MissingData(Z3),
    #[error("coincident centers around {0:?}")]
    ZeroDenominator(Z3),
    #[error("singular recurrence at {0:?}")]
    SingularRecurrence(Z3),
    #[error(transparent)]
    Projective(#[from] ProjectiveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarKind {
    Y,
    Xb,
    Xw,
    Wb,
    Ww,
}

impl VarKind {
    pub const ALL: [VarKind; 5] = [VarKind::Y, VarKind::Xb, VarKind::Xw, VarKind::Wb, VarKind::Ww];

    /// Y and X live on even sites, W on odd ones.
    pub fn on_even_sites(self) -> bool {
        matches!(self, VarKind::Y | VarKind::Xb | VarKind::Xw)
    }

    pub fn name(self) -> &'static str {
        match self {
            VarKind::Y => "y",
            VarKind::Xb => "xb",
            VarKind::Xw => "xw",
            VarKind::Wb => "wb",
            VarKind::Ww => "ww",
        }
    }
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableField {
    pub kind: VarKind,
    pub values: BTreeMap<Z3, Complex64>,
}

impl VariableField {
    pub fn get(&self, z: Z3) -> Option<Complex64> {
        self.values.get(&z).copied()
    }

    pub fn layer(&self, k: i64) -> VariableField {
        VariableField { kind: self.kind, values: self.values.iter().filter(|(z, _)| z[2] == k).map(|(&z, &v)| (z, v)).collect() }
    }

    /// Largest `|Im v| / |v|`.
    pub fn max_relative_imag(&self) -> f64 {
        self.values.values().map(|v| v.im.abs() / v.norm()).fold(0.0, f64::max)
    }
}

/// Running statistics of a residual over sites.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub count: usize,
    pub max: f64,
    pub sum: f64,
    pub skipped: usize,
}

impl Stat {
    pub fn push(&mut self, r: f64) {
        self.count += 1;
        self.sum += r;
        // NaN counts as a failure
        self.max = if r.is_nan() || self.max.is_nan() { f64::NAN } else { self.max.max(r) };
    }

    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    pub fn merge(&mut self, other: &Stat) {
        self.count += other.count;
        self.sum += other.sum;
        self.skipped += other.skipped;
        self.max = if other.max.is_nan() || self.max.is_nan() { f64::NAN } else { self.max.max(other.max) };
    }

    pub fn below(&self, tol: f64) -> bool {
        self.count > 0 && self.max < tol
    }
}

impl FromIterator<f64> for Stat {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Stat::default();
        for r in iter {
            s.push(r);
        }
        s
    }
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_diff(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

type PointMap = BTreeMap<Z3, Complex64>;

fn fetch<const N: usize>(f: &PointMap, z: Z3, offsets: [Z3; N]) -> Result<[Complex64; N], VariableError> {
    let mut out = [Complex64::new(0.0, 0.0); N];
    for (o, d) in out.iter_mut().zip(offsets) {
        let s = add(z, d);
        *o = *f.get(&s).ok_or(VariableError::MissingData(s))?;
    }
    Ok(out)
}

fn center_ratio(z: Z3, v: [Complex64; 5]) -> Result<Complex64, VariableError> {
    let [a, n1, n2, d1, d2] = v;
    let den = (d1 - a) * (d2 - a);
    if den.norm() == 0.0 {
        return Err(VariableError::ZeroDenominator(z));
    }
    Ok(-((n1 - a) * (n2 - a)) / den)
}

/// Y at the vertex `z` whose circle is replaced next:
/// −(t(σ₁₃z)−t)(t(σ₋₁,₃z)−t) / ((t(σ₂₃z)−t)(t(σ₋₂,₃z)−t)).
pub fn compute_y(t: &PointMap, z: Z3) -> Result<Complex64, VariableError> {
    let v = fetch(t, z, [[0, 0, 0], [1, 0, 1], [-1, 0, 1], [0, 1, 1], [0, -1, 1]])?;
    center_ratio(z, v)
}

/// The downward form −(t(σ₂,₋₃z)−t)(t(σ₋₂,₋₃z)−t) / ((t(σ₁,₋₃z)−t)(t(σ₋₁,₋₃z)−t)).
///
/// It equals 1 / Y(z − 2e₃).
pub fn compute_y_backward(t: &PointMap, z: Z3) -> Result<Complex64, VariableError> {
    let v = fetch(t, z, [[0, 0, 0], [0, 1, -1], [0, -1, -1], [1, 0, -1], [-1, 0, -1]])?;
    center_ratio(z, v)
}

const X_BLACK: [Z3; 4] = [[-1, -1, 0], [0, -1, -1], [0, 0, 0], [-1, 0, -1]];
const X_WHITE: [Z3; 4] = [[-1, -1, -1], [0, -1, 0], [0, 0, -1], [-1, 0, 0]];

/// −cro of the four same-color points on circle c(z).
pub fn compute_x(p: &PointMap, z: Z3, color: Color) -> Result<Complex64, VariableError> {
    let [a, b, c, d] = fetch(p, z, if color == Color::Black { X_BLACK } else { X_WHITE })?;
    Ok(-cro(a, b, c, d)?)
}

/// −cro of four same-color points around the octahedron `z`.
pub fn compute_w(p: &PointMap, z: Z3, color: Color) -> Result<Complex64, VariableError> {
    // the W stencils are the X stencils with the colors exchanged
    let [a, b, c, d] = fetch(p, z, if color == Color::Black { X_WHITE } else { X_BLACK })?;
    Ok(-cro(a, b, c, d)?)
}

fn candidate_sites(keys: impl Iterator<Item = Z3>, even: bool) -> BTreeSet<Z3> {
    let mut out = BTreeSet::new();
    for z in keys {
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let s = add(z, [dx, dy, dz]);
                    if is_even(s) == even {
                        out.insert(s);
                    }
                }
            }
        }
    }
    out
}

/// Every value of `kind` computable from `m`; sites with singular values are left out.
pub fn field(m: &MiquelMap, kind: VarKind) -> VariableField {
    let values = match kind {
        VarKind::Y => {
            let t = m.extract_t();
            t.keys().filter_map(|&z| compute_y(&t, z).ok().map(|v| (z, v))).collect()
        }
        VarKind::Xb | VarKind::Xw | VarKind::Wb | VarKind::Ww => {
            let color = if matches!(kind, VarKind::Xb | VarKind::Wb) { Color::Black } else { Color::White };
            let p = m.extract_p(color);
            let sites = candidate_sites(p.keys().copied(), kind.on_even_sites());
            let f = if kind.on_even_sites() { compute_x } else { compute_w };
            sites.into_iter().filter_map(|z| f(&p, z, color).ok().filter(|v| v.is_finite()).map(|v| (z, v))).collect()
        }
    };
    VariableField { kind, values }
}

/// Residual of U(σ₃z)U(σ₋₃z) = (1+U(σ₂z))(1+U(σ₋₂z)) / ((1+U⁻¹(σ₁z))(1+U⁻¹(σ₋₁z))),
/// normalized by the larger side.
pub fn ysystem_residual(field: &VariableField, z: Z3) -> Result<f64, VariableError> {
    let [p3, m3, p2, m2, p1, m1] = fetch(&field.values, z, [[0, 0, 1], [0, 0, -1], [0, 1, 0], [0, -1, 0], [1, 0, 0], [-1, 0, 0]])?;
    let tiny = 1e-12;
    let one = Complex64::new(1.0, 0.0);
    if [p1, m1].iter().any(|u| u.norm() < tiny) {
        return Err(VariableError::SingularRecurrence(z));
    }
    let (a, b) = (one + one / p1, one + one / m1);
    if a.norm() < tiny || b.norm() < tiny {
        return Err(VariableError::SingularRecurrence(z));
    }
    let lhs = p3 * m3;
    let rhs = (one + p2) * (one + m2) / (a * b);
    Ok(relative_diff(lhs, rhs))
}

/// Recurrence residual over every site where all six neighbours are present.
pub fn ysystem_stat(field: &VariableField) -> Stat {
    let centers = candidate_sites(field.values.keys().copied(), !field.kind.on_even_sites());
    let mut s = Stat::default();
    for z in centers {
        match ysystem_residual(field, z) {
            Ok(r) => s.push(r),
            Err(VariableError::SingularRecurrence(_)) => s.skip(),
            Err(_) => {}
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeDir {
    /// (i, j) to (i+1, j)
    H,
    /// (i, j) to (i, j+1)
    V,
}

impl EdgeDir {
    pub fn name(self) -> &'static str {
        match self {
            EdgeDir::H => "h",
            EdgeDir::V => "v",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub i: i64,
    pub j: i64,
    pub dir: EdgeDir,
}

/// cro(t(v), p(f), t(v′), p(f′)) with v, f, v′, f′ counterclockwise.
pub fn compute_gamma(layer: &CirclePatternLayer, e: Edge) -> Result<Complex64, VariableError> {
    let (i, j) = (e.i, e.j);
    let miss = |a: i64, b: i64| VariableError::MissingData([a, b, layer.k]);
    let t = |a: i64, b: i64| layer.circles.get(&(a, b)).map(|c| c.center()).ok_or_else(|| miss(a, b));
    let p = |a: i64, b: i64| layer.points.get(&(a, b)).copied().ok_or_else(|| miss(a, b));
    let v = match e.dir {
        EdgeDir::H => cro(t(i, j)?, p(i, j - 1)?, t(i + 1, j)?, p(i, j)?)?,
        EdgeDir::V => cro(t(i, j)?, p(i, j)?, t(i, j + 1)?, p(i - 1, j)?)?,
    };
    Ok(v)
}

pub fn gamma_field(layer: &CirclePatternLayer) -> BTreeMap<Edge, Complex64> {
    let mut out = BTreeMap::new();
    for &(i, j) in layer.circles.keys() {
        for dir in [EdgeDir::H, EdgeDir::V] {
            let e = Edge { i, j, dir };
            if let Ok(v) = compute_gamma(layer, e) {
                out.insert(e, v);
            }
        }
    }
    out
}

/// Products γ(e₁)γ(e₂)γ(e₃)γ(e₄) over the four edges at each inner vertex.
pub fn vertex_products(gamma: &BTreeMap<Edge, Complex64>) -> BTreeMap<(i64, i64), Complex64> {
    let verts: BTreeSet<(i64, i64)> = gamma.keys().map(|e| (e.i, e.j)).collect();
    let mut out = BTreeMap::new();
    for (i, j) in verts {
        let edges = [
            Edge { i, j, dir: EdgeDir::H },
            Edge { i: i - 1, j, dir: EdgeDir::H },
            Edge { i, j, dir: EdgeDir::V },
            Edge { i, j: j - 1, dir: EdgeDir::V },
        ];
        if let Some(vals) = edges.iter().map(|e| gamma.get(e)).collect::<Option<Vec<_>>>() {
            out.insert((i, j), vals.into_iter().product());
        }
    }
    out
}

/// γ written as y_b / x_a (horizontal) or x_a / y_b (vertical), with a = i+j and
/// b = j−i−1 or j−i. The factors are unique up to one common multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct ZigZagFactors {
    pub x: BTreeMap<i64, Complex64>,
    pub y: BTreeMap<i64, Complex64>,
    /// Largest mismatch of the factorization against the input γ.
    pub residual: f64,
}

impl ZigZagFactors {
    pub fn values(&self) -> Vec<Complex64> {
        self.x.values().chain(self.y.values()).copied().collect()
    }
}

pub fn factorize_zigzags(gamma: &BTreeMap<Edge, Complex64>) -> Option<ZigZagFactors> {
    let eqs: Vec<(i64, i64, Complex64)> = gamma
        .iter()
        .map(|(e, &g)| match e.dir {
            EdgeDir::H => (e.i + e.j, e.j - e.i - 1, g),
            EdgeDir::V => (e.i + e.j, e.j - e.i, 1.0 / g),
        })
        .collect();
    let a0 = eqs.iter().map(|e| e.0).min()?;
    let mut x = BTreeMap::from([(a0, Complex64::new(1.0, 0.0))]);
    let mut y = BTreeMap::new();
    let mut changed = true;
    while changed {
        changed = false;
        for &(a, b, r) in &eqs {
            match (x.get(&a).copied(), y.get(&b).copied()) {
                (Some(xa), None) => {
                    y.insert(b, r * xa);
                    changed = true;
                }
                (None, Some(yb)) => {
                    x.insert(a, yb / r);
                    changed = true;
                }
                _ => {}
            }
        }
    }
    let residual = eqs
        .iter()
        .map(|&(a, b, r)| match (x.get(&a), y.get(&b)) {
            (Some(xa), Some(yb)) => (yb / xa - r).norm(),
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    Some(ZigZagFactors { x, y, residual })
}

/// How far `after` is from a sub-multiset of `λ·before` for the best common multiplier λ.
pub fn zigzag_multiset_distance(before: &ZigZagFactors, after: &ZigZagFactors) -> f64 {
    let (a, b) = (before.values(), after.values());
    let Some(&b0) = b.first() else { return f64::INFINITY };
    let mut best = f64::INFINITY;
    for &a0 in &a {
        let lambda = b0 / a0;
        let mut used = vec![false; a.len()];
        let mut worst: f64 = 0.0;
        for &q in &b {
            let pick = (0..a.len()).filter(|&k| !used[k]).min_by(|&k, &l| {
                (q - lambda * a[k]).norm().total_cmp(&(q - lambda * a[l]).norm())
            });
            match pick {
                Some(k) => {
                    used[k] = true;
                    worst = worst.max((q - lambda * a[k]).norm());
                }
                None => worst = f64::INFINITY,
            }
        }
        best = best.min(worst);
    }
    best
}

/// Residuals of the identities satisfied by special pattern classes.
pub mod special {
    use super::*;

    fn pair_stat<F>(a: &VariableField, b: &VariableField, partner: F) -> Stat
    where
        F: Fn(Z3) -> Option<Z3>,
    {
        a.values
            .iter()
            .filter_map(|(&z, &u)| partner(z).and_then(|w| b.get(w)).map(|v| relative_diff(u, v)))
            .collect()
    }

    /// X•(w)X•(σ₁₂w) = X•(σ₁₃w)X•(σ₂₃w) for w ∈ ℒ with w₃ = 0.
    pub fn resistor(xb: &VariableField) -> Stat {
        let mut s = Stat::default();
        for (&w, &a) in xb.values.iter().filter(|(w, _)| w[2] == 0) {
            let get = |d: Z3| xb.get(add(w, d));
            if let (Some(b), Some(c), Some(d)) = (get([1, 1, 0]), get([1, 0, 1]), get([0, 1, 1])) {
                s.push(relative_diff(a * b, c * d));
            }
        }
        s
    }

    /// Same-site X•(z) = Y(z), restricted to `levels` when given.
    pub fn harmonic_same_site(y: &VariableField, xb: &VariableField, level: Option<i64>) -> Stat {
        pair_stat(y, xb, |z| (level.is_none_or(|k| z[2] == k)).then_some(z))
    }

    /// Y(z₁, z₂, z₃) = X•(z₁, z₂, −z₃) at every level.
    pub fn harmonic_reflected(y: &VariableField, xb: &VariableField) -> Stat {
        pair_stat(y, xb, |z| Some([z[0], z[1], -z[2]]))
    }

    /// The two focal formulas at odd z with z₃ = 0, using a = p•(σ₁z), p•(σ₂z) and b = p•(σ₋₁z), p•(σ₋₂z):
    /// p•(σ₋₃z) = (a₁a₂ − b₁b₂)/(a₁+a₂−b₁−b₂) and p•(σ₃z) = (a₁b₂ − b₁a₂)/(a₁+b₂−b₁−a₂).
    pub fn focal(m: &MiquelMap) -> Stat {
        let pb = m.extract_p(Color::Black);
        let sites = candidate_sites(pb.keys().copied(), false);
        let mut s = Stat::default();
        for z in sites.into_iter().filter(|z| z[2] == 0) {
            let Ok([a1, a2, b1, b2, up, down]) =
                fetch(&pb, z, [[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]])
            else {
                continue;
            };
            s.push(relative_diff(down, (a1 * a2 - b1 * b2) / (a1 + a2 - b1 - b2)));
            s.push(relative_diff(up, (a1 * b2 - b1 * a2) / (a1 + b2 - b1 - a2)));
        }
        s
    }

    /// Y(σ₃ᵏz) = Y(σ₋₃ᵏz) for z₃ = −1, k ∈ `ks`.
    pub fn s_symmetry_y(y: &VariableField, ks: &[i64]) -> Stat {
        pair_stat(y, y, |z| ks.contains(&(z[2] + 1)).then_some([z[0], z[1], -2 - z[2]]))
    }

    /// |Y(σ₃ᵏz)·Y(σ₋₃ᵏz) − 1| for z₃ = −1.
    pub fn s_symmetry_y_product(y: &VariableField, ks: &[i64]) -> Stat {
        y.values
            .iter()
            .filter(|(z, _)| ks.contains(&(z[2] + 1)))
            .filter_map(|(z, &u)| y.get([z[0], z[1], -2 - z[2]]).map(|v| (u * v - 1.0).norm()))
            .collect()
    }

    /// A•(σ₃ᵏz) = A°(σ₋₃ᵏz) for z₃ = 0, used for both X and W.
    pub fn s_symmetry_pair(black: &VariableField, white: &VariableField, ks: &[i64]) -> Stat {
        pair_stat(black, white, |z| ks.contains(&z[2]).then_some([z[0], z[1], -z[2]]))
    }

    /// Largest |Im W•|, |W• − W°| and |Π γ − 1| over the layers in `layers`.
    #[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
    pub struct Integrability {
        pub imag_wb: Stat,
        pub w_diff: Stat,
        pub gamma_product: Stat,
    }

    pub fn integrability(m: &MiquelMap, layers: &[i64]) -> Integrability {
        let wb = field(m, VarKind::Wb);
        let ww = field(m, VarKind::Ww);
        let mut out = Integrability {
            imag_wb: wb.values.values().map(|v| v.im.abs()).collect(),
            w_diff: pair_stat(&wb, &ww, Some),
            ..Default::default()
        };
        for &k in layers {
            if let Ok(l) = m.layer(k) {
                let g = gamma_field(&l);
                for v in vertex_products(&g).values() {
                    out.gamma_product.push((v - 1.0).norm());
                }
            }
        }
        out
    }
}
