//! Residual reports over every identity a Miquel map is expected to satisfy.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle::second_intersection;
use crate::generators::apply_moebius;
use crate::lattice::{
    a4_octahedra, neighbours6, phi_embed, phi_table, tetra_vertices, vertex_tetrahedra, Color, LatticeSite, Z3,
};
use crate::miquel::MiquelMap;
use crate::projective::{mr, Moebius};
use crate::reconstruct::{reconstruct_from_x, reconstruct_from_y, x_boundary, PointMap};
use crate::variables::special::{self, Integrability};
use crate::variables::{field, relative_diff, ysystem_stat, Stat, VarKind, VariableField};

pub const REPORT_VERSION: u32 = 1;

/// Lower bound used by the "must exceed" checks.
pub const MUST_EXCEED: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("window too small for {0}: no applicable interior sites")]
    WindowTooSmall(Suite),
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Incidence,
    DskpT,
    DskpP,
    A4,
    MiquelResidual,
    YsystemAll,
    Realness,
    WConjugacy,
    MoebiusInvariance,
    Integrable,
    Harmonic,
    Packing,
    ReconstructionRoundtrip,
}

impl Suite {
    pub const ALL: [Suite; 13] = [
        Suite::Incidence,
        Suite::DskpT,
        Suite::DskpP,
        Suite::A4,
        Suite::MiquelResidual,
        Suite::YsystemAll,
        Suite::Realness,
        Suite::WConjugacy,
        Suite::MoebiusInvariance,
        Suite::Integrable,
        Suite::Harmonic,
        Suite::Packing,
        Suite::ReconstructionRoundtrip,
    ];

    /// Suites that hold for every Miquel map.
    pub const GENERAL: [Suite; 10] = [
        Suite::Incidence,
        Suite::DskpT,
        Suite::DskpP,
        Suite::A4,
        Suite::MiquelResidual,
        Suite::YsystemAll,
        Suite::Realness,
        Suite::WConjugacy,
        Suite::MoebiusInvariance,
        Suite::ReconstructionRoundtrip,
    ];

    pub const SUBVARIETIES: [Suite; 3] = [Suite::Integrable, Suite::Harmonic, Suite::Packing];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Incidence => "incidence",
            Suite::DskpT => "dskp_t",
            Suite::DskpP => "dskp_p",
            Suite::A4 => "a4",
            Suite::MiquelResidual => "miquel_residual",
            Suite::YsystemAll => "ysystem_all",
            Suite::Realness => "realness",
            Suite::WConjugacy => "w_conjugacy",
            Suite::MoebiusInvariance => "moebius_invariance",
            Suite::Integrable => "integrable",
            Suite::Harmonic => "harmonic",
            Suite::Packing => "packing",
            Suite::ReconstructionRoundtrip => "reconstruction_roundtrip",
        }
    }

    /// Parses a comma-separated list; `all`, `general` and `subvarieties` expand to groups.
    pub fn parse_list(s: &str) -> Result<BTreeSet<Suite>, VerifyError> {
        let mut out = BTreeSet::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "all" => out.extend(Suite::ALL),
                "general" => out.extend(Suite::GENERAL),
                "subvarieties" => out.extend(Suite::SUBVARIETIES),
                other => {
                    out.insert(other.parse()?);
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| VerifyError::UnknownSuite(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// Pass when the largest residual stays below the tolerance.
    AtMost,
    /// Pass when the largest residual exceeds the threshold.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub suite: Suite,
    pub claim: String,
    pub site_count: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub skipped_singular: usize,
    pub tolerance: f64,
    pub bound: Bound,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub version: u32,
    pub map_id: String,
    pub tol_scale: f64,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Multiplies every upper tolerance; "must exceed" thresholds are not scaled.
    pub tol_scale: f64,
    /// Report identifier; defaults to a fingerprint of the map.
    pub map_id: Option<String>,
    /// Seed for the random Möbius transforms.
    pub moebius_seed: u64,
    pub moebius_count: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { tol_scale: 1.0, map_id: None, moebius_seed: 0x6d6f6562, moebius_count: 3 }
    }
}

/// Default upper tolerance of each named check, before scaling.
pub fn base_tolerance(name: &str) -> f64 {
    match name {
        n if n.starts_with("ysystem_") => 1e-7,
        n if n.starts_with("real_") || n == "w_conjugacy" => 1e-9,
        n if n.starts_with("integrable_") => 1e-9,
        n if n.starts_with("reconstruct_") => 1e-7,
        _ => 1e-8,
    }
}

/// FNV-1a over the bit patterns of all stored values.
pub fn fingerprint(m: &MiquelMap) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    for (z, c) in m.circles() {
        z.iter().for_each(|&v| eat(v as u64));
        eat(c.center().re.to_bits());
        eat(c.center().im.to_bits());
        eat(c.radius().to_bits());
    }
    for (t, p) in m.points() {
        t.iter().for_each(|&v| eat(v as u64));
        eat(p.re.to_bits());
        eat(p.im.to_bits());
    }
    format!("{h:016x}")
}

struct Builder {
    scale: f64,
    checks: Vec<CheckResult>,
}

impl Builder {
    fn at_most(&mut self, suite: Suite, name: &str, claim: &str, s: Stat) {
        let tol = base_tolerance(name) * self.scale;
        self.push(suite, name, claim, s, tol, Bound::AtMost);
    }

    fn at_least(&mut self, suite: Suite, name: &str, claim: &str, s: Stat) {
        self.push(suite, name, claim, s, MUST_EXCEED, Bound::AtLeast);
    }

    fn push(&mut self, suite: Suite, name: &str, claim: &str, s: Stat, tolerance: f64, bound: Bound) {
        let pass = s.count > 0
            && match bound {
                Bound::AtMost => s.max < tolerance,
                Bound::AtLeast => s.max > tolerance,
            };
        self.checks.push(CheckResult {
            name: name.to_string(),
            suite,
            claim: claim.to_string(),
            site_count: s.count,
            max_residual: s.max,
            mean_residual: s.mean(),
            skipped_singular: s.skipped,
            tolerance,
            bound,
            pass,
        });
    }
}

/// Runs the selected suites; the report is a pure function of the map, the suites and the options.
pub fn run_suite(m: &MiquelMap, suites: &BTreeSet<Suite>, opts: &VerifyOptions) -> Result<VerificationReport, VerifyError> {
    let mut b = Builder { scale: opts.tol_scale, checks: Vec::new() };
    let mut fields: BTreeMap<VarKind, VariableField> = BTreeMap::new();
    let mut get = |k: VarKind| fields.entry(k).or_insert_with(|| field(m, k)).clone();
    for &suite in suites {
        let before = b.checks.len();
        match suite {
            Suite::Incidence => {
                b.at_most(suite, "incidence", "every stored point lies on its four circles", incidence_stat(m));
            }
            Suite::DskpT => b.at_most(suite, "dskp_t", "circle centers satisfy the octahedron multi-ratio −1", dskp_t(m)),
            Suite::DskpP => {
                b.at_most(suite, "dskp_p_black", "black points satisfy the octahedron multi-ratio −1", dskp_p(m, Color::Black));
                b.at_most(suite, "dskp_p_white", "white points satisfy the octahedron multi-ratio −1", dskp_p(m, Color::White));
            }
            Suite::A4 => {
                let (pure, mixed) = a4_stats(m);
                if mixed.count == 0 {
                    return Err(VerifyError::WindowTooSmall(suite));
                }
                b.at_most(suite, "a4_pure", "single-kind octahedra of the combined map give −1", pure);
                b.at_most(suite, "a4_mixed", "three centers and three points of one color give −1", mixed);
            }
            Suite::MiquelResidual => {
                b.at_most(suite, "miquel_concyclic", "all stored points around a circle are concyclic", concyclic_stat(m));
                b.at_most(suite, "clifford", "second points of the four circles through a point give −1", clifford_stat(m));
            }
            Suite::YsystemAll => {
                for k in VarKind::ALL {
                    let s = ysystem_stat(&get(k));
                    b.at_most(suite, &format!("ysystem_{}", k.name()), "the field satisfies the Y-system recurrence", s);
                }
            }
            Suite::Realness => {
                for k in [VarKind::Y, VarKind::Xb, VarKind::Xw] {
                    let f = get(k);
                    let s: Stat = f.values.values().map(|v| v.im.abs() / v.norm().max(1.0)).collect();
                    b.at_most(suite, &format!("real_{}", k.name()), "the field is real", s);
                }
            }
            Suite::WConjugacy => {
                let (wb, ww) = (get(VarKind::Wb), get(VarKind::Ww));
                let s: Stat = wb.values.iter().filter_map(|(z, &u)| ww.get(*z).map(|v| relative_diff(v, u.conj()))).collect();
                b.at_most(suite, "w_conjugacy", "the white W field is the conjugate of the black one", s);
            }
            Suite::MoebiusInvariance => moebius_checks(&mut b, m, opts, &mut get),
            Suite::Integrable => integrable_checks(&mut b, m),
            Suite::Harmonic => {
                let (y, xb) = (get(VarKind::Y), get(VarKind::Xb));
                b.at_most(suite, "harmonic_same_site", "X• equals Y on level 0", special::harmonic_same_site(&y, &xb, Some(0)));
                b.at_most(suite, "harmonic_reflected", "X• equals Y after reflecting the level", special::harmonic_reflected(&y, &xb));
                b.at_most(suite, "harmonic_resistor", "X• satisfies the resistor identity on level 0", special::resistor(&xb));
                b.at_most(suite, "harmonic_focal", "black points follow the focal formulas", special::focal(m));
            }
            Suite::Packing => {
                let ks = [1, 2];
                let y = get(VarKind::Y);
                b.at_most(suite, "packing_y", "Y is symmetric about level −1", special::s_symmetry_y(&y, &ks));
                let s = special::s_symmetry_pair(&get(VarKind::Xb), &get(VarKind::Xw), &ks);
                b.at_most(suite, "packing_x", "X• mirrors X° about level 0", s);
                let s = special::s_symmetry_pair(&get(VarKind::Wb), &get(VarKind::Ww), &ks);
                b.at_most(suite, "packing_w", "W• mirrors W° about level 0", s);
            }
            Suite::ReconstructionRoundtrip => {
                b.at_most(suite, "reconstruct_y", "centers are recovered from Y and two boundary rows", roundtrip_y(m));
                for (color, name) in [(Color::Black, "reconstruct_xb"), (Color::White, "reconstruct_xw")] {
                    b.at_most(suite, name, "points are recovered from X and two crossing strips", roundtrip_x(m, color));
                }
            }
        }
        let needs_interior = matches!(suite, Suite::DskpT | Suite::DskpP | Suite::YsystemAll);
        if needs_interior && b.checks[before..].iter().any(|c| c.site_count == 0) {
            return Err(VerifyError::WindowTooSmall(suite));
        }
    }
    let pass = b.checks.iter().all(|c| c.pass);
    Ok(VerificationReport {
        version: REPORT_VERSION,
        map_id: opts.map_id.clone().unwrap_or_else(|| fingerprint(m)),
        tol_scale: opts.tol_scale,
        checks: b.checks,
        pass,
    })
}

fn dskp_residual(vals: &[Complex64]) -> Option<f64> {
    mr(vals).ok().filter(|v| v.is_finite()).map(|v| (v + 1.0).norm())
}

fn push_dskp(s: &mut Stat, vals: &[Complex64]) {
    match dskp_residual(vals) {
        Some(r) => s.push(r),
        None => s.skip(),
    }
}

fn gather(values: &PointMap, sites: &[Z3]) -> Option<Vec<Complex64>> {
    sites.iter().map(|z| values.get(z).copied()).collect()
}

pub fn incidence_stat(m: &MiquelMap) -> Stat {
    let mut s = Stat::default();
    for (&t, &p) in m.points() {
        for v in tetra_vertices(t) {
            if let Some(c) = m.circle(v) {
                s.push(c.signed_residual(p).abs());
            }
        }
    }
    s
}

/// Octahedra of ℒ centered at odd sites with all six centers present.
pub fn dskp_t(m: &MiquelMap) -> Stat {
    let t = m.extract_t();
    octahedron_stat(&t, false)
}

/// Octahedra of the `color` tetra lattice; black ones are centered at odd sites, white ones at even.
pub fn dskp_p(m: &MiquelMap, color: Color) -> Stat {
    let p = m.extract_p(color);
    octahedron_stat(&p, color == Color::White)
}

fn octahedron_stat(values: &PointMap, even_centers: bool) -> Stat {
    let mut centers = BTreeSet::new();
    for z in values.keys() {
        centers.extend(neighbours6(*z));
    }
    let mut s = Stat::default();
    for o in centers.into_iter().filter(|o| crate::lattice::is_even(*o) == even_centers) {
        if let Some(vals) = gather(values, &neighbours6(o)) {
            push_dskp(&mut s, &vals);
        }
    }
    s
}

/// Residuals over pure and mixed octahedra of the combined center and point map on Â₄.
pub fn a4_stats(m: &MiquelMap) -> (Stat, Stat) {
    let mut value: BTreeMap<LatticeSite, Complex64> = BTreeMap::new();
    for (&z, c) in m.circles() {
        value.insert(LatticeSite::vertex(z).expect("circles sit on even sites"), c.center());
    }
    for (&t, &p) in m.points() {
        value.insert(LatticeSite::tetra(t), p);
    }
    let table = phi_table(value.keys().copied());
    let embedded: Vec<_> = value.keys().map(|&s| phi_embed(s).expect("vertices and tetrahedra embed")).collect();
    let (mut pure, mut mixed) = (Stat::default(), Stat::default());
    for o in a4_octahedra(embedded.iter()) {
        let vals: Vec<Complex64> = o.sites.iter().map(|a| value[&table[a]]).collect();
        push_dskp(if o.pure() { &mut pure } else { &mut mixed }, &vals);
    }
    (pure, mixed)
}

/// For every circle, the largest residual of its stored points against the circle through three of them.
pub fn concyclic_stat(m: &MiquelMap) -> Stat {
    let mut s = Stat::default();
    for &z in m.circles().keys() {
        let pts: Vec<Complex64> = [Color::Black, Color::White]
            .iter()
            .flat_map(|&c| vertex_tetrahedra(z, c))
            .filter_map(|t| m.point(t))
            .collect();
        if pts.len() < 4 {
            continue;
        }
        match crate::circle::circumcircle(pts[0], pts[1], pts[2]) {
            Ok(c) => s.push(pts[3..].iter().map(|&p| c.signed_residual(p).abs()).fold(0.0, f64::max)),
            Err(_) => s.skip(),
        }
    }
    s
}

/// Second intersections of the six circle pairs through each stored point, in octahedron order.
pub fn clifford_stat(m: &MiquelMap) -> Stat {
    const PAIRS: [(usize, usize); 6] = [(0, 1), (1, 2), (0, 2), (2, 3), (0, 3), (1, 3)];
    let mut s = Stat::default();
    for (&t, &p) in m.points() {
        let Some(cs) = tetra_vertices(t).iter().map(|v| m.circle(*v)).collect::<Option<Vec<_>>>() else {
            continue;
        };
        let seconds: Result<Vec<Complex64>, _> =
            PAIRS.iter().map(|&(i, j)| second_intersection(cs[i], cs[j], p, 1e-10)).collect();
        match seconds {
            Ok(v) if v.iter().all(|q| (q - p).norm() > 1e-9 * (1.0 + p.norm())) => push_dskp(&mut s, &v),
            _ => s.skip(),
        }
    }
    s
}

/// Random Möbius transforms whose poles stay well outside the pattern.
pub fn random_moebius(m: &MiquelMap, seed: u64, count: usize) -> Vec<Moebius> {
    let pts: Vec<Complex64> = m.points().values().copied().collect();
    let n = pts.len().max(1) as f64;
    let center = pts.iter().sum::<Complex64>() / n;
    let extent = pts.iter().map(|p| (p - center).norm()).fold(1.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let pole = center + Complex64::from_polar(extent * rng.gen_range(3.0..6.0), ang);
        let a = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let b = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)) * extent;
        // z ↦ (a z + b) / (z − pole), rescaled so the image has the size of the pattern
        let s = extent * extent;
        if let Ok(t) = Moebius::new(a * s, b * s, Complex64::new(1.0, 0.0), -pole) {
            out.push(t);
        }
    }
    out
}

fn moebius_checks(b: &mut Builder, m: &MiquelMap, opts: &VerifyOptions, get: &mut impl FnMut(VarKind) -> VariableField) {
    let suite = Suite::MoebiusInvariance;
    let mut inv: BTreeMap<VarKind, Stat> = BTreeMap::new();
    let mut ychange = Stat::default();
    for t in random_moebius(m, opts.moebius_seed, opts.moebius_count) {
        let Ok(image) = apply_moebius(m, &t) else {
            ychange.skip();
            continue;
        };
        for k in [VarKind::Xb, VarKind::Xw, VarKind::Wb, VarKind::Ww] {
            let (a, c) = (get(k), field(&image, k));
            let s: Stat = a.values.iter().filter_map(|(z, &u)| c.get(*z).map(|v| relative_diff(u, v))).collect();
            inv.entry(k).or_default().merge(&s);
        }
        let (a, c) = (get(VarKind::Y), field(&image, VarKind::Y));
        let s: Stat = a.values.iter().filter_map(|(z, &u)| c.get(*z).map(|v| relative_diff(u, v))).collect();
        ychange.merge(&s);
    }
    for (k, s) in inv {
        b.at_most(suite, &format!("moebius_{}", k.name()), "the field is Möbius invariant", s);
    }
    b.at_least(suite, "moebius_y_changes", "Y is not Möbius invariant", ychange);
}

fn integrable_checks(b: &mut Builder, m: &MiquelMap) {
    let suite = Suite::Integrable;
    let layers: Vec<i64> = match m.point_levels() {
        Some((lo, hi)) => (lo..=hi).collect(),
        None => Vec::new(),
    };
    let Integrability { imag_wb, w_diff, gamma_product } = special::integrability(m, &layers);
    let tol = base_tolerance("integrable_") * b.scale;
    b.at_most(suite, "integrable_imag_wb", "W• is real", imag_wb);
    b.at_most(suite, "integrable_w_diff", "W• equals W°", w_diff);
    b.at_most(suite, "integrable_gamma_product", "edge cross-ratios multiply to 1 around each vertex", gamma_product);
    // the three indicators hold or fail together
    let all = [imag_wb, w_diff, gamma_product];
    let holds = all.iter().all(|s| s.below(tol));
    let fails = all.iter().all(|s| s.count > 0 && s.max > MUST_EXCEED);
    let agree = Stat { count: 1, max: if holds || fails { 0.0 } else { 1.0 }, sum: 0.0, skipped: 0 };
    b.push(suite, "integrable_cooccurrence", "the three integrability indicators agree", agree, 0.5, Bound::AtMost);
}

/// Shifts a map of z → value down by `b` levels.
fn shifted(values: &PointMap, b: i64) -> PointMap {
    values.iter().map(|(z, &v)| ([z[0], z[1], z[2] - b], v)).collect()
}

/// Rows `r, r+1` of the two-level slab over the widest column range present in both.
fn full_rows(t: &PointMap) -> Option<PointMap> {
    let site = |i: i64, r: i64| if (i + r).rem_euclid(2) == 0 { [i, r, 0] } else { [i, r, 1] };
    let rows: BTreeSet<i64> = t.keys().filter(|z| (0..=1).contains(&z[2])).map(|z| z[1]).collect();
    let (lo, hi) = {
        let cols: Vec<i64> = t.keys().map(|z| z[0]).collect();
        (*cols.iter().min()?, *cols.iter().max()?)
    };
    for &r in &rows {
        let ok = |i: i64| t.contains_key(&site(i, r)) && t.contains_key(&site(i, r + 1));
        let Some(a) = (lo..=hi).find(|&i| ok(i)) else { continue };
        let e = (a..=hi).take_while(|&i| ok(i)).last()?;
        if e - a >= 2 {
            let mut out = PointMap::new();
            for i in a..=e {
                for rr in [r, r + 1] {
                    out.insert(site(i, rr), t[&site(i, rr)]);
                }
            }
            return Some(out);
        }
    }
    None
}

/// Reconstructs centers on two levels from Y on the two levels below and compares.
pub fn roundtrip_y(m: &MiquelMap) -> Stat {
    let t = m.extract_t();
    let y = field(m, VarKind::Y);
    let Some((lo, hi)) = m.circle_levels() else { return Stat::default() };
    // the slab sits at an even level so parities are unchanged by the shift
    best_of((lo..=hi).filter(|b| b.rem_euclid(2) == 0).map(|base| {
        let mut s = Stat::default();
        let ys: PointMap = y.values.iter().filter(|(z, _)| z[2] == base - 1 || z[2] == base).map(|(&z, &v)| (z, v)).collect();
        if !ys.keys().any(|z| z[2] == base - 1) || !ys.keys().any(|z| z[2] == base) {
            return s;
        }
        let ts = shifted(&t, base);
        let Some(boundary) = full_rows(&ts) else { return s };
        let input = VariableField { kind: VarKind::Y, values: shifted(&ys, base) };
        match reconstruct_from_y(&input, &boundary) {
            Ok(rec) => {
                for (z, v) in rec.values.iter().filter(|(z, _)| !boundary.contains_key(*z)) {
                    if let Some(w) = ts.get(z) {
                        s.push((v - w).norm());
                    }
                }
            }
            Err(_) => s.skip(),
        }
        s
    }))
}

/// The slab statistic with the most compared sites.
fn best_of(stats: impl Iterator<Item = Stat>) -> Stat {
    stats.max_by_key(|s| (s.count, s.skipped)).unwrap_or_default()
}

/// Reconstructs same-color points on two levels from X on those levels and two crossing strips.
pub fn roundtrip_x(m: &MiquelMap, color: Color) -> Stat {
    let kind = if color == Color::Black { VarKind::Xb } else { VarKind::Xw };
    let p = m.extract_p(color);
    let x = field(m, kind);
    let Some((lo, hi)) = m.point_levels() else { return Stat::default() };
    best_of((lo..hi).filter(|b| b.rem_euclid(2) == 0).map(|base| {
        let mut s = Stat::default();
        let slab: PointMap = shifted(&p, base).into_iter().filter(|(z, _)| (0..=1).contains(&z[2])).collect();
        let xs: PointMap = shifted(&x.values, base).into_iter().filter(|(z, _)| (0..=1).contains(&z[2])).collect();
        if xs.is_empty() || slab.is_empty() {
            return s;
        }
        let n = slab.len() as i64;
        let cx = slab.keys().map(|z| z[0]).sum::<i64>() / n;
        let cy = slab.keys().map(|z| z[1]).sum::<i64>() / n;
        let boundary = x_boundary(&slab, (cx, cy));
        match reconstruct_from_x(&VariableField { kind, values: xs }, &boundary, color) {
            Ok(rec) => {
                for (z, v) in rec.values.iter().filter(|(z, _)| !boundary.contains_key(*z)) {
                    if let Some(w) = slab.get(z) {
                        s.push((v - w).norm());
                    }
                }
            }
            Err(_) => s.skip(),
        }
        s
    }))
}
