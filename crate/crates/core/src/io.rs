//! Pattern files (JSON) and variable tables (CSV).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::circle::Circle;
use crate::generators::GeneratorSpec;
use crate::lattice::{is_even, tetra_vertices, Window, Z3};
use crate::miquel::{Direction, MiquelMap};
use crate::reconstruct::PointMap;
use crate::variables::{Edge, EdgeDir, VarKind, VariableField};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema violation at {pointer}: {message}")]
    SchemaViolation { pointer: String, message: String },
    #[error("unsupported format version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u64),
    #[error("CSV line {line}: {message}")]
    Csv { line: usize, message: String },
}

fn violation(pointer: impl Into<String>, message: impl Into<String>) -> IoError {
    IoError::SchemaViolation { pointer: pointer.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NumberFormat {
    /// Strings like `0x1.8p+1`; exact.
    #[default]
    Hex,
    /// Shortest round-trip decimal JSON numbers.
    Decimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvolveRecord {
    pub steps: usize,
    pub forward: bool,
}

/// Where a map came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: Option<GeneratorSpec>,
    #[serde(default)]
    pub evolution: Vec<EvolveRecord>,
}

impl Provenance {
    pub fn evolved(mut self, steps: usize, direction: Direction) -> Self {
        self.evolution.push(EvolveRecord { steps, forward: direction == Direction::Forward });
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternFile {
    pub map: MiquelMap,
    pub provenance: Provenance,
}

/// Formats a finite double as a C99 hex float; the digits are the raw mantissa bits.
pub fn hex_float(x: f64) -> String {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mant = bits & ((1u64 << 52) - 1);
    if exp == 0 && mant == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, e) = if exp == 0 { (0, -1022) } else { (1, exp - 1023) };
    let digits = format!("{mant:013x}");
    let digits = digits.trim_end_matches('0');
    if digits.is_empty() {
        format!("{sign}0x{lead}p{e:+}")
    } else {
        format!("{sign}0x{lead}.{digits}p{e:+}")
    }
}

fn ldexp(m: f64, e: i32) -> f64 {
    // two factors so that only the final product can round
    let e1 = e.clamp(-1022, 1023);
    m * 2f64.powi(e1) * 2f64.powi(e - e1)
}

/// Parses hex floats with at most 13 fractional digits, or decimal text.
pub fn parse_float(s: &str) -> Option<f64> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) else {
        return s.parse().ok().filter(|x: &f64| x.is_finite());
    };
    let (mantissa, exp) = hex.split_once(['p', 'P'])?;
    let exp: i32 = exp.parse().ok()?;
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() || int.len() > 1 || frac.len() > 13 {
        return None;
    }
    let m = u64::from_str_radix(&format!("{int}{frac}"), 16).ok()?;
    let v = ldexp(m as f64, exp - 4 * frac.len() as i32);
    v.is_finite().then_some(if neg { -v } else { v })
}

fn num(x: f64, fmt: NumberFormat) -> Value {
    match fmt {
        NumberFormat::Hex => Value::String(hex_float(x)),
        NumberFormat::Decimal => json!(x),
    }
}

pub fn to_json(file: &PatternFile, fmt: NumberFormat) -> String {
    let c = |z: Complex64| json!([num(z.re, fmt), num(z.im, fmt)]);
    let circles: Vec<Value> = file
        .map
        .circles()
        .iter()
        .map(|(z, k)| json!({"z": z, "center": c(k.center()), "radius": num(k.radius(), fmt)}))
        .collect();
    let points: Vec<Value> = file.map.points().iter().map(|(t, &p)| json!({"t": t, "pos": c(p)})).collect();
    let v = json!({
        "version": FORMAT_VERSION,
        "window": file.map.window(),
        "circles": circles,
        "points": points,
        "provenance": file.provenance,
    });
    let mut s = serde_json::to_string_pretty(&v).expect("pattern serializes");
    s.push('\n');
    s
}

fn field<'a>(v: &'a Value, ptr: &str, key: &str) -> Result<&'a Value, IoError> {
    v.get(key).ok_or_else(|| violation(format!("{ptr}/{key}"), "missing field"))
}

fn read_num(v: &Value, ptr: &str) -> Result<f64, IoError> {
    let x = match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => parse_float(s),
        _ => None,
    };
    x.filter(|x| x.is_finite()).ok_or_else(|| violation(ptr, "expected a finite number or hex-float string"))
}

fn read_complex(v: &Value, ptr: &str) -> Result<Complex64, IoError> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(Complex64::new(read_num(re, &format!("{ptr}/0"))?, read_num(im, &format!("{ptr}/1"))?)),
        _ => Err(violation(ptr, "expected [re, im]")),
    }
}

fn read_site(v: &Value, ptr: &str) -> Result<Z3, IoError> {
    let arr = v.as_array().filter(|a| a.len() == 3).ok_or_else(|| violation(ptr, "expected [i, j, k]"))?;
    let mut z = [0i64; 3];
    for (i, x) in arr.iter().enumerate() {
        z[i] = x.as_i64().ok_or_else(|| violation(format!("{ptr}/{i}"), "expected an integer"))?;
    }
    Ok(z)
}

fn read_list<'a>(root: &'a Value, key: &str) -> Result<&'a Vec<Value>, IoError> {
    field(root, "", key)?.as_array().ok_or_else(|| violation(format!("/{key}"), "expected an array"))
}

/// Parses and validates a pattern file.
///
/// Structure is checked here: circle parity, the four circles of every point, and a point for
/// every tetrahedron whose four circles are all present. Numeric incidence is left to verification.
pub fn from_json(text: &str) -> Result<PatternFile, IoError> {
    let root: Value = serde_json::from_str(text)?;
    if !root.is_object() {
        return Err(violation("", "expected an object"));
    }
    let version = field(&root, "", "version")?.as_u64().ok_or_else(|| violation("/version", "expected an integer"))?;
    if version != FORMAT_VERSION {
        return Err(IoError::UnsupportedVersion(version));
    }
    let mut circles = BTreeMap::new();
    for (n, c) in read_list(&root, "circles")?.iter().enumerate() {
        let ptr = format!("/circles/{n}");
        let z = read_site(field(c, &ptr, "z")?, &format!("{ptr}/z"))?;
        if !is_even(z) {
            return Err(violation(format!("{ptr}/z"), "circles live on even sites"));
        }
        let center = read_complex(field(c, &ptr, "center")?, &format!("{ptr}/center"))?;
        let radius = read_num(field(c, &ptr, "radius")?, &format!("{ptr}/radius"))?;
        let circle = Circle::new(center, radius).map_err(|e| violation(format!("{ptr}/radius"), e.to_string()))?;
        if circles.insert(z, circle).is_some() {
            return Err(violation(format!("{ptr}/z"), "duplicate circle"));
        }
    }
    let mut points = BTreeMap::new();
    for (n, p) in read_list(&root, "points")?.iter().enumerate() {
        let ptr = format!("/points/{n}");
        let t = read_site(field(p, &ptr, "t")?, &format!("{ptr}/t"))?;
        let pos = read_complex(field(p, &ptr, "pos")?, &format!("{ptr}/pos"))?;
        if let Some(v) = tetra_vertices(t).into_iter().find(|v| !circles.contains_key(v)) {
            return Err(violation(format!("{ptr}/t"), format!("no circle at incident vertex {v:?}")));
        }
        if points.insert(t, pos).is_some() {
            return Err(violation(format!("{ptr}/t"), "duplicate point"));
        }
    }
    for t in complete_tetrahedra(&circles) {
        if !points.contains_key(&t) {
            return Err(violation("/points", format!("missing point {t:?} incident to four stored circles")));
        }
    }
    let provenance = match root.get("provenance") {
        None | Some(Value::Null) => Provenance::default(),
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| violation("/provenance", e.to_string()))?,
    };
    // validation with an infinite tolerance checks structure only
    let map = MiquelMap::from_parts(circles, points, f64::INFINITY).map_err(|e| violation("", e.to_string()))?;
    if let Some(w) = root.get("window") {
        let w: Window = serde_json::from_value(w.clone()).map_err(|e| violation("/window", e.to_string()))?;
        if w != map.window() {
            return Err(violation("/window", "window does not match the stored circles"));
        }
    }
    Ok(PatternFile { map, provenance })
}

/// Tetrahedra all of whose vertices carry a circle.
fn complete_tetrahedra(circles: &BTreeMap<Z3, Circle>) -> Vec<Z3> {
    let mut out = std::collections::BTreeSet::new();
    for &z in circles.keys() {
        for c in [crate::lattice::Color::Black, crate::lattice::Color::White] {
            for t in crate::lattice::vertex_tetrahedra(z, c) {
                if tetra_vertices(t).iter().all(|v| circles.contains_key(v)) {
                    out.insert(t);
                }
            }
        }
    }
    out.into_iter().collect()
}

fn read_file(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

pub fn save_map(path: &Path, file: &PatternFile, fmt: NumberFormat) -> Result<(), IoError> {
    write_file(path, &to_json(file, fmt))
}

pub fn load_map(path: &Path) -> Result<PatternFile, IoError> {
    from_json(&read_file(path)?)
}

/// Rows `z1,z2,z3,re,im` with a header; Rust's float formatting round-trips exactly.
pub fn values_to_csv(values: &BTreeMap<Z3, Complex64>) -> String {
    let mut s = String::from("z1,z2,z3,re,im\n");
    for (z, v) in values {
        let _ = writeln!(s, "{},{},{},{},{}", z[0], z[1], z[2], v.re, v.im);
    }
    s
}

pub fn values_from_csv(text: &str) -> Result<BTreeMap<Z3, Complex64>, IoError> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (n == 0 && line.starts_with("z1")) {
            continue;
        }
        let err = |message: &str| IoError::Csv { line: n + 1, message: message.to_string() };
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let [a, b, c, re, im] = cols.as_slice() else {
            return Err(err("expected 5 columns"));
        };
        let int = |s: &str| s.parse::<i64>().map_err(|_| err("bad integer"));
        let z = [int(a)?, int(b)?, int(c)?];
        let f = |s: &str| parse_float(s).ok_or_else(|| err("bad number"));
        if out.insert(z, Complex64::new(f(re)?, f(im)?)).is_some() {
            return Err(err("duplicate site"));
        }
    }
    Ok(out)
}

pub fn field_from_csv(text: &str, kind: VarKind) -> Result<VariableField, IoError> {
    Ok(VariableField { kind, values: values_from_csv(text)? })
}

pub fn points_from_csv(text: &str) -> Result<PointMap, IoError> {
    values_from_csv(text)
}

/// Rows `k,i,j,dir,re,im` over the given layers.
pub fn gamma_to_csv(layers: &[(i64, BTreeMap<Edge, Complex64>)]) -> String {
    let mut s = String::from("k,i,j,dir,re,im\n");
    for (k, g) in layers {
        for (e, v) in g {
            let _ = writeln!(s, "{k},{},{},{},{},{}", e.i, e.j, e.dir.name(), v.re, v.im);
        }
    }
    s
}

pub fn gamma_from_csv(text: &str) -> Result<Vec<(i64, Edge, Complex64)>, IoError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let err = |message: &str| IoError::Csv { line: n + 1, message: message.to_string() };
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let [k, i, j, dir, re, im] = cols.as_slice() else {
            return Err(err("expected 6 columns"));
        };
        let int = |s: &str| s.parse::<i64>().map_err(|_| err("bad integer"));
        let dir = match *dir {
            "h" => EdgeDir::H,
            "v" => EdgeDir::V,
            _ => return Err(err("direction must be h or v")),
        };
        let f = |s: &str| parse_float(s).ok_or_else(|| err("bad number"));
        out.push((int(k)?, Edge { i: int(i)?, j: int(j)?, dir }, Complex64::new(f(re)?, f(im)?)));
    }
    Ok(out)
}
