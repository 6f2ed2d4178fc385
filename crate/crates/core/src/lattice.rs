//! Combinatorics of the octahedral lattice: vertices, tetrahedra, octahedra and the A₄ embedding.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Z3 = [i64; 3];
pub type Z5 = [i64; 5];

pub const E1: Z3 = [1, 0, 0];
pub const E2: Z3 = [0, 1, 0];
pub const E3: Z3 = [0, 0, 1];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("site {0:?} has the wrong parity for {1:?}")]
    ParityError(Z3, Role),
    #[error("shift direction must be one of ±1, ±2, ±3, got {0}")]
    BadDirection(i8),
    #[error("{0:?} sites have no A4 image")]
    NotEmbeddable(Role),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Vertex,
    BlackTetra,
    WhiteTetra,
    Octahedron,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Black,
    White,
}

impl Color {
    pub fn of(t: Z3) -> Color {
        if is_even(t) {
            Color::Black
        } else {
            Color::White
        }
    }

    pub fn role(self) -> Role {
        match self {
            Color::Black => Role::BlackTetra,
            Color::White => Role::WhiteTetra,
        }
    }

    pub fn other(self) -> Color {
        match self {
            Color::Black => Color::White,
            Color::White => Color::Black,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticeSite {
    pub z: Z3,
    pub role: Role,
}

impl LatticeSite {
    pub fn new(z: Z3, role: Role) -> Result<Self, LatticeError> {
        let even = matches!(role, Role::Vertex | Role::BlackTetra);
        if is_even(z) != even {
            return Err(LatticeError::ParityError(z, role));
        }
        Ok(LatticeSite { z, role })
    }

    pub fn vertex(z: Z3) -> Result<Self, LatticeError> {
        Self::new(z, Role::Vertex)
    }

    pub fn octahedron(z: Z3) -> Result<Self, LatticeError> {
        Self::new(z, Role::Octahedron)
    }

    /// Tetrahedra are indexed by all of ℤ³; the color follows from the parity.
    pub fn tetra(z: Z3) -> Self {
        LatticeSite { z, role: Color::of(z).role() }
    }
}

pub fn is_even(z: Z3) -> bool {
    (z[0] + z[1] + z[2]).rem_euclid(2) == 0
}

pub fn add(a: Z3, b: Z3) -> Z3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: Z3, b: Z3) -> Z3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// `z + Σ ±e_|d|` for directions in {±1, ±2, ±3}.
pub fn shift(z: Z3, ops: &[i8]) -> Result<Z3, LatticeError> {
    let mut out = z;
    for &d in ops {
        let axis = match d.unsigned_abs() {
            1..=3 => (d.unsigned_abs() - 1) as usize,
            _ => return Err(LatticeError::BadDirection(d)),
        };
        out[axis] += d.signum() as i64;
    }
    Ok(out)
}

/// `z + Σ cᵢeᵢ` written as an offset triple; the workhorse for fixed stencils.
pub fn at(z: Z3, d: Z3) -> Z3 {
    add(z, d)
}

/// Opposite pairs sit at positions (0,3), (1,4), (2,5): σ₁o, σ₂o, σ₃o, σ₋₁o, σ₋₂o, σ₋₃o.
pub fn octahedron_vertices(o: Z3) -> Result<[Z3; 6], LatticeError> {
    if is_even(o) {
        return Err(LatticeError::ParityError(o, Role::Octahedron));
    }
    Ok(neighbours6(o))
}

/// The six lattice neighbours in dSKP order (same layout as [`octahedron_vertices`]).
pub fn neighbours6(z: Z3) -> [Z3; 6] {
    [
        add(z, E1),
        add(z, E2),
        add(z, E3),
        sub(z, E1),
        sub(z, E2),
        sub(z, E3),
    ]
}

/// The eight tetrahedra sharing a face with `o`:
/// σ₋₁₋₂₋₃o, σ₋₁₋₂o, σ₋₁₋₃o, σ₋₂₋₃o, σ₋₁o, σ₋₂o, σ₋₃o, o.
pub fn octahedron_tetrahedra(o: Z3) -> Result<[LatticeSite; 8], LatticeError> {
    if is_even(o) {
        return Err(LatticeError::ParityError(o, Role::Octahedron));
    }
    let offs: [Z3; 8] = [
        [-1, -1, -1],
        [-1, -1, 0],
        [-1, 0, -1],
        [0, -1, -1],
        [-1, 0, 0],
        [0, -1, 0],
        [0, 0, -1],
        [0, 0, 0],
    ];
    Ok(offs.map(|d| LatticeSite::tetra(add(o, d))))
}

/// Black `T`: T, σ₂₃T, σ₁₃T, σ₁₂T. White `T`: σ₁T, σ₂T, σ₃T, σ₁₂₃T.
pub fn tetra_vertices(t: Z3) -> [Z3; 4] {
    if is_even(t) {
        [t, add(t, [0, 1, 1]), add(t, [1, 0, 1]), add(t, [1, 1, 0])]
    } else {
        [add(t, E1), add(t, E2), add(t, E3), add(t, [1, 1, 1])]
    }
}

/// The tetrahedra of one color that contain vertex `z`, in the order used by the X-variables.
///
/// Black: σ₋₁₋₂z, σ₋₂₋₃z, z, σ₋₁₋₃z. White: σ₋₁₋₂₋₃z, σ₋₂z, σ₋₃z, σ₋₁z.
pub fn vertex_tetrahedra(z: Z3, color: Color) -> [Z3; 4] {
    match color {
        Color::Black => [add(z, [-1, -1, 0]), add(z, [0, -1, -1]), z, add(z, [-1, 0, -1])],
        Color::White => [add(z, [-1, -1, -1]), add(z, [0, -1, 0]), add(z, [0, 0, -1]), add(z, [-1, 0, 0])],
    }
}

/// The four octahedra sharing a face with tetrahedron `t`.
pub fn tetra_octahedra(t: Z3) -> [Z3; 4] {
    if is_even(t) {
        [add(t, E1), add(t, E2), add(t, E3), add(t, [1, 1, 1])]
    } else {
        [t, add(t, [1, 1, 0]), add(t, [1, 0, 1]), add(t, [0, 1, 1])]
    }
}

/// The neighbour `t ± eᵢ` sharing the edge `{a, b}` of `t`.
pub fn tetra_across_edge(t: Z3, a: Z3, b: Z3) -> Option<Z3> {
    neighbours6(t).into_iter().find(|&n| {
        let vs = tetra_vertices(n);
        vs.contains(&a) && vs.contains(&b)
    })
}

// 2φ(eᵢ) for the vertex lattice; sums along even-sum vertices are even.
const TWICE_PHI_E: [Z5; 3] = [[-1, 1, 1, -1, 0], [1, -1, 1, -1, 0], [1, 1, -1, -1, 0]];
const A1: Z5 = [1, 0, 0, 0, -1];
const A4: Z5 = [0, 0, 0, 1, -1];

fn z5_add(a: Z5, b: Z5) -> Z5 {
    std::array::from_fn(|i| a[i] + b[i])
}

fn z5_sub(a: Z5, b: Z5) -> Z5 {
    std::array::from_fn(|i| a[i] - b[i])
}

fn phi_vertex(z: Z3) -> Z5 {
    let mut w = [0i64; 5];
    for (k, v) in TWICE_PHI_E.iter().enumerate() {
        for i in 0..5 {
            w[i] += z[k] * v[i];
        }
    }
    w.map(|x| x / 2)
}

/// A point of Â₄: five integers summing to zero, last coordinate in {−1, 0, 1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct A4Site {
    pub w: Z5,
}

impl A4Site {
    pub fn layer(&self) -> i64 {
        self.w[4]
    }
}

/// Embeds vertices and tetrahedra into Â₄.
///
/// Vertices land on w₅ = 0, black tetrahedra on w₅ = 1 and white ones on w₅ = −1.
/// A tetrahedron differs from each of its vertices by ∓aᵢ (black/white).
pub fn phi_embed(site: LatticeSite) -> Result<A4Site, LatticeError> {
    let w = match site.role {
        Role::Vertex => phi_vertex(site.z),
        Role::BlackTetra => z5_sub(phi_vertex(site.z), A4),
        Role::WhiteTetra => z5_add(phi_vertex(add(site.z, E1)), A1),
        Role::Octahedron => return Err(LatticeError::NotEmbeddable(Role::Octahedron)),
    };
    Ok(A4Site { w })
}

/// Inverse of [`phi_embed`] on its image.
pub fn phi_inverse(a: A4Site) -> Option<LatticeSite> {
    let (role, w) = match a.w[4] {
        0 => (Role::Vertex, a.w),
        1 => (Role::BlackTetra, z5_add(a.w, A4)),
        -1 => (Role::WhiteTetra, z5_sub(a.w, A1)),
        _ => return None,
    };
    let z = [w[1] + w[2], w[0] + w[2], w[0] + w[1]];
    let z = if role == Role::WhiteTetra { sub(z, E1) } else { z };
    let site = LatticeSite::new(z, role).ok()?;
    (phi_embed(site).ok()? == a).then_some(site)
}

/// An octahedron of Â₄ with its six sites in dSKP order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct A4Octahedron {
    pub base: Z5,
    /// The excluded index in 0..5; 4 means the octahedron lies in one w₅-layer.
    pub m: usize,
    pub sites: [A4Site; 6],
}

impl A4Octahedron {
    pub fn pure(&self) -> bool {
        self.m == 4
    }

    pub fn new(base: Z5, m: usize) -> Self {
        let idx: Vec<usize> = (0..5).filter(|&i| i != m).collect();
        let (i1, i2, i3, i4) = (idx[0], idx[1], idx[2], idx[3]);
        let pairs = [(i1, i2), (i2, i3), (i1, i3), (i3, i4), (i1, i4), (i2, i4)];
        let sites = pairs.map(|(a, b)| {
            let mut w = base;
            w[a] += 1;
            w[b] += 1;
            A4Site { w }
        });
        A4Octahedron { base, m, sites }
    }
}

/// All Â₄ octahedra whose six sites lie in `embedded`, sorted.
pub fn a4_octahedra<'a>(embedded: impl IntoIterator<Item = &'a A4Site>) -> Vec<A4Octahedron> {
    let set: BTreeSet<A4Site> = embedded.into_iter().copied().collect();
    let mut bases = BTreeSet::new();
    for s in &set {
        for i in 0..5 {
            for j in i + 1..5 {
                let mut b = s.w;
                b[i] -= 1;
                b[j] -= 1;
                bases.insert(b);
            }
        }
    }
    let mut out = Vec::new();
    for b in bases {
        for m in 0..5 {
            let o = A4Octahedron::new(b, m);
            if o.sites.iter().all(|s| set.contains(s)) {
                out.push(o);
            }
        }
    }
    out
}

/// Octahedra of Â₄ touching only vertex and tetra sites of `window`.
pub fn a4_octahedra_touching(window: &Window) -> Vec<A4Octahedron> {
    let sites: Vec<A4Site> = window
        .sites()
        .filter(|s| s.role != Role::Octahedron)
        .map(|s| phi_embed(s).expect("vertices and tetrahedra embed"))
        .collect();
    a4_octahedra(sites.iter())
}

/// Index lookup from Â₄ back to lattice sites, for a fixed finite set.
pub fn phi_table(sites: impl IntoIterator<Item = LatticeSite>) -> HashMap<A4Site, LatticeSite> {
    sites
        .into_iter()
        .filter_map(|s| phi_embed(s).ok().map(|a| (a, s)))
        .collect()
}

/// Inclusive z₁, z₂ bounds of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerRange {
    pub z1: (i64, i64),
    pub z2: (i64, i64),
}

impl LayerRange {
    pub fn contains(&self, z1: i64, z2: i64) -> bool {
        self.z1.0 <= z1 && z1 <= self.z1.1 && self.z2.0 <= z2 && z2 <= self.z2.1
    }

    pub fn eroded(&self, n: i64) -> Option<LayerRange> {
        let r = LayerRange { z1: (self.z1.0 + n, self.z1.1 - n), z2: (self.z2.0 + n, self.z2.1 - n) };
        (r.z1.0 <= r.z1.1 && r.z2.0 <= r.z2.1).then_some(r)
    }
}

/// Per-layer rectangular bounds for a finite part of ℤ³.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub layers: BTreeMap<i64, LayerRange>,
}

impl Window {
    pub fn boxed(z1: (i64, i64), z2: (i64, i64), z3: (i64, i64)) -> Self {
        let layers = (z3.0..=z3.1).map(|k| (k, LayerRange { z1, z2 })).collect();
        Window { layers }
    }

    /// Bounding boxes per layer of a set of sites.
    pub fn bounding<'a>(sites: impl IntoIterator<Item = &'a Z3>) -> Self {
        let mut layers: BTreeMap<i64, LayerRange> = BTreeMap::new();
        for z in sites {
            layers
                .entry(z[2])
                .and_modify(|r| {
                    r.z1 = (r.z1.0.min(z[0]), r.z1.1.max(z[0]));
                    r.z2 = (r.z2.0.min(z[1]), r.z2.1.max(z[1]));
                })
                .or_insert(LayerRange { z1: (z[0], z[0]), z2: (z[1], z[1]) });
        }
        Window { layers }
    }

    pub fn contains(&self, z: Z3) -> bool {
        self.layers.get(&z[2]).is_some_and(|r| r.contains(z[0], z[1]))
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn eroded(&self, n: i64) -> Window {
        let layers = self.layers.iter().filter_map(|(&k, r)| r.eroded(n).map(|r| (k, r))).collect();
        Window { layers }
    }

    /// Every site in the window with its natural role (tetra or octahedron for odd sums).
    pub fn sites(&self) -> impl Iterator<Item = LatticeSite> + '_ {
        self.points().flat_map(|z| {
            if is_even(z) {
                vec![LatticeSite { z, role: Role::Vertex }, LatticeSite::tetra(z)]
            } else {
                vec![LatticeSite::tetra(z), LatticeSite { z, role: Role::Octahedron }]
            }
        })
    }

    pub fn points(&self) -> impl Iterator<Item = Z3> + '_ {
        self.layers.iter().flat_map(|(&k, r)| {
            (r.z1.0..=r.z1.1).flat_map(move |a| (r.z2.0..=r.z2.1).map(move |b| [a, b, k]))
        })
    }
}
