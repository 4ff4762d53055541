//! Named test maps, homeomorphisms, curve pairs, scalar fields and map
//! sequences. Names are part of the CLI contract.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::degree::BoxDomain;
use crate::error::{Error, Result};
use crate::geom;
use crate::map::{newton_solve, MapOracle};
use crate::mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    /// `S^k → R^{k+1}`, evaluated on unit vectors.
    SphereMap,
    /// A map of a box in `R^n` to `R^n`.
    PlaneMap,
    /// A homeomorphism of `R^n` with its inverse.
    Homeomorphism,
    /// Two embedded spheres (`oracle` and `partner`).
    CurvePair,
    /// A sequence `f_k → f` (`sequence` and the limit `oracle`).
    GridSequence,
    /// A compactly supported scalar function on `[−1, 1]^n`.
    ScalarField,
}

/// How a known fact is certified.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Provenance {
    /// Immediate from the formula.
    ByConstruction,
    /// Computed in closed form.
    Analytic,
    /// Cross-checked by an independent oracle.
    Oracle(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum FactValue {
    Int(i64),
    Real(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnownFact {
    pub property: &'static str,
    pub value: FactValue,
    pub provenance: Provenance,
}

fn fact(property: &'static str, value: i64, provenance: Provenance) -> KnownFact {
    KnownFact {
        property,
        value: FactValue::Int(value),
        provenance,
    }
}

type Sequence = dyn Fn(usize) -> MapOracle + Send + Sync;

#[derive(Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub kind: EntryKind,
    pub oracle: MapOracle,
    /// Analytic or Newton inverse of a homeomorphism.
    pub inverse: Option<MapOracle>,
    /// Second curve of a pair.
    pub partner: Option<MapOracle>,
    /// Extension of a sphere map to the ball, used for regular-value degrees.
    pub ball_extension: Option<MapOracle>,
    /// Box on which plane maps and extensions are examined.
    pub domain: Option<BoxDomain>,
    /// A regular value for the local degree.
    pub probe: Option<Vec<f64>>,
    pub sequence: Option<Arc<Sequence>>,
    pub known_facts: Vec<KnownFact>,
}

impl fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CatalogEntry")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("oracle", &self.oracle)
            .field("known_facts", &self.known_facts)
            .finish()
    }
}

impl CatalogEntry {
    fn new(name: &'static str, kind: EntryKind, oracle: MapOracle) -> CatalogEntry {
        CatalogEntry {
            name,
            kind,
            oracle,
            inverse: None,
            partner: None,
            ball_extension: None,
            domain: None,
            probe: None,
            sequence: None,
            known_facts: Vec::new(),
        }
    }

    fn fact(mut self, property: &'static str, value: i64, provenance: Provenance) -> Self {
        self.known_facts.push(fact(property, value, provenance));
        self
    }

    pub fn known(&self, property: &str) -> Option<&KnownFact> {
        self.known_facts.iter().find(|f| f.property == property)
    }

    /// Integer value of a known fact.
    pub fn known_int(&self, property: &str) -> Option<i64> {
        match self.known(property)?.value {
            FactValue::Int(v) => Some(v),
            FactValue::Real(_) => None,
        }
    }

    /// Member `k` of a sequence entry.
    pub fn member(&self, k: usize) -> Result<MapOracle> {
        match &self.sequence {
            Some(s) => Ok(s(k)),
            None => Err(Error::InvalidArgument(format!("`{}` is not a sequence", self.name))),
        }
    }
}

fn reflection_entry(n: usize, name: &'static str) -> CatalogEntry {
    let r = MapOracle::reflection(n);
    let mut e = CatalogEntry::new(name, EntryKind::SphereMap, r.clone())
        .fact("degree", -1, Provenance::Analytic)
        .fact("sense", -1, Provenance::ByConstruction);
    e.inverse = Some(r.clone());
    e.ball_extension = Some(r);
    e.domain = Some(BoxDomain::cube(n, 1.5));
    e.probe = Some(default_probe(n));
    e
}

fn identity_entry(n: usize, name: &'static str) -> CatalogEntry {
    let id = MapOracle::identity(n);
    let mut e = CatalogEntry::new(name, EntryKind::SphereMap, id.clone())
        .fact("degree", 1, Provenance::ByConstruction)
        .fact("sense", 1, Provenance::ByConstruction);
    e.inverse = Some(id.clone());
    e.ball_extension = Some(id);
    e.domain = Some(BoxDomain::cube(n, 1.5));
    e.probe = Some(default_probe(n));
    e
}

/// A generic small value, away from coordinate hyperplanes.
fn default_probe(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.11 + 0.07 * i as f64).collect()
}

/// `z^k` for `k ≥ 0` and `z̄^{|k|}` for `k < 0`; `k = 0` is the shifted
/// inclusion `z + 2`, which misses the origin.
pub fn circle_power(k: i32) -> MapOracle {
    MapOracle::new(2, 2, move |x| {
        if k == 0 {
            return vec![x[0] + 2.0, x[1]];
        }
        let (r, a) = (geom::norm(x), x[1].atan2(x[0]));
        let m = r.powi(k.abs());
        let b = k as f64 * a;
        vec![m * b.cos(), m * b.sin()]
    })
}

fn circle_power_entry(k: i32, name: &'static str) -> CatalogEntry {
    let f = circle_power(k);
    let mut e = CatalogEntry::new(name, EntryKind::SphereMap, f.clone()).fact(
        "degree",
        k as i64,
        Provenance::Oracle("winding count"),
    );
    e.ball_extension = Some(f);
    e.domain = Some(BoxDomain::cube(2, 1.0));
    e.probe = Some(vec![0.13, 0.07]);
    e
}

fn antipodal_entry() -> CatalogEntry {
    let f = MapOracle::linear(-DMatrix::<f64>::identity(3, 3));
    let mut e = CatalogEntry::new("antipodal-s2", EntryKind::SphereMap, f.clone())
        .fact("degree", -1, Provenance::Analytic);
    e.inverse = Some(f.clone());
    e.ball_extension = Some(f);
    e.domain = Some(BoxDomain::cube(3, 1.5));
    e.probe = Some(default_probe(3));
    e
}

fn complex_square_entry() -> CatalogEntry {
    let f = MapOracle::new(2, 2, |x| vec![x[0] * x[0] - x[1] * x[1], 2.0 * x[0] * x[1]]);
    let mut e = CatalogEntry::new("complex-square", EntryKind::PlaneMap, f.clone())
        .fact("degree", 2, Provenance::Oracle("winding count"));
    e.ball_extension = Some(f);
    e.domain = Some(BoxDomain::cube(2, 1.0));
    e.probe = Some(vec![0.3, 0.2]);
    e
}

fn rotation_entry() -> CatalogEntry {
    let (c, s) = ((PI / 4.0).cos(), (PI / 4.0).sin());
    let m = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    let f = MapOracle::linear(m.clone());
    let mut e = CatalogEntry::new("rotation-pi4-2d", EntryKind::PlaneMap, f.clone())
        .fact("degree", 1, Provenance::Analytic)
        .fact("sense", 1, Provenance::Analytic);
    e.inverse = Some(MapOracle::linear(m.transpose()));
    e.ball_extension = Some(f);
    e.domain = Some(BoxDomain::cube(2, 1.0));
    e.probe = Some(vec![0.2, -0.1]);
    e
}

fn kink_entry() -> CatalogEntry {
    let f = MapOracle::new(2, 2, |x| vec![x[0].abs(), x[1]]);
    let mut e = CatalogEntry::new("kink-2d", EntryKind::PlaneMap, f)
        .fact("degree at (0.5, 0.1)", 0, Provenance::Analytic);
    e.domain = Some(BoxDomain::cube(2, 1.0));
    e.probe = Some(vec![0.5, 0.1]);
    e
}

/// Real root of `t³ + t = y`.
pub fn cubic_root(y: f64) -> f64 {
    let d = (y * y / 4.0 + 1.0 / 27.0).sqrt();
    (y / 2.0 + d).cbrt() + (y / 2.0 - d).cbrt()
}

fn cubic_diffeo_entry() -> CatalogEntry {
    let f = MapOracle::new(2, 2, |x| vec![x[0].powi(3) + x[0], x[1]]);
    let mut e = CatalogEntry::new("cubic-diffeo-2d", EntryKind::Homeomorphism, f.clone())
        .fact("sense", 1, Provenance::Analytic)
        .fact("degree", 1, Provenance::Analytic);
    e.inverse = Some(MapOracle::new(2, 2, |y| vec![cubic_root(y[0]), y[1]]));
    e.ball_extension = Some(f);
    e.domain = Some(BoxDomain::cube(2, 1.0));
    e.probe = Some(vec![0.3, -0.2]);
    e
}

fn cubic_degenerate_entry() -> CatalogEntry {
    let f = MapOracle::new(2, 2, |x| vec![x[0].powi(3), x[1]]);
    let mut e = CatalogEntry::new("cubic-degenerate-2d", EntryKind::Homeomorphism, f)
        .fact("sense", 1, Provenance::Analytic);
    e.inverse = Some(MapOracle::new(2, 2, |y| vec![y[0].cbrt(), y[1]]));
    e.domain = Some(BoxDomain::cube(2, 1.0));
    e.probe = Some(vec![0.3, -0.2]);
    e
}

/// Perturbation amplitude of [`reversing_diffeo`].
pub const REVERSING_AMPLITUDE: f64 = 0.05;

/// `g(x) = ℛx + 0.05 · (sin(x_{i+1} + 0.7 i + 0.3))_i` on `R^n`. Each row of
/// `Dg − ℛ` has one entry of size ≤ 0.05 in a cyclically shifted column, so
/// `J_g < 0` everywhere.
pub fn reversing_diffeo(n: usize) -> MapOracle {
    MapOracle::new(n, n, move |x| {
        (0..n)
            .map(|i| {
                let base = if i + 1 == n { -x[i] } else { x[i] };
                base + REVERSING_AMPLITUDE * (x[(i + 1) % n] + 0.7 * i as f64 + 0.3).sin()
            })
            .collect()
    })
}

/// Newton inverse of [`reversing_diffeo`] started at `ℛy`.
pub fn reversing_diffeo_inverse(n: usize) -> MapOracle {
    let g = reversing_diffeo(n);
    MapOracle::new(n, n, move |y| {
        let mut x0 = y.to_vec();
        x0[n - 1] = -x0[n - 1];
        newton_solve(&g, y, x0, 100, 1e-14).unwrap_or_else(|x| x)
    })
}

fn reversing_diffeo_entry() -> CatalogEntry {
    let mut e = CatalogEntry::new("reversing-diffeo-4d", EntryKind::Homeomorphism, reversing_diffeo(4))
        .fact("sense", -1, Provenance::Analytic);
    e.inverse = Some(reversing_diffeo_inverse(4));
    e.domain = Some(BoxDomain::cube(4, 1.0));
    e.probe = Some(default_probe(4));
    e
}

fn reversing_affine_entry() -> CatalogEntry {
    let m = DMatrix::from_row_slice(
        4,
        4,
        &[1.0, 0.2, 0.0, 0.1, 0.0, 1.1, 0.3, 0.0, 0.1, 0.0, 0.9, 0.2, 0.0, 0.1, 0.0, -1.0],
    );
    let b = vec![0.05, -0.02, 0.01, 0.03];
    let inv = m.clone().try_inverse().expect("invertible");
    let binv = geom::scale(&geom::mat_vec(&inv, &b), -1.0);
    let mut e = CatalogEntry::new("reversing-affine-4d", EntryKind::Homeomorphism, MapOracle::affine(m, b))
        .fact("sense", -1, Provenance::Analytic);
    e.inverse = Some(MapOracle::affine(inv, binv));
    e.domain = Some(BoxDomain::cube(4, 1.0));
    e.probe = Some(default_probe(4));
    e
}

/// Sense-preserving homeomorphisms of `R^3` with inverses; the reversing
/// family is `ℛ ∘ h`.
fn preserving_3d() -> Vec<(&'static str, &'static str, MapOracle, MapOracle)> {
    let rot = {
        let (a, b) = (0.7f64, 0.4f64);
        let rz = DMatrix::from_row_slice(3, 3, &[a.cos(), -a.sin(), 0.0, a.sin(), a.cos(), 0.0, 0.0, 0.0, 1.0]);
        let rx = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, b.cos(), -b.sin(), 0.0, b.sin(), b.cos()]);
        rz * rx
    };
    let aff = DMatrix::from_row_slice(3, 3, &[1.2, 0.3, -0.1, 0.0, 0.8, 0.2, 0.1, -0.2, 1.5]);
    let aff_inv = aff.clone().try_inverse().expect("invertible");
    let shift = vec![0.3, -0.5, 0.2];
    let shift_inv = geom::scale(&shift, -1.0);
    let radial = MapOracle::new(3, 3, |x| geom::scale(x, 1.0 + 0.2 * geom::dot(x, x)));
    vec![
        ("hom3-rotation", "hom3-rotation-reflected", MapOracle::linear(rot.clone()), MapOracle::linear(rot.transpose())),
        (
            "hom3-scaling",
            "hom3-scaling-reflected",
            MapOracle::linear(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.5, 1.5]))),
            MapOracle::linear(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 2.0, 1.0 / 1.5]))),
        ),
        ("hom3-affine", "hom3-affine-reflected", MapOracle::affine(aff, shift.clone()), {
            let b = geom::scale(&geom::mat_vec(&aff_inv, &shift), -1.0);
            MapOracle::affine(aff_inv, b)
        }),
        (
            "hom3-translation",
            "hom3-translation-reflected",
            MapOracle::identity(3).translated(shift),
            MapOracle::identity(3).translated(shift_inv),
        ),
        (
            "hom3-shear",
            "hom3-shear-reflected",
            MapOracle::new(3, 3, |x| vec![x[0] + 0.5 * x[1].tanh(), x[1], x[2]]),
            MapOracle::new(3, 3, |y| vec![y[0] - 0.5 * y[1].tanh(), y[1], y[2]]),
        ),
        (
            "hom3-triangular",
            "hom3-triangular-reflected",
            MapOracle::new(3, 3, |x| vec![x[0], x[1] + x[0].sin(), x[2] + 0.5 * x[0] * x[1]]),
            MapOracle::new(3, 3, |y| {
                let x1 = y[1] - y[0].sin();
                vec![y[0], x1, y[2] - 0.5 * y[0] * x1]
            }),
        ),
        (
            "hom3-twist",
            "hom3-twist-reflected",
            MapOracle::new(3, 3, |x| {
                let a = 0.8 * x[2];
                vec![x[0] * a.cos() - x[1] * a.sin(), x[0] * a.sin() + x[1] * a.cos(), x[2]]
            }),
            MapOracle::new(3, 3, |y| {
                let a = -0.8 * y[2];
                vec![y[0] * a.cos() - y[1] * a.sin(), y[0] * a.sin() + y[1] * a.cos(), y[2]]
            }),
        ),
        (
            "hom3-cubic",
            "hom3-cubic-reflected",
            MapOracle::new(3, 3, |x| vec![x[0].powi(3) + x[0], x[1], x[2]]),
            MapOracle::new(3, 3, |y| vec![cubic_root(y[0]), y[1], y[2]]),
        ),
        ("hom3-radial", "hom3-radial-reflected", radial.clone(), radial.newton_inverse()),
        (
            "hom3-swirl",
            "hom3-swirl-reflected",
            MapOracle::new(3, 3, |x| vec![x[0], x[1] + 0.3 * (x[2] + x[0]).sin(), x[2] + 0.3 * x[0].cos()]),
            MapOracle::new(3, 3, |y| {
                let x2 = y[2] - 0.3 * y[0].cos();
                vec![y[0], y[1] - 0.3 * (x2 + y[0]).sin(), x2]
            }),
        ),
    ]
}

fn homeomorphism_entries() -> Vec<CatalogEntry> {
    let r = MapOracle::reflection(3);
    let mut out = Vec::new();
    for (name, reflected, h, inv) in preserving_3d() {
        let mut e = CatalogEntry::new(name, EntryKind::Homeomorphism, h.clone()).fact("sense", 1, Provenance::Analytic);
        e.inverse = Some(inv.clone());
        e.domain = Some(BoxDomain::cube(3, 2.0));
        out.push(e);
        let mut e = CatalogEntry::new(reflected, EntryKind::Homeomorphism, r.compose(&h))
            .fact("sense", -1, Provenance::Analytic);
        e.inverse = Some(inv.compose(&r));
        e.domain = Some(BoxDomain::cube(3, 2.0));
        out.push(e);
    }
    out
}

fn unit_circle() -> MapOracle {
    MapOracle::new(2, 3, |u| vec![u[0], u[1], 0.0])
}

fn pair(name: &'static str, first: MapOracle, second: MapOracle, abs_linking: i64, prov: Provenance) -> CatalogEntry {
    let mut e = CatalogEntry::new(name, EntryKind::CurvePair, first).fact("|linking|", abs_linking, prov);
    e.partner = Some(second);
    e
}

/// Curve on the torus of tube radius 0.4 around the unit circle, winding `k`
/// times around the core.
pub fn torus_curve(k: i32) -> MapOracle {
    MapOracle::new(2, 3, move |u| {
        let a = u[1].atan2(u[0]);
        let b = k as f64 * a;
        let rho = 1.0 + 0.4 * b.cos();
        vec![rho * a.cos(), rho * a.sin(), 0.4 * b.sin()]
    })
}

fn pair_entries() -> Vec<CatalogEntry> {
    let hopf = MapOracle::new(2, 3, |u| vec![1.0 + u[0], 0.0, u[1]]);
    let hopf_rev = MapOracle::new(2, 3, |u| vec![1.0 + u[0], 0.0, -u[1]]);
    let far = MapOracle::new(2, 3, |u| vec![10.0 + u[0], 0.0, u[1]]);
    let base1 = mesh::iota1_oracle(4, &[0.0, 0.0, 0.0]).expect("valid parameter");
    let base2 = mesh::iota2_oracle(4, &[0.0, 0.0]).expect("valid parameter");
    let mut i1 = CatalogEntry::new("iota1-4d", EntryKind::SphereMap, base1.clone()).fact(
        "sphere dimension",
        1,
        Provenance::ByConstruction,
    );
    i1.partner = Some(base2.clone());
    let mut i2 = CatalogEntry::new("iota2-4d", EntryKind::SphereMap, base2.clone()).fact(
        "sphere dimension",
        2,
        Provenance::ByConstruction,
    );
    i2.partner = Some(base1.clone());
    vec![
        pair("hopf", unit_circle(), hopf.clone(), 1, Provenance::Oracle("crossing count")),
        pair("hopf-reversed", unit_circle(), hopf_rev, 1, Provenance::Oracle("crossing count")),
        pair("unlinked", unit_circle(), far, 0, Provenance::Oracle("crossing count")),
        pair("torus-curve-2", unit_circle(), torus_curve(2), 2, Provenance::Oracle("crossing count")),
        pair("torus-curve-3", unit_circle(), torus_curve(3), 3, Provenance::Oracle("crossing count")),
        pair("iota-pair-4d", base1, base2, 1, Provenance::Analytic),
        i1,
        i2,
    ]
}

/// Compactly supported scalar fields on `[−1, 1]^n`.
pub fn scalar_field(name: &str, n: usize) -> Result<MapOracle> {
    let f: Box<dyn Fn(&[f64]) -> f64 + Send + Sync> = match name {
        "sine" => Box::new(|x| x.iter().map(|v| (PI * v).sin()).product()),
        "bump" => Box::new(|x| (1.0 - geom::dot(x, x)).max(0.0).powi(2)),
        "tent" => Box::new(|x| (1.0 - geom::norm(x)).max(0.0)),
        "poly" => Box::new(|x| x.iter().map(|v| 1.0 - v * v).product()),
        "wave" => Box::new(|x| (2.0 * PI * x[0]).sin() * x[1..].iter().map(|v| 1.0 - v * v).product::<f64>()),
        _ => return Err(Error::UnknownEntry(name.to_string())),
    };
    Ok(MapOracle::new(n, 1, move |x| vec![f(x)]))
}

pub const SCALAR_FIELDS: [&str; 5] = ["sine", "bump", "tent", "poly", "wave"];

fn scalar_entries() -> Vec<CatalogEntry> {
    SCALAR_FIELDS
        .iter()
        .map(|&name| {
            let mut e = CatalogEntry::new(name, EntryKind::ScalarField, scalar_field(name, 2).expect("registered"))
                .fact("vanishes on the boundary of [-1,1]^n", 1, Provenance::ByConstruction);
            e.domain = Some(BoxDomain::cube(2, 1.0));
            e
        })
        .collect()
}

/// `f_k = f + k^{−2} sin(k x₁) e₁` with `f` the cubic diffeomorphism; the
/// `W^{1,p}` distance to `f` is `O(1/k)`.
fn sequence_entry() -> CatalogEntry {
    let limit = MapOracle::new(2, 2, |x| vec![x[0].powi(3) + x[0], x[1]]);
    let mut e = CatalogEntry::new("sine-sequence", EntryKind::GridSequence, limit)
        .fact("W1p distance order in 1/k", 1, Provenance::Analytic);
    e.sequence = Some(Arc::new(|k| {
        let k = k.max(1) as f64;
        MapOracle::new(2, 2, move |x| vec![x[0].powi(3) + x[0] + (k * x[0]).sin() / (k * k), x[1]])
    }));
    e.domain = Some(BoxDomain::cube(2, 1.0));
    e
}

fn build() -> Vec<CatalogEntry> {
    let mut v = vec![
        identity_entry(2, "identity-2d"),
        identity_entry(3, "identity-3d"),
        identity_entry(4, "identity-4d"),
        reflection_entry(2, "reflection-2d"),
        reflection_entry(3, "reflection-3d"),
        reflection_entry(4, "reflection-4d"),
        complex_square_entry(),
        rotation_entry(),
        antipodal_entry(),
    ];
    const POWERS: [&str; 7] = [
        "circle-power--3",
        "circle-power--2",
        "circle-power--1",
        "circle-power-0",
        "circle-power-1",
        "circle-power-2",
        "circle-power-3",
    ];
    for (i, name) in POWERS.iter().enumerate() {
        v.push(circle_power_entry(i as i32 - 3, name));
    }
    v.extend(pair_entries());
    v.extend([
        kink_entry(),
        cubic_diffeo_entry(),
        cubic_degenerate_entry(),
        reversing_diffeo_entry(),
        reversing_affine_entry(),
    ]);
    v.extend(homeomorphism_entries());
    v.extend(scalar_entries());
    v.push(sequence_entry());
    v
}

fn registry() -> &'static [CatalogEntry] {
    static REGISTRY: OnceLock<Vec<CatalogEntry>> = OnceLock::new();
    REGISTRY.get_or_init(build)
}

/// Looks up an entry by name.
pub fn get(name: &str) -> Result<CatalogEntry> {
    registry()
        .iter()
        .find(|e| e.name == name)
        .cloned()
        .ok_or_else(|| Error::UnknownEntry(name.to_string()))
}

pub fn names() -> Vec<&'static str> {
    registry().iter().map(|e| e.name).collect()
}

pub fn entries() -> &'static [CatalogEntry] {
    registry()
}

/// Entries of one kind, in registration order.
pub fn of_kind(kind: EntryKind) -> Vec<CatalogEntry> {
    registry().iter().filter(|e| e.kind == kind).cloned().collect()
}

/// Names of the `R^3` homeomorphisms with the given sense.
pub fn homeomorphisms_3d(sense: i64) -> Vec<&'static str> {
    registry()
        .iter()
        .filter(|e| e.name.starts_with("hom3-") && e.known_int("sense") == Some(sense))
        .map(|e| e.name)
        .collect()
}

/// Names of the sphere maps whose degree is recorded.
pub fn sphere_maps_with_degree() -> Vec<&'static str> {
    registry()
        .iter()
        .filter(|e| e.kind == EntryKind::SphereMap && e.known("degree").is_some())
        .map(|e| e.name)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_resolvable() {
        let mut n = names();
        let len = n.len();
        n.sort();
        n.dedup();
        assert_eq!(n.len(), len);
        for name in names() {
            assert_eq!(get(name).unwrap().name, name);
        }
        assert!(matches!(get("no-such-map"), Err(Error::UnknownEntry(_))));
    }

    #[test]
    fn documented_examples() {
        assert_eq!(get("reflection-4d").unwrap().known_int("sense"), Some(-1));
        assert_eq!(get("circle-power-3").unwrap().known_int("degree"), Some(3));
        assert_eq!(get("identity-2d").unwrap().known_int("degree"), Some(1));
    }

    #[test]
    fn every_fact_has_a_provenance_and_every_map_is_deterministic() {
        let x = [0.3, -0.2, 0.1, 0.4];
        for e in entries() {
            assert!(!e.known_facts.is_empty(), "{}", e.name);
            let d = e.oracle.dim_in();
            let p = &x[..d];
            assert_eq!(e.oracle.eval(p), e.oracle.eval(p));
        }
    }

    #[test]
    fn inverses_invert() {
        for e in entries().iter().filter(|e| e.inverse.is_some()) {
            let inv = e.inverse.as_ref().unwrap();
            let n = e.oracle.dim_in();
            for s in 0..5 {
                let x: Vec<f64> = (0..n).map(|i| (0.37 * (s * n + i) as f64).sin() * 0.9).collect();
                let back = inv.eval(&e.oracle.eval(&x));
                assert!(geom::distance(&back, &x) < 1e-9, "{}: {:?} vs {:?}", e.name, back, x);
            }
        }
    }

    #[test]
    fn reversing_diffeo_jacobian_is_negative_on_the_box() {
        let g = reversing_diffeo(4);
        let pts = crate::sobolev::sample_points(&BoxDomain::cube(4, 1.0), 2000, 3);
        for p in pts {
            let j = g.jacobian_det(&p);
            assert!(j < -0.9 && j > -1.1, "{j}");
        }
    }

    #[test]
    fn ten_homeomorphisms_of_each_sense() {
        assert_eq!(homeomorphisms_3d(1).len(), 10);
        assert_eq!(homeomorphisms_3d(-1).len(), 10);
        for name in homeomorphisms_3d(1).iter().chain(&homeomorphisms_3d(-1)) {
            let e = get(name).unwrap();
            let sense = e.known_int("sense").unwrap() as f64;
            for p in crate::sobolev::sample_points(&BoxDomain::cube(3, 2.0), 50, 1) {
                assert!(e.oracle.jacobian_det(&p) * sense > 0.0, "{name}");
            }
        }
    }

    #[test]
    fn cubic_root_solves() {
        for y in [-5.0, -0.3, 0.0, 0.7, 12.0] {
            let t = cubic_root(y);
            assert!((t * t * t + t - y).abs() < 1e-12);
        }
    }

    #[test]
    fn scalar_fields_vanish_on_the_boundary() {
        for name in SCALAR_FIELDS {
            let f = scalar_field(name, 2).unwrap();
            for s in [-1.0, -0.4, 0.3, 1.0] {
                for p in [[1.0, s], [-1.0, s], [s, 1.0], [s, -1.0]] {
                    assert!(f.eval(&p)[0].abs() < 1e-12, "{name} at {p:?}");
                }
            }
        }
    }
}
