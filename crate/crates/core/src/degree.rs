//! Local degree on boxes and degree of maps between spheres.
//!
//! Three independent methods:
//! - [`local_degree_regular`]: signed count of Newton-located preimages;
//! - [`degree_sphere_map_simplicial`]: signed covering count of a direction by
//!   the radially projected image simplices;
//! - [`degree_sphere_map_kronecker`]: the normalized integral of the pulled
//!   back volume form of `S^k`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom;
use crate::map::{newton_solve, MapOracle};
use crate::mesh::{EmbeddedSphere, SphereQuadrature};

/// Jacobians below this magnitude make a value non-regular.
pub const SINGULAR_JACOBIAN: f64 = 1e-8;
/// Preimages closer than this are the same point.
pub const DEDUPE_RADIUS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeMethod {
    RegularValue,
    Simplicial,
    Kronecker,
}

/// How far a raw value may sit from its rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    Accept,
    Warn,
    Reject,
}

impl Validity {
    pub fn of(residual: f64) -> Validity {
        if residual < 0.25 {
            Validity::Accept
        } else if residual < 0.5 {
            Validity::Warn
        } else {
            Validity::Reject
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preimage {
    pub point: Vec<f64>,
    pub jacobian: f64,
    pub sign: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeResult {
    pub value: f64,
    pub rounded: i64,
    pub residual: f64,
    pub method: DegreeMethod,
    pub preimages: Option<Vec<Preimage>>,
    /// Newton seeds (regular-value method) or quadrature nodes / simplices.
    pub samples: usize,
}

impl DegreeResult {
    fn new(value: f64, method: DegreeMethod, samples: usize) -> DegreeResult {
        let rounded = value.round();
        DegreeResult {
            value,
            rounded: rounded as i64,
            residual: (value - rounded).abs(),
            method,
            preimages: None,
            samples,
        }
    }

    pub fn validity(&self) -> Validity {
        Validity::of(self.residual)
    }

    pub fn is_valid(&self) -> bool {
        self.residual < 0.5
    }
}

/// Closed axis-aligned box `[lo_1, hi_1] × ... × [lo_n, hi_n]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<BoxDomain> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::DimensionMismatch("box corners differ in length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidArgument("box must have lo < hi in every axis".into()));
        }
        Ok(BoxDomain { lo, hi })
    }

    /// `[-a, a]^n`.
    pub fn cube(n: usize, a: f64) -> BoxDomain {
        BoxDomain {
            lo: vec![-a; n],
            hi: vec![a; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Distance from an interior point to the boundary.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (a, b))| (v - a).min(b - v))
            .fold(f64::INFINITY, f64::min)
    }

    /// Closest boundary point to an interior point.
    pub fn nearest_boundary_point(&self, x: &[f64]) -> Vec<f64> {
        let mut best = (f64::INFINITY, 0, 0.0);
        for i in 0..self.dim() {
            for target in [self.lo[i], self.hi[i]] {
                let d = (x[i] - target).abs();
                if d < best.0 {
                    best = (d, i, target);
                }
            }
        }
        let mut b = x.to_vec();
        b[best.1] = best.2;
        b
    }

    /// Lattice of `m` points per axis on every face (corners included).
    pub fn boundary_samples(&self, m: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut out = Vec::new();
        let axis = |i: usize, j: usize| self.lo[i] + (self.hi[i] - self.lo[i]) * j as f64 / (m - 1) as f64;
        for fixed in 0..n {
            for side in [self.lo[fixed], self.hi[fixed]] {
                let free: Vec<usize> = (0..n).filter(|&i| i != fixed).collect();
                let count = m.pow(free.len() as u32);
                for flat in 0..count {
                    let mut p = vec![0.0; n];
                    p[fixed] = side;
                    let mut rem = flat;
                    for &i in &free {
                        p[i] = axis(i, rem % m);
                        rem /= m;
                    }
                    out.push(p);
                }
            }
        }
        out
    }

    /// Cell-centred seed lattice with `m` points per axis.
    pub fn seed_lattice(&self, m: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let count = m.pow(n as u32);
        (0..count)
            .map(|flat| {
                let mut rem = flat;
                (0..n)
                    .map(|i| {
                        let j = rem % m;
                        rem /= m;
                        self.lo[i] + (self.hi[i] - self.lo[i]) * (j as f64 + 0.5) / m as f64
                    })
                    .collect()
            })
            .collect()
    }
}

/// Knobs of the regular-value method.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeConfig {
    pub seeds_per_axis: usize,
    pub boundary_tolerance: f64,
    /// Boundary samples per face axis; `None` picks a density by dimension.
    pub boundary_samples_per_axis: Option<usize>,
    pub newton_iterations: usize,
}

impl Default for DegreeConfig {
    fn default() -> Self {
        DegreeConfig {
            seeds_per_axis: 16,
            boundary_tolerance: 1e-3,
            boundary_samples_per_axis: None,
            newton_iterations: 50,
        }
    }
}

fn default_boundary_density(n: usize) -> usize {
    match n {
        1 => 2,
        2 => 400,
        3 => 80,
        4 => 24,
        _ => 10,
    }
}

/// `deg(φ, Ω, p)` as the signed count of preimages, with default settings.
pub fn local_degree_regular(map: &MapOracle, domain: &BoxDomain, p: &[f64]) -> Result<DegreeResult> {
    local_degree_regular_with(map, domain, p, &DegreeConfig::default())
}

pub fn local_degree_regular_with(
    map: &MapOracle,
    domain: &BoxDomain,
    p: &[f64],
    cfg: &DegreeConfig,
) -> Result<DegreeResult> {
    let n = domain.dim();
    if map.dim_in() != n || map.dim_out() != n || p.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "map R^{} -> R^{}, box in R^{n}, value in R^{}",
            map.dim_in(),
            map.dim_out(),
            p.len()
        )));
    }
    let delta = cfg.boundary_tolerance;
    let m = cfg.boundary_samples_per_axis.unwrap_or_else(|| default_boundary_density(n));
    let boundary_dist = domain
        .boundary_samples(m.max(2))
        .par_iter()
        .map(|b| geom::distance(&map.eval(b), p))
        .reduce(|| f64::INFINITY, f64::min);
    if boundary_dist < delta {
        return Err(Error::BoundaryHit {
            distance: boundary_dist,
            tolerance: delta,
        });
    }

    let seeds = domain.seed_lattice(cfg.seeds_per_axis);
    let found: Vec<Vec<f64>> = seeds
        .par_iter()
        .filter_map(|s| newton_solve(map, p, s.clone(), cfg.newton_iterations, 1e-11).ok())
        .filter(|x| domain.contains(x))
        .collect();

    let mut preimages: Vec<Preimage> = Vec::new();
    for x in found {
        if preimages.iter().any(|q| geom::distance(&q.point, &x) < DEDUPE_RADIUS) {
            continue;
        }
        // A preimage hugging the boundary means p sits on (or next to) φ(∂Ω).
        let b = domain.nearest_boundary_point(&x);
        let near = geom::distance(&map.eval(&b), p);
        if domain.boundary_distance(&x) < 1e-9 || near < delta {
            return Err(Error::BoundaryHit {
                distance: near,
                tolerance: delta,
            });
        }
        let jac = map.jacobian_det(&x);
        if jac.abs() < SINGULAR_JACOBIAN {
            return Err(Error::SingularPreimage { point: x, jacobian: jac });
        }
        preimages.push(Preimage {
            point: x,
            jacobian: jac,
            sign: if jac > 0.0 { 1 } else { -1 },
        });
    }
    preimages.sort_by(|a, b| a.point.partial_cmp(&b.point).unwrap_or(std::cmp::Ordering::Equal));
    let value = preimages.iter().map(|q| q.sign).sum::<i64>() as f64;
    let mut res = DegreeResult::new(value, DegreeMethod::RegularValue, seeds.len());
    res.preimages = Some(preimages);
    Ok(res)
}

const FLAT_SIMPLEX: f64 = 1e-10;

/// Degree of the vertex-mapped sphere by counting, with orientation, the
/// projected image simplices that cover `direction`.
pub fn degree_sphere_map_simplicial(sphere: &EmbeddedSphere, direction: &[f64]) -> Result<DegreeResult> {
    let mesh = &sphere.base_mesh;
    let d = mesh.dim + 1;
    if direction.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "direction in R^{} for a sphere in R^{d}",
            direction.len()
        )));
    }
    if sphere.image_vertices.iter().any(|w| w.len() != d) {
        return Err(Error::DimensionMismatch("image vertices must lie in R^{k+1}".into()));
    }
    let mut projected = Vec::with_capacity(sphere.image_vertices.len());
    for (i, w) in sphere.image_vertices.iter().enumerate() {
        let r = geom::norm(w);
        if r < 1e-12 {
            return Err(Error::ZeroVertex(i));
        }
        projected.push(geom::scale(w, 1.0 / r));
    }

    let mut dir = geom::normalized(direction);
    'attempt: for attempt in 0..16 {
        let mut count = 0i64;
        for (si, s) in mesh.simplices.iter().enumerate() {
            let cols: Vec<Vec<f64>> = s.vertices.iter().map(|&i| projected[i].clone()).collect();
            let det = geom::det_columns(&cols);
            if det.abs() < FLAT_SIMPLEX {
                if in_cap(&cols, &dir) {
                    return Err(Error::DegenerateSimplex(si));
                }
                continue;
            }
            let Some(l) = geom::solve_columns(&cols, &dir) else {
                continue;
            };
            let lmin = l.iter().cloned().fold(f64::INFINITY, f64::min);
            if lmin.abs() < 1e-10 && l.iter().all(|&x| x > -1e-10) {
                // direction on a projected face: nudge it and start over
                dir = perturb(&dir, attempt);
                continue 'attempt;
            }
            if lmin > 0.0 {
                count += s.sign as i64 * if det > 0.0 { 1 } else { -1 };
            }
        }
        return Ok(DegreeResult::new(count as f64, DegreeMethod::Simplicial, mesh.simplices.len()));
    }
    Err(Error::DegenerateSimplex(usize::MAX))
}

fn in_cap(cols: &[Vec<f64>], dir: &[f64]) -> bool {
    let mut c = vec![0.0; dir.len()];
    for v in cols {
        for (ci, vi) in c.iter_mut().zip(v) {
            *ci += vi;
        }
    }
    let cn = geom::norm(&c);
    if cn < 1e-12 {
        return true;
    }
    let c = geom::scale(&c, 1.0 / cn);
    let radius = cols
        .iter()
        .map(|v| geom::dot(v, &c).clamp(-1.0, 1.0).acos())
        .fold(0.0, f64::max);
    geom::dot(dir, &c).clamp(-1.0, 1.0).acos() <= radius + 1e-9
}

fn perturb(dir: &[f64], attempt: usize) -> Vec<f64> {
    // deterministic, irrational-ish offsets
    let q: Vec<f64> = dir
        .iter()
        .enumerate()
        .map(|(i, x)| x + 1e-4 * ((attempt * 7 + i * 13 + 1) as f64 * 0.618_033_988_75).sin())
        .collect();
    geom::normalized(&q)
}

/// `(1 / vol S^k) ∫ det(f, ∂_1 f, ..., ∂_k f) / |f|^{k+1}`, which is the
/// integral of `det(ψ, ∂ψ)` for `ψ = f / |f|`. With `normalize` the tangent
/// derivatives are taken of `ψ` itself.
pub fn degree_sphere_map_kronecker(
    f: &MapOracle,
    quad: &SphereQuadrature,
    normalize: bool,
) -> Result<DegreeResult> {
    let d = quad.dim + 1;
    if f.dim_in() != d || f.dim_out() != d {
        return Err(Error::DimensionMismatch(format!(
            "map R^{} -> R^{} on S^{}",
            f.dim_in(),
            f.dim_out(),
            quad.dim
        )));
    }
    let target = if normalize {
        let g = f.clone();
        MapOracle::new(d, d, move |x| geom::normalized(&g.eval(x))).with_step(f.jacobian_step())
    } else {
        f.clone()
    };
    let terms: Vec<(f64, f64)> = (0..quad.len())
        .into_par_iter()
        .map(|i| {
            let u = &quad.nodes[i];
            let fu = f.eval(u);
            let r = geom::norm(&fu);
            if r < 1e-8 {
                return (0.0, r);
            }
            let mut cols = vec![if normalize { geom::scale(&fu, 1.0 / r) } else { fu }];
            cols.extend(target.tangent_derivatives(u, &quad.frames[i]));
            let scale = if normalize { 1.0 } else { r.powi(d as i32) };
            (quad.weights[i] * geom::det_columns(&cols) / scale, r)
        })
        .collect();
    let min_r = terms.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    if min_r < 1e-8 {
        return Err(Error::NearZero(min_r));
    }
    let value = terms.iter().map(|t| t.0).sum::<f64>() / geom::sphere_volume(quad.dim);
    let res = DegreeResult::new(value, DegreeMethod::Kronecker, quad.len());
    if res.residual >= 0.25 {
        return Err(Error::NotConverged {
            residual: res.residual,
            threshold: 0.25,
        });
    }
    Ok(res)
}

/// One term of the right-hand side of the multiplication formula.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicationTerm {
    pub psi_preimage: Vec<f64>,
    pub psi_sign: i64,
    pub phi_degree: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicationReport {
    /// `deg(ψ∘φ, Ω, p)`.
    pub lhs: i64,
    /// `Σ_y sgn J_ψ(y) · deg(φ, Ω, y)` over `y ∈ ψ^{-1}(p)`.
    pub rhs: i64,
    /// `deg(ψ, φ(Ω), p)`: signs of the ψ-preimages that φ(Ω) covers.
    pub psi_factor: i64,
    /// The common value of `deg(φ, Ω, y)` over those preimages, if there is one.
    pub phi_factor: Option<i64>,
    pub terms: Vec<MultiplicationTerm>,
    pub agree: bool,
}

/// Both sides of the multiplication formula for `ψ∘φ` at `p`.
pub fn verify_multiplication(
    phi: &MapOracle,
    psi: &MapOracle,
    domain: &BoxDomain,
    p: &[f64],
) -> Result<MultiplicationReport> {
    let composite = psi.compose(phi);
    let lhs = local_degree_regular(&composite, domain, p)?.rounded;

    // ψ-preimages are searched in a padded bounding box of φ(Ω̄).
    let n = domain.dim();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    let mut samples = domain.seed_lattice(12);
    samples.extend(domain.boundary_samples(12));
    for x in samples {
        let y = phi.eval(&x);
        for i in 0..n {
            lo[i] = lo[i].min(y[i]);
            hi[i] = hi[i].max(y[i]);
        }
    }
    for i in 0..n {
        let pad = 0.05 * (hi[i] - lo[i]) + 1e-3;
        lo[i] -= pad;
        hi[i] += pad;
    }
    let image_box = BoxDomain::new(lo, hi)?;
    let psi_deg = local_degree_regular(psi, &image_box, p)?;

    let mut terms = Vec::new();
    for q in psi_deg.preimages.unwrap_or_default() {
        let phi_degree = local_degree_regular(phi, domain, &q.point)?.rounded;
        terms.push(MultiplicationTerm {
            psi_preimage: q.point,
            psi_sign: q.sign,
            phi_degree,
        });
    }
    let rhs = terms.iter().map(|t| t.psi_sign * t.phi_degree).sum();
    let covered: Vec<&MultiplicationTerm> = terms.iter().filter(|t| t.phi_degree != 0).collect();
    let psi_factor = covered.iter().map(|t| t.psi_sign).sum();
    let phi_factor = match covered.first() {
        Some(first) if covered.iter().all(|t| t.phi_degree == first.phi_degree) => Some(first.phi_degree),
        None => Some(0),
        _ => None,
    };
    Ok(MultiplicationReport {
        lhs,
        rhs,
        psi_factor,
        phi_factor,
        terms,
        agree: lhs == rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{embed_custom, make_sphere_mesh};
    use std::f64::consts::PI;

    fn complex_square() -> MapOracle {
        MapOracle::new(2, 2, |x| vec![x[0] * x[0] - x[1] * x[1], 2.0 * x[0] * x[1]])
    }

    fn circle_power(k: i32) -> MapOracle {
        MapOracle::new(2, 2, move |u| {
            let t = u[1].atan2(u[0]) * k as f64;
            vec![t.cos(), t.sin()]
        })
    }

    /// Winding number of a closed polygon around the origin by signed
    /// crossings of the positive x-axis.
    fn winding_oracle(points: &[Vec<f64>]) -> i64 {
        let mut w = 0;
        for i in 0..points.len() {
            let a = &points[i];
            let b = &points[(i + 1) % points.len()];
            if (a[1] < 0.0) != (b[1] < 0.0) {
                let x = a[0] + (b[0] - a[0]) * (0.0 - a[1]) / (b[1] - a[1]);
                if x > 0.0 {
                    w += if b[1] > a[1] { 1 } else { -1 };
                }
            }
        }
        w
    }

    #[test]
    fn identity_has_degree_one_at_origin() {
        let r = local_degree_regular(&MapOracle::identity(2), &BoxDomain::cube(2, 1.0), &[0.0, 0.0]).unwrap();
        assert_eq!(r.rounded, 1);
        let pre = r.preimages.unwrap();
        assert_eq!(pre.len(), 1);
        assert!(geom::norm(&pre[0].point) < 1e-10 && pre[0].sign == 1);
    }

    #[test]
    fn complex_square_counts_two_roots() {
        let r = local_degree_regular(&complex_square(), &BoxDomain::cube(2, 2.0), &[0.25, 0.0]).unwrap();
        assert_eq!(r.rounded, 2);
        let pre = r.preimages.unwrap();
        assert_eq!(pre.len(), 2);
        // analytic roots ±1/2 with J = 4|z|² = 1
        for (q, want) in pre.iter().zip([-0.5, 0.5]) {
            assert!((q.point[0] - want).abs() < 1e-9 && q.point[1].abs() < 1e-9);
            assert!((q.jacobian - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn reflection_has_degree_minus_one() {
        let r = local_degree_regular(&MapOracle::reflection(3), &BoxDomain::cube(3, 1.0), &[0.0, 0.0, 0.5]).unwrap();
        assert_eq!(r.rounded, -1);
        assert_eq!(r.preimages.unwrap().len(), 1);
    }

    #[test]
    fn boundary_and_singular_values_are_refused() {
        let id = MapOracle::identity(2);
        assert!(matches!(
            local_degree_regular(&id, &BoxDomain::cube(2, 1.0), &[1.0, 0.3]),
            Err(Error::BoundaryHit { .. })
        ));
        assert!(matches!(
            local_degree_regular(&complex_square(), &BoxDomain::cube(2, 1.0), &[0.0, 0.0]),
            Err(Error::SingularPreimage { .. })
        ));
    }

    #[test]
    fn value_outside_image_has_degree_zero() {
        let r = local_degree_regular(&MapOracle::identity(2), &BoxDomain::cube(2, 1.0), &[3.0, 0.0]).unwrap();
        assert_eq!(r.rounded, 0);
    }

    #[test]
    fn simplicial_identity_and_antipodal() {
        let m = make_sphere_mesh(2, 3).unwrap();
        let id = embed_custom(&m, &MapOracle::identity(3)).unwrap();
        let anti = embed_custom(&m, &MapOracle::linear(-nalgebra::DMatrix::identity(3, 3))).unwrap();
        for dir in [[0.3, 0.2, 0.9], [-1.0, 0.1, 0.05], [0.0, 0.0, -1.0]] {
            assert_eq!(degree_sphere_map_simplicial(&id, &dir).unwrap().rounded, 1);
            assert_eq!(degree_sphere_map_simplicial(&anti, &dir).unwrap().rounded, -1);
        }
    }

    #[test]
    fn simplicial_circle_doubling_matches_winding_oracle() {
        let m = make_sphere_mesh(1, 5).unwrap();
        let f = circle_power(2);
        let e = embed_custom(&m, &f).unwrap();
        let r = degree_sphere_map_simplicial(&e, &[0.6, 0.8]).unwrap();
        // oracle: walk the polygon in the mesh's positive order
        let mut order: Vec<(f64, usize)> = m
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v[1].atan2(v[0]), i))
            .collect();
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let poly: Vec<Vec<f64>> = order.iter().map(|&(_, i)| e.image_vertices[i].clone()).collect();
        assert_eq!(winding_oracle(&poly), 2);
        assert_eq!(r.rounded, 2);
    }

    #[test]
    fn simplicial_rejects_zero_vertex() {
        let m = make_sphere_mesh(1, 1).unwrap();
        let e = embed_custom(&m, &MapOracle::new(2, 2, |x| if x[0] > 0.99 { vec![0.0, 0.0] } else { x.to_vec() })).unwrap();
        assert!(matches!(degree_sphere_map_simplicial(&e, &[0.0, 1.0]), Err(Error::ZeroVertex(_))));
    }

    #[test]
    fn kronecker_examples() {
        let q = make_sphere_mesh(2, 4).unwrap().quadrature();
        let id = degree_sphere_map_kronecker(&MapOracle::identity(3), &q, false).unwrap();
        assert!((id.value - 1.0).abs() < 1e-3);
        let r = degree_sphere_map_kronecker(&MapOracle::reflection(3), &q, true).unwrap();
        assert!((r.value + 1.0).abs() < 1e-3);
        let c = degree_sphere_map_kronecker(&circle_power(3), &SphereQuadrature::uniform_circle(512), false).unwrap();
        assert!((c.value - 3.0).abs() < 1e-6, "{}", c.value);
    }

    #[test]
    fn kronecker_refuses_vanishing_maps() {
        let q = make_sphere_mesh(2, 2).unwrap().quadrature();
        let node = q.nodes[5].clone();
        let f = MapOracle::new(3, 3, move |x| geom::sub(x, &node));
        assert!(matches!(degree_sphere_map_kronecker(&f, &q, false), Err(Error::NearZero(_))));
    }

    #[test]
    fn multiplication_examples() {
        let id = MapOracle::identity(2);
        let r = verify_multiplication(&id, &id, &BoxDomain::cube(2, 1.0), &[0.1, 0.2]).unwrap();
        assert!(r.agree && r.lhs == 1 && r.psi_factor == 1 && r.phi_factor == Some(1));

        let refl = MapOracle::reflection(3);
        let r = verify_multiplication(&refl, &refl, &BoxDomain::cube(3, 1.0), &[0.1, -0.2, 0.3]).unwrap();
        assert!(r.agree && r.lhs == 1 && r.psi_factor == -1 && r.phi_factor == Some(-1));

        let (s, c) = (PI / 4.0).sin_cos();
        let rot = MapOracle::linear(nalgebra::DMatrix::from_row_slice(2, 2, &[c, -s, s, c]));
        let r = verify_multiplication(&rot, &complex_square(), &BoxDomain::cube(2, 1.0), &[0.25, 0.0]).unwrap();
        assert!(r.agree && r.lhs == 2 && r.psi_factor == 2 && r.phi_factor == Some(1));
    }

    #[test]
    fn validity_bands() {
        assert_eq!(Validity::of(0.1), Validity::Accept);
        assert_eq!(Validity::of(0.3), Validity::Warn);
        assert_eq!(Validity::of(0.5), Validity::Reject);
    }
}
