//! Oriented triangulated spheres, sphere quadrature, the two solid-torus
//! embeddings used to build linked spheres, and the reflection `ℛ`.
//!
//! Orientation convention: an oriented simplex `(v_0, ..., v_k)` with sign `s`
//! is outward oriented when `s * det(v_0, ..., v_k) > 0` (vertices as columns).
//! Tangent frames follow the same convention: `det(u, e_1, ..., e_k) = +1`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geom;
use crate::map::MapOracle;

/// One top-dimensional simplex of a [`SphereMesh`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simplex {
    pub vertices: Vec<usize>,
    pub sign: i8,
}

/// Oriented triangulation of the unit sphere `S^k ⊂ R^{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereMesh {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub simplices: Vec<Simplex>,
    pub refinement_level: usize,
}

/// Builds the boundary of the cross-polytope in `R^{k+1}` and refines it
/// `refinement` times by edge-midpoint subdivision, projecting new vertices
/// back to the unit sphere.
pub fn make_sphere_mesh(k: usize, refinement: usize) -> Result<SphereMesh> {
    if !(1..=3).contains(&k) {
        return Err(Error::UnsupportedDimension(k));
    }
    let d = k + 1;
    let mut vertices = Vec::with_capacity(2 * d);
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; d];
            v[i] = s;
            vertices.push(v);
        }
    }
    // Facet for each sign pattern: vertex 2i is +e_i, 2i+1 is -e_i.
    let mut cells: Vec<Vec<usize>> = (0..(1usize << d))
        .map(|mask| (0..d).map(|i| 2 * i + ((mask >> i) & 1)).collect())
        .collect();

    for _ in 0..refinement {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec<f64>>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let m = geom::normalized(&geom::add(&verts[a], &verts[b]));
                verts.push(m);
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(cells.len() << k);
        for c in &cells {
            match k {
                1 => {
                    let m = mid(c[0], c[1], &mut vertices);
                    next.push(vec![c[0], m]);
                    next.push(vec![m, c[1]]);
                }
                2 => {
                    let (a, b, cc) = (c[0], c[1], c[2]);
                    let ab = mid(a, b, &mut vertices);
                    let bc = mid(b, cc, &mut vertices);
                    let ca = mid(cc, a, &mut vertices);
                    next.push(vec![a, ab, ca]);
                    next.push(vec![ab, b, bc]);
                    next.push(vec![ca, bc, cc]);
                    next.push(vec![ab, bc, ca]);
                }
                _ => {
                    let (v0, v1, v2, v3) = (c[0], c[1], c[2], c[3]);
                    let m01 = mid(v0, v1, &mut vertices);
                    let m02 = mid(v0, v2, &mut vertices);
                    let m03 = mid(v0, v3, &mut vertices);
                    let m12 = mid(v1, v2, &mut vertices);
                    let m13 = mid(v1, v3, &mut vertices);
                    let m23 = mid(v2, v3, &mut vertices);
                    next.push(vec![v0, m01, m02, m03]);
                    next.push(vec![m01, v1, m12, m13]);
                    next.push(vec![m02, m12, v2, m23]);
                    next.push(vec![m03, m13, m23, v3]);
                    // inner octahedron split along the m02-m13 diagonal
                    next.push(vec![m01, m02, m03, m13]);
                    next.push(vec![m01, m02, m12, m13]);
                    next.push(vec![m02, m03, m13, m23]);
                    next.push(vec![m02, m12, m13, m23]);
                }
            }
        }
        cells = next;
    }

    let simplices = cells
        .into_iter()
        .map(|vs| {
            let cols: Vec<Vec<f64>> = vs.iter().map(|&i| vertices[i].clone()).collect();
            let sign = if geom::det_columns(&cols) > 0.0 { 1 } else { -1 };
            Simplex { vertices: vs, sign }
        })
        .collect();
    Ok(SphereMesh {
        dim: k,
        vertices,
        simplices,
        refinement_level: refinement,
    })
}

/// Signed measure of the radial projection of the simplex spanned by `vs`
/// (unit vectors) onto the sphere; the sign is that of `det(vs)`.
pub fn signed_solid_angle(vs: &[Vec<f64>]) -> f64 {
    match vs.len() {
        2 => {
            let (a, b) = (&vs[0], &vs[1]);
            (a[0] * b[1] - a[1] * b[0]).atan2(geom::dot(a, b))
        }
        3 => {
            let (a, b, c) = (&vs[0], &vs[1], &vs[2]);
            let det = geom::det_columns(vs);
            let denom = 1.0 + geom::dot(a, b) + geom::dot(b, c) + geom::dot(c, a);
            2.0 * det.atan2(denom)
        }
        4 => {
            // Solid angle of the cone over the flat tetrahedron T:
            //   Ω = ∫_T dist(0, aff T) / |x|^4 dV.
            let det = geom::det_columns(vs);
            if det == 0.0 {
                return 0.0;
            }
            let e: Vec<Vec<f64>> = (1..4).map(|i| geom::sub(&vs[i], &vs[0])).collect();
            let height = det.abs() / geom::gram_volume(&e);
            let rule = geom::gauss_legendre_unit(8);
            let corners = [vs[0].clone(), vs[1].clone(), vs[2].clone(), vs[3].clone()];
            det.signum() * tet_cone_integral(&corners, height, &rule)
        }
        _ => panic!("signed_solid_angle supports simplices in R^2..R^4"),
    }
}

/// ∫_T height / |x|^4 over a flat tetrahedron, splitting it 1→8 until the
/// edges are short enough for a collapsed Gauss rule to be accurate.
fn tet_cone_integral(t: &[Vec<f64>; 4], height: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let mut max_edge: f64 = 0.0;
    for a in 0..4 {
        for b in (a + 1)..4 {
            max_edge = max_edge.max(geom::distance(&t[a], &t[b]));
        }
    }
    if max_edge > 0.25 {
        let m = |a: usize, b: usize| geom::scale(&geom::add(&t[a], &t[b]), 0.5);
        let (m01, m02, m03, m12, m13, m23) = (m(0, 1), m(0, 2), m(0, 3), m(1, 2), m(1, 3), m(2, 3));
        let children = [
            [t[0].clone(), m01.clone(), m02.clone(), m03.clone()],
            [m01.clone(), t[1].clone(), m12.clone(), m13.clone()],
            [m02.clone(), m12.clone(), t[2].clone(), m23.clone()],
            [m03.clone(), m13.clone(), m23.clone(), t[3].clone()],
            [m01.clone(), m02.clone(), m03.clone(), m13.clone()],
            [m01.clone(), m02.clone(), m12.clone(), m13.clone()],
            [m02.clone(), m03.clone(), m13.clone(), m23.clone()],
            [m02, m12, m13, m23],
        ];
        return children.iter().map(|c| tet_cone_integral(c, height, rule)).sum();
    }
    let e: Vec<Vec<f64>> = (1..4).map(|i| geom::sub(&t[i], &t[0])).collect();
    let vol3 = geom::gram_volume(&e); // parallelepiped volume = 6 |T|
    let (x, w) = rule;
    let mut sum = 0.0;
    for (i, &u) in x.iter().enumerate() {
        for (j, &v) in x.iter().enumerate() {
            for (l, &s) in x.iter().enumerate() {
                let l1 = u;
                let l2 = v * (1.0 - u);
                let l3 = s * (1.0 - u) * (1.0 - v);
                let jac = (1.0 - u) * (1.0 - u) * (1.0 - v);
                let mut r2 = 0.0;
                for c in 0..4 {
                    let p = t[0][c] + l1 * e[0][c] + l2 * e[1][c] + l3 * e[2][c];
                    r2 += p * p;
                }
                sum += w[i] * w[j] * w[l] * jac / (r2 * r2);
            }
        }
    }
    sum * vol3 * height
}

impl SphereMesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn simplex_count(&self) -> usize {
        self.simplices.len()
    }

    pub fn simplex_vertices(&self, s: &Simplex) -> Vec<Vec<f64>> {
        s.vertices.iter().map(|&i| self.vertices[i].clone()).collect()
    }

    /// Σ sign · (signed solid angle). Equals `vol(S^k)` for an outward mesh.
    pub fn total_signed_solid_angle(&self) -> f64 {
        self.simplices
            .iter()
            .map(|s| s.sign as f64 * signed_solid_angle(&self.simplex_vertices(s)))
            .sum()
    }

    /// Sum of the flat k-volumes of the simplices.
    pub fn flat_volume(&self) -> f64 {
        self.simplices
            .iter()
            .map(|s| simplex_volume(&self.simplex_vertices(s)))
            .sum()
    }

    /// The same mesh with every simplex sign flipped.
    pub fn reversed(&self) -> SphereMesh {
        let mut m = self.clone();
        for s in &mut m.simplices {
            s.sign = -s.sign;
        }
        m
    }

    /// Checks unit-norm vertices, closed oriented manifold structure and the
    /// total signed solid angle.
    pub fn validate(&self) -> Result<()> {
        let k = self.dim;
        if !(1..=3).contains(&k) {
            return Err(Error::UnsupportedDimension(k));
        }
        for (i, v) in self.vertices.iter().enumerate() {
            if v.len() != k + 1 {
                return Err(Error::InvalidMesh(format!("vertex {i} has {} coordinates", v.len())));
            }
            if (geom::norm(v) - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidMesh(format!("vertex {i} is not a unit vector")));
            }
        }
        let mut faces: HashMap<Vec<usize>, Vec<i8>> = HashMap::new();
        for (si, s) in self.simplices.iter().enumerate() {
            if s.vertices.len() != k + 1 || !(s.sign == 1 || s.sign == -1) {
                return Err(Error::InvalidMesh(format!("simplex {si} is malformed")));
            }
            if s.vertices.iter().any(|&v| v >= self.vertices.len()) {
                return Err(Error::InvalidMesh(format!("simplex {si} has an out-of-range index")));
            }
            for drop in 0..=k {
                let face: Vec<usize> = s
                    .vertices
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != drop)
                    .map(|(_, &v)| v)
                    .collect();
                let (sorted, parity) = sort_with_parity(&face);
                let induced = s.sign * if drop % 2 == 0 { 1 } else { -1 } * parity;
                faces.entry(sorted).or_default().push(induced);
            }
        }
        for (face, signs) in &faces {
            if signs.len() != 2 || signs[0] + signs[1] != 0 {
                return Err(Error::InvalidMesh(format!(
                    "face {face:?} has induced orientations {signs:?}"
                )));
            }
        }
        let total = self.total_signed_solid_angle();
        let want = geom::sphere_volume(k);
        if (total - want).abs() > 1e-6 {
            return Err(Error::InvalidMesh(format!(
                "total signed solid angle {total} differs from {want}"
            )));
        }
        Ok(())
    }

    /// Quadrature with one node per simplex: the projected centroid, weighted
    /// by the exact spherical measure of the simplex.
    pub fn quadrature(&self) -> SphereQuadrature {
        let mut nodes = Vec::with_capacity(self.simplices.len());
        let mut weights = Vec::with_capacity(self.simplices.len());
        let mut frames = Vec::with_capacity(self.simplices.len());
        for s in &self.simplices {
            let vs = self.simplex_vertices(s);
            let mut c = vec![0.0; self.dim + 1];
            for v in &vs {
                for (ci, vi) in c.iter_mut().zip(v) {
                    *ci += vi;
                }
            }
            let u = geom::normalized(&c);
            frames.push(geom::tangent_frame(&u));
            nodes.push(u);
            weights.push(signed_solid_angle(&vs).abs());
        }
        SphereQuadrature {
            dim: self.dim,
            nodes,
            weights,
            frames,
        }
    }

    /// Text serialization: `k V S`, then V vertex lines, then S lines of
    /// `k + 1` indices followed by the sign.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.dim, self.vertices.len(), self.simplices.len());
        for v in &self.vertices {
            let line: Vec<String> = v.iter().map(|x| format!("{x:.17e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        for s in &self.simplices {
            let mut line: Vec<String> = s.vertices.iter().map(|i| i.to_string()).collect();
            line.push(s.sign.to_string());
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Parses the text format and validates every mesh invariant.
    pub fn from_text(text: &str) -> Result<SphereMesh> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty mesh file".into()))?;
        let h: Vec<usize> = parse_fields(header)?;
        if h.len() != 3 {
            return Err(Error::Parse(format!("header must be `k V S`, got `{header}`")));
        }
        let (k, nv, ns) = (h[0], h[1], h[2]);
        if !(1..=3).contains(&k) {
            return Err(Error::UnsupportedDimension(k));
        }
        let mut vertices = Vec::with_capacity(nv);
        for i in 0..nv {
            let l = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing vertex line {i}")))?;
            let v: Vec<f64> = parse_fields(l)?;
            if v.len() != k + 1 {
                return Err(Error::Parse(format!("vertex line {i} needs {} floats", k + 1)));
            }
            vertices.push(v);
        }
        let mut simplices = Vec::with_capacity(ns);
        for i in 0..ns {
            let l = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing simplex line {i}")))?;
            let f: Vec<i64> = parse_fields(l)?;
            if f.len() != k + 2 {
                return Err(Error::Parse(format!("simplex line {i} needs {} integers", k + 2)));
            }
            let sign = f[k + 1];
            if sign != 1 && sign != -1 {
                return Err(Error::Parse(format!("simplex line {i} has sign {sign}")));
            }
            if f[..=k].iter().any(|&x| x < 0) {
                return Err(Error::Parse(format!("simplex line {i} has a negative index")));
            }
            simplices.push(Simplex {
                vertices: f[..=k].iter().map(|&x| x as usize).collect(),
                sign: sign as i8,
            });
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing lines after the last simplex".into()));
        }
        let mesh = SphereMesh {
            dim: k,
            vertices,
            simplices,
            refinement_level: 0,
        };
        mesh.validate()?;
        Ok(mesh)
    }
}

fn parse_fields<T: std::str::FromStr>(line: &str) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| Error::Parse(format!("bad token `{t}`"))))
        .collect()
}

fn sort_with_parity(v: &[usize]) -> (Vec<usize>, i8) {
    let mut s = v.to_vec();
    let mut parity = 1i8;
    // insertion sort, counting transpositions
    for i in 1..s.len() {
        let mut j = i;
        while j > 0 && s[j - 1] > s[j] {
            s.swap(j - 1, j);
            parity = -parity;
            j -= 1;
        }
    }
    (s, parity)
}

/// Flat k-volume of the simplex with the given vertices.
pub fn simplex_volume(vs: &[Vec<f64>]) -> f64 {
    let edges: Vec<Vec<f64>> = vs[1..].iter().map(|v| geom::sub(v, &vs[0])).collect();
    geom::gram_volume(&edges) / geom::factorial(edges.len())
}

/// Nodes, positive weights and oriented tangent frames on `S^k`.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub dim: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub frames: Vec<Vec<Vec<f64>>>,
}

impl SphereQuadrature {
    /// `n` equally spaced nodes on `S^1` (the periodic trapezoidal rule).
    pub fn uniform_circle(n: usize) -> SphereQuadrature {
        let w = 2.0 * std::f64::consts::PI / n as f64;
        let nodes: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let a = w * i as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
        let frames = nodes.iter().map(|u| geom::tangent_frame(u)).collect();
        SphereQuadrature {
            dim: 1,
            nodes,
            weights: vec![w; n],
            frames,
        }
    }

    /// Quadrature for `S^k` sized by `resolution`: `resolution` uniform nodes
    /// on the circle, otherwise the centroid rule of a mesh at that refinement.
    pub fn for_sphere(k: usize, resolution: usize) -> Result<SphereQuadrature> {
        if k == 1 {
            Ok(SphereQuadrature::uniform_circle(resolution))
        } else {
            Ok(make_sphere_mesh(k, resolution)?.quadrature())
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Tensor-product quadrature on `S^k × S^l`; the orientation is that of the
/// concatenated frames, `S^k` block first.
#[derive(Debug, Clone)]
pub struct ProductGrid {
    pub first: SphereQuadrature,
    pub second: SphereQuadrature,
}

impl ProductGrid {
    pub fn new(first: SphereQuadrature, second: SphereQuadrature) -> ProductGrid {
        ProductGrid { first, second }
    }

    pub fn factor_dims(&self) -> (usize, usize) {
        (self.first.dim, self.second.dim)
    }

    pub fn len(&self) -> usize {
        self.first.len() * self.second.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.first.weights[i] * self.second.weights[j]
    }

    pub fn total_weight(&self) -> f64 {
        self.first.total_weight() * self.second.total_weight()
    }

    /// Concatenated tangent frame at node `(i, j)`, embedded in `R^{k+1} × R^{l+1}`.
    pub fn tangent_frame(&self, i: usize, j: usize) -> Vec<Vec<f64>> {
        let (k1, l1) = (self.first.dim + 1, self.second.dim + 1);
        let mut out = Vec::with_capacity(k1 + l1 - 2);
        for e in &self.first.frames[i] {
            let mut v = e.clone();
            v.extend(std::iter::repeat(0.0).take(l1));
            out.push(v);
        }
        for e in &self.second.frames[j] {
            let mut v = vec![0.0; k1];
            v.extend(e.iter().copied());
            out.push(v);
        }
        out
    }
}

/// Which construction produced an [`EmbeddedSphere`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingLabel {
    Iota1,
    Iota2,
    Custom,
}

/// A sphere mesh together with the images of its vertices in `R^n`.
#[derive(Debug, Clone)]
pub struct EmbeddedSphere {
    pub base_mesh: SphereMesh,
    pub image_vertices: Vec<Vec<f64>>,
    pub label: EmbeddingLabel,
    pub parameter: Vec<f64>,
}

/// `[n/2]`, the dimension of the second linked sphere.
pub fn half_dim(n: usize) -> usize {
    n / 2
}

/// `ν = n − 1 − [n/2]`, the dimension of the first linked sphere.
pub fn nu_dim(n: usize) -> usize {
    n - 1 - n / 2
}

fn check_ball_point(p: &[f64], len: usize) -> Result<()> {
    if p.len() != len {
        return Err(Error::DimensionMismatch(format!(
            "parameter point has {} coordinates, expected {len}",
            p.len()
        )));
    }
    let r = geom::norm(p);
    if r > 1.0 + 1e-12 {
        return Err(Error::OutOfBall(r));
    }
    Ok(())
}

/// First solid torus: `x ∈ B^{[n/2]+1}`, `σ ∈ S^ν`.
pub fn iota1_point(n: usize, x: &[f64], sigma: &[f64]) -> Vec<f64> {
    let nu = nu_dim(n);
    let radius = (5.0 + x[0]) / 10.0;
    let mut out = Vec::with_capacity(n);
    out.extend(sigma[..nu].iter().map(|s| radius * s));
    out.push(radius * sigma[nu] - 0.25);
    out.extend(x[1..].iter().map(|xi| xi / 10.0));
    out
}

/// Second solid torus: `y ∈ B^{ν+1}`, `ρ ∈ S^{[n/2]}`.
pub fn iota2_point(n: usize, y: &[f64], rho: &[f64]) -> Vec<f64> {
    let nu = nu_dim(n);
    let radius = (5.0 + y[nu]) / 10.0;
    let mut out = Vec::with_capacity(n);
    out.extend(y[..nu].iter().map(|yi| yi / 10.0));
    out.push(radius * rho[0] + 0.25);
    out.extend(rho[1..].iter().map(|r| radius * r));
    out
}

/// `σ ↦ ι₁(x, σ)` as a map on `S^ν`.
pub fn iota1_oracle(n: usize, x: &[f64]) -> Result<MapOracle> {
    if n < 4 {
        return Err(Error::DimensionMismatch(format!("n = {n} < 4")));
    }
    check_ball_point(x, half_dim(n) + 1)?;
    let x = x.to_vec();
    Ok(MapOracle::new(nu_dim(n) + 1, n, move |s| iota1_point(n, &x, s)))
}

/// `ρ ↦ ι₂(y, ρ)` as a map on `S^{[n/2]}`.
pub fn iota2_oracle(n: usize, y: &[f64]) -> Result<MapOracle> {
    if n < 4 {
        return Err(Error::DimensionMismatch(format!("n = {n} < 4")));
    }
    check_ball_point(y, nu_dim(n) + 1)?;
    let y = y.to_vec();
    Ok(MapOracle::new(half_dim(n) + 1, n, move |r| iota2_point(n, &y, r)))
}

pub fn embed_iota1(n: usize, x: &[f64], mesh: &SphereMesh) -> Result<EmbeddedSphere> {
    if n < 4 {
        return Err(Error::DimensionMismatch(format!("n = {n} < 4")));
    }
    if mesh.dim != nu_dim(n) {
        return Err(Error::DimensionMismatch(format!(
            "mesh dimension {} but ι₁ needs S^{}",
            mesh.dim,
            nu_dim(n)
        )));
    }
    check_ball_point(x, half_dim(n) + 1)?;
    Ok(EmbeddedSphere {
        image_vertices: mesh.vertices.iter().map(|s| iota1_point(n, x, s)).collect(),
        base_mesh: mesh.clone(),
        label: EmbeddingLabel::Iota1,
        parameter: x.to_vec(),
    })
}

pub fn embed_iota2(n: usize, y: &[f64], mesh: &SphereMesh) -> Result<EmbeddedSphere> {
    if n < 4 {
        return Err(Error::DimensionMismatch(format!("n = {n} < 4")));
    }
    if mesh.dim != half_dim(n) {
        return Err(Error::DimensionMismatch(format!(
            "mesh dimension {} but ι₂ needs S^{}",
            mesh.dim,
            half_dim(n)
        )));
    }
    check_ball_point(y, nu_dim(n) + 1)?;
    Ok(EmbeddedSphere {
        image_vertices: mesh.vertices.iter().map(|r| iota2_point(n, y, r)).collect(),
        base_mesh: mesh.clone(),
        label: EmbeddingLabel::Iota2,
        parameter: y.to_vec(),
    })
}

/// Vertex images of `mesh` under an arbitrary map.
pub fn embed_custom(mesh: &SphereMesh, map: &MapOracle) -> Result<EmbeddedSphere> {
    if map.dim_in() != mesh.dim + 1 {
        return Err(Error::DimensionMismatch(format!(
            "map takes R^{} but mesh lives in R^{}",
            map.dim_in(),
            mesh.dim + 1
        )));
    }
    Ok(EmbeddedSphere {
        image_vertices: mesh.vertices.iter().map(|v| map.eval(v)).collect(),
        base_mesh: mesh.clone(),
        label: EmbeddingLabel::Custom,
        parameter: Vec::new(),
    })
}

/// `ℛ` applied pointwise: negates the last coordinate.
pub fn reflect_last(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|p| {
            let mut q = p.clone();
            if let Some(last) = q.last_mut() {
                *last = -*last;
            }
            q
        })
        .collect()
}

/// Discrete `ℋ^k` of the embedded sphere: sum of image simplex volumes.
pub fn surface_area(sphere: &EmbeddedSphere) -> f64 {
    sphere
        .base_mesh
        .simplices
        .iter()
        .map(|s| {
            let vs: Vec<Vec<f64>> = s
                .vertices
                .iter()
                .map(|&i| sphere.image_vertices[i].clone())
                .collect();
            simplex_volume(&vs)
        })
        .sum()
}

/// Point location on a sphere mesh, used for piecewise-linear interpolation of
/// vertex data.
#[derive(Debug, Clone)]
pub struct MeshLocator {
    mesh: SphereMesh,
    cell: f64,
    buckets: HashMap<Vec<i32>, Vec<usize>>,
    /// Row-major inverse of each simplex's vertex matrix (None if singular).
    inverses: Vec<Option<Vec<f64>>>,
}

impl MeshLocator {
    pub fn new(mesh: &SphereMesh) -> MeshLocator {
        let mut max_edge: f64 = 0.0;
        for s in &mesh.simplices {
            for a in 0..s.vertices.len() {
                for b in (a + 1)..s.vertices.len() {
                    max_edge = max_edge
                        .max(geom::distance(&mesh.vertices[s.vertices[a]], &mesh.vertices[s.vertices[b]]));
                }
            }
        }
        let cell = max_edge.max(1e-3);
        // a unit vector in a simplex's cone lies within this of the flat simplex
        let margin = 0.5 * max_edge * max_edge + 1e-9;
        let d = mesh.dim + 1;
        let mut buckets: HashMap<Vec<i32>, Vec<usize>> = HashMap::new();
        for (si, s) in mesh.simplices.iter().enumerate() {
            let mut lo = vec![f64::INFINITY; d];
            let mut hi = vec![f64::NEG_INFINITY; d];
            for &v in &s.vertices {
                for c in 0..d {
                    lo[c] = lo[c].min(mesh.vertices[v][c]);
                    hi[c] = hi[c].max(mesh.vertices[v][c]);
                }
            }
            let lo_i: Vec<i32> = lo.iter().map(|x| ((x - margin) / cell).floor() as i32).collect();
            let hi_i: Vec<i32> = hi.iter().map(|x| ((x + margin) / cell).floor() as i32).collect();
            let mut idx = lo_i.clone();
            loop {
                buckets.entry(idx.clone()).or_default().push(si);
                let mut c = 0;
                loop {
                    if c == d {
                        break;
                    }
                    idx[c] += 1;
                    if idx[c] <= hi_i[c] {
                        break;
                    }
                    idx[c] = lo_i[c];
                    c += 1;
                }
                if c == d {
                    break;
                }
            }
        }
        let inverses = mesh
            .simplices
            .iter()
            .map(|s| {
                let m = nalgebra::DMatrix::from_fn(d, d, |r, c| mesh.vertices[s.vertices[c]][r]);
                m.try_inverse().map(|inv| {
                    let mut flat = Vec::with_capacity(d * d);
                    for r in 0..d {
                        for c in 0..d {
                            flat.push(inv[(r, c)]);
                        }
                    }
                    flat
                })
            })
            .collect();
        MeshLocator {
            mesh: mesh.clone(),
            cell,
            buckets,
            inverses,
        }
    }

    pub fn mesh(&self) -> &SphereMesh {
        &self.mesh
    }

    fn cone_coordinates(&self, si: usize, u: &[f64], out: &mut [f64]) -> bool {
        let Some(inv) = &self.inverses[si] else {
            return false;
        };
        let d = u.len();
        for r in 0..d {
            out[r] = (0..d).map(|c| inv[r * d + c] * u[c]).sum();
        }
        true
    }

    /// Simplex whose cone contains `u`, with normalized barycentric weights.
    pub fn locate(&self, u: &[f64]) -> (usize, Vec<f64>) {
        let d = u.len();
        let un = geom::normalized(u);
        let key: Vec<i32> = un.iter().map(|x| (x / self.cell).floor() as i32).collect();
        let mut l = [0.0; 8];
        let mut best: Option<(usize, [f64; 8], f64)> = None;
        let mut consider = |si: usize, best: &mut Option<(usize, [f64; 8], f64)>| -> bool {
            if !self.cone_coordinates(si, u, &mut l[..d]) {
                return false;
            }
            let m = l[..d].iter().cloned().fold(f64::INFINITY, f64::min);
            let sum: f64 = l[..d].iter().sum();
            if sum > 0.0 && best.as_ref().map_or(true, |b| m > b.2) {
                *best = Some((si, l, m));
            }
            sum > 0.0 && m >= 0.0
        };
        let mut found = false;
        if let Some(cands) = self.buckets.get(&key) {
            for &si in cands {
                if consider(si, &mut best) {
                    found = true;
                    break;
                }
            }
        }
        if !found && best.as_ref().map_or(true, |b| b.2 < -1e-12) {
            for si in 0..self.mesh.simplices.len() {
                if consider(si, &mut best) {
                    break;
                }
            }
        }
        let (si, l, _) = best.expect("mesh has at least one simplex");
        let sum: f64 = l[..d].iter().sum();
        (si, l[..d].iter().map(|x| x / sum).collect())
    }

    /// Piecewise-linear (gnomonic barycentric) interpolation of vertex values.
    pub fn interpolate(&self, values: &[Vec<f64>], u: &[f64]) -> Vec<f64> {
        let (si, bary) = self.locate(u);
        let s = &self.mesh.simplices[si];
        let m = values[s.vertices[0]].len();
        let mut out = vec![0.0; m];
        for (b, &vi) in bary.iter().zip(&s.vertices) {
            for c in 0..m {
                out[c] += b * values[vi][c];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn base_meshes() {
        let c = make_sphere_mesh(1, 0).unwrap();
        assert_eq!((c.vertex_count(), c.simplex_count()), (4, 4));
        assert!((c.total_signed_solid_angle() - 2.0 * PI).abs() < 1e-12);
        let o = make_sphere_mesh(2, 0).unwrap();
        assert_eq!((o.vertex_count(), o.simplex_count()), (6, 8));
        assert!((o.total_signed_solid_angle() - 4.0 * PI).abs() < 1e-12);
        let t = make_sphere_mesh(3, 0).unwrap();
        assert_eq!((t.vertex_count(), t.simplex_count()), (8, 16));
        assert!((t.total_signed_solid_angle() - 2.0 * PI * PI).abs() < 1e-8);
    }

    #[test]
    fn refined_meshes_validate() {
        for (k, r) in [(1, 0), (1, 5), (2, 0), (2, 3), (3, 0), (3, 1), (3, 2)] {
            let m = make_sphere_mesh(k, r).unwrap();
            m.validate().unwrap_or_else(|e| panic!("k={k} r={r}: {e}"));
        }
    }

    #[test]
    fn octahedron_refinement_three_area() {
        // 8·4³ triangles. The projected (spherical) triangles tile S² exactly;
        // the flat chords lose about 1.3% at this level and 0.3% one level up.
        let m = make_sphere_mesh(2, 3).unwrap();
        assert_eq!(m.simplex_count(), 512);
        let spherical: f64 = m.quadrature().total_weight();
        assert!((spherical - 4.0 * PI).abs() / (4.0 * PI) < 0.01, "{spherical}");
        let flat = m.flat_volume();
        assert!(flat < 4.0 * PI && (flat - 4.0 * PI).abs() / (4.0 * PI) < 0.015, "{flat}");
        let flat4 = make_sphere_mesh(2, 4).unwrap().flat_volume();
        assert!((flat4 - 4.0 * PI).abs() / (4.0 * PI) < 0.005, "{flat4}");
    }

    #[test]
    fn unsupported_dimension() {
        assert_eq!(make_sphere_mesh(0, 1), Err(Error::UnsupportedDimension(0)));
        assert_eq!(make_sphere_mesh(4, 0), Err(Error::UnsupportedDimension(4)));
    }

    #[test]
    fn reversed_mesh_negates_solid_angle_and_fails_validation() {
        let m = make_sphere_mesh(2, 2).unwrap();
        let r = m.reversed();
        assert!((r.total_signed_solid_angle() + m.total_signed_solid_angle()).abs() < 1e-10);
        assert!(r.validate().is_err());
    }

    #[test]
    fn broken_orientation_is_detected() {
        let mut m = make_sphere_mesh(2, 1).unwrap();
        m.simplices[3].sign = -m.simplices[3].sign;
        assert!(matches!(m.validate(), Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn quadrature_weights_sum_to_sphere_volume() {
        for (k, r) in [(1, 4), (2, 3), (3, 1)] {
            let q = make_sphere_mesh(k, r).unwrap().quadrature();
            assert!(q.weights.iter().all(|&w| w > 0.0));
            assert!((q.total_weight() - geom::sphere_volume(k)).abs() < 1e-8);
        }
        let g = ProductGrid::new(
            SphereQuadrature::uniform_circle(32),
            make_sphere_mesh(2, 2).unwrap().quadrature(),
        );
        assert!((g.total_weight() - 2.0 * PI * 4.0 * PI).abs() < 1e-8);
        assert_eq!(g.tangent_frame(3, 7).len(), 3);
    }

    #[test]
    fn iota1_examples() {
        let s = make_sphere_mesh(1, 0).unwrap();
        assert_eq!(iota1_point(4, &[0.0, 0.0, 0.0], &[1.0, 0.0]), vec![0.5, -0.25, 0.0, 0.0]);
        assert_eq!(iota1_point(4, &[0.0, 0.0, 0.0], &[0.0, 1.0]), vec![0.0, 0.25, 0.0, 0.0]);
        let p = iota1_point(4, &[1.0, 0.0, 0.0], &[1.0, 0.0]);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] + 0.25).abs() < 1e-15);
        assert!(embed_iota1(4, &[0.0, 0.0], &s).is_err());
        assert!(matches!(embed_iota1(4, &[1.0, 1.0, 0.0], &s), Err(Error::OutOfBall(_))));
        let o = make_sphere_mesh(2, 0).unwrap();
        assert!(matches!(embed_iota1(4, &[0.0; 3], &o), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn iota2_examples() {
        assert_eq!(iota2_point(4, &[0.0, 0.0], &[1.0, 0.0, 0.0]), vec![0.0, 0.75, 0.0, 0.0]);
        assert_eq!(iota2_point(4, &[0.0, 0.0], &[0.0, 0.0, 1.0]), vec![0.0, 0.25, 0.0, 0.5]);
        let p = iota2_point(4, &[0.0, 1.0], &[0.0, 1.0, 0.0]);
        assert!((p[1] - 0.25).abs() < 1e-15 && (p[2] - 0.6).abs() < 1e-15 && p[3] == 0.0);
    }

    #[test]
    fn reflection_examples() {
        assert_eq!(reflect_last(&[vec![1.0, 2.0, 3.0]]), vec![vec![1.0, 2.0, -3.0]]);
        // ℛ preserves the ι₂ sphere with y = 0 as a set.
        let mesh = make_sphere_mesh(2, 2).unwrap();
        let e = embed_iota2(4, &[0.0, 0.0], &mesh).unwrap();
        let r = reflect_last(&e.image_vertices);
        for p in &r {
            let nearest = e
                .image_vertices
                .iter()
                .map(|q| geom::distance(p, q))
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-12);
        }
    }

    #[test]
    fn surface_areas() {
        let m = make_sphere_mesh(2, 4).unwrap();
        let id = embed_custom(&m, &MapOracle::identity(3)).unwrap();
        let a = surface_area(&id);
        assert!((a - 4.0 * PI).abs() / (4.0 * PI) < 0.005, "{a}");
        let c = make_sphere_mesh(1, 6).unwrap();
        let e = embed_iota1(4, &[0.0; 3], &c).unwrap();
        let l = surface_area(&e);
        assert!((l - PI).abs() / PI < 0.001, "{l}");
        let flat = embed_custom(&m, &MapOracle::new(3, 4, |_| vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(surface_area(&flat), 0.0);
    }

    #[test]
    fn mesh_text_round_trip_and_rejects_garbage() {
        let m = make_sphere_mesh(2, 1).unwrap();
        let back = SphereMesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.simplices, m.simplices);
        assert!(matches!(SphereMesh::from_text(""), Err(Error::Parse(_))));
        assert!(matches!(SphereMesh::from_text("2 3 1\n1 0 0\n0 1 0\n0 0 1\n0 1 2 1\n"), Err(Error::InvalidMesh(_))));
        let flipped = m.reversed().to_text();
        assert!(SphereMesh::from_text(&flipped).is_err());
    }

    #[test]
    fn locator_interpolates_linear_data_on_vertices() {
        let m = make_sphere_mesh(2, 3).unwrap();
        let loc = MeshLocator::new(&m);
        let values: Vec<Vec<f64>> = m.vertices.iter().map(|v| vec![v[0] + 2.0 * v[2]]).collect();
        for v in m.vertices.iter().take(20) {
            let got = loc.interpolate(&values, v);
            assert!((got[0] - (v[0] + 2.0 * v[2])).abs() < 1e-10);
        }
        let u = geom::normalized(&[0.3, -0.2, 0.9]);
        let (si, bary) = loc.locate(&u);
        assert!(bary.iter().all(|&b| b >= -1e-12));
        assert!(si < m.simplex_count());
    }
}
