//! The mollifier extension `Ef(x, t) = (f ∗ φ_t)(x)` to the upper half-space,
//! its trace and `L^q` behaviour, the small-image homotopy on spheres, the
//! area-formula volume of a homotopy image, and the determinant inequality
//! `|det(A + B)| ≤ 2^{n−1} Λ(n) (|A|^n + |B|^n)`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::degree::BoxDomain;
use crate::error::{Error, Result};
use crate::geom;
use crate::map::MapOracle;
use crate::mesh::{EmbeddedSphere, MeshLocator, SphereMesh};
use crate::sobolev::GridFunction;

type Profile = dyn Fn(f64) -> f64 + Send + Sync;

/// Midpoint nodes per axis of the discrete convolution kernel.
pub const KERNEL_NODES: usize = 16;

/// A radial bump `φ(y) = c · ρ(|y|)` supported in the closed unit ball of `R^n`.
#[derive(Clone)]
pub struct Mollifier {
    pub dim: usize,
    profile: Arc<Profile>,
    pub normalization: f64,
    pub symmetric: bool,
    kernel: Vec<(Vec<f64>, f64)>,
}

impl std::fmt::Debug for Mollifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mollifier")
            .field("dim", &self.dim)
            .field("normalization", &self.normalization)
            .field("symmetric", &self.symmetric)
            .field("kernel_nodes", &self.kernel.len())
            .finish()
    }
}

/// `exp(−1 / (1 − r²))` on `[0, 1)`, zero from 1 on.
pub fn standard_profile(r: f64) -> f64 {
    if r < 1.0 {
        (-1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

/// `∫_0^1 ρ(r) r^{n−1} dr` by composite Simpson.
fn radial_moment(profile: &Profile, n: usize) -> f64 {
    let m = 4000;
    let h = 1.0 / m as f64;
    let g = |r: f64| profile(r) * r.powi(n as i32 - 1);
    let mut s = g(0.0) + g(1.0);
    for i in 1..m {
        s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

impl Mollifier {
    /// The standard bump in dimension `n`.
    pub fn standard(n: usize) -> Mollifier {
        Mollifier::new(n, standard_profile, true)
    }

    /// A mollifier from a radial profile on `[0, 1]`.
    pub fn new<F>(n: usize, profile: F, symmetric: bool) -> Mollifier
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        assert!(n >= 1);
        let profile: Arc<Profile> = Arc::new(profile);
        let normalization = 1.0 / (geom::sphere_volume(n - 1) * radial_moment(&*profile, n));
        // midpoint rule on [−1, 1]^n, renormalized so the discrete weights sum to 1
        let h = 2.0 / KERNEL_NODES as f64;
        let mut kernel = Vec::new();
        for flat in 0..KERNEL_NODES.pow(n as u32) {
            let mut rem = flat;
            let y: Vec<f64> = (0..n)
                .map(|_| {
                    let j = rem % KERNEL_NODES;
                    rem /= KERNEL_NODES;
                    -1.0 + (j as f64 + 0.5) * h
                })
                .collect();
            let w = normalization * profile(geom::norm(&y)) * h.powi(n as i32);
            if w > 0.0 {
                kernel.push((y, w));
            }
        }
        let total: f64 = kernel.iter().map(|k| k.1).sum();
        kernel.iter_mut().for_each(|k| k.1 /= total);
        Mollifier {
            dim: n,
            profile,
            normalization,
            symmetric,
            kernel,
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.normalization * (self.profile)(geom::norm(y))
    }

    pub fn profile(&self, r: f64) -> f64 {
        (self.profile)(r)
    }

    pub fn sup(&self) -> f64 {
        (0..=1000).map(|i| self.eval(&[i as f64 / 1000.0])).fold(0.0, f64::max)
    }

    /// Nodes and weights of the discrete convolution.
    pub fn kernel(&self) -> &[(Vec<f64>, f64)] {
        &self.kernel
    }
}

/// `Ef` on a window of `f`'s lattice at several heights.
#[derive(Debug, Clone)]
pub struct HalfSpaceFunction {
    pub window: BoxDomain,
    pub t_levels: Vec<f64>,
    pub levels: Vec<GridFunction>,
}

/// `Ef(x, t) = Σ_k w_k f(x − t y_k)`, with `f` interpolated multilinearly and
/// extended by zero outside its box.
pub fn convolve_at(f: &GridFunction, phi: &Mollifier, x: &[f64], t: f64) -> Vec<f64> {
    let mut out = vec![0.0; f.dim_out];
    let mut z = vec![0.0; x.len()];
    for (y, w) in phi.kernel() {
        for a in 0..x.len() {
            z[a] = x[a] - t * y[a];
        }
        f.interpolate_add(&z, *w, &mut out);
    }
    out
}

/// Extension on the window `box ⊖ t_max`, sampled on the lattice nodes of `f`
/// inside the window.
pub fn extend(f: &GridFunction, phi: &Mollifier, t_levels: &[f64]) -> Result<HalfSpaceFunction> {
    let n = f.dim_in();
    if phi.dim != n {
        return Err(Error::DimensionMismatch(format!("mollifier on R^{} for a grid on R^{n}", phi.dim)));
    }
    if t_levels.is_empty() || t_levels.iter().any(|&t| !(t > 0.0 && t <= 1.0)) || t_levels.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("t_levels must increase within (0, 1]".into()));
    }
    let t_max = *t_levels.last().unwrap();
    let mut first = vec![0usize; n];
    let mut res = vec![0usize; n];
    for a in 0..n {
        let h = f.spacing(a);
        let i0 = (t_max / h - 1e-9).ceil().max(0.0) as usize;
        let i1 = ((f.sides[a] - t_max) / h + 1e-9).floor() as i64;
        if i1 < i0 as i64 + 2 {
            return Err(Error::WindowEmpty(t_max));
        }
        first[a] = i0;
        res[a] = (i1 as usize) - i0 + 1;
    }
    let corner: Vec<f64> = (0..n).map(|a| f.corner[a] + first[a] as f64 * f.spacing(a)).collect();
    let sides: Vec<f64> = (0..n).map(|a| (res[a] - 1) as f64 * f.spacing(a)).collect();
    let window = BoxDomain {
        lo: corner.clone(),
        hi: corner.iter().zip(&sides).map(|(c, s)| c + s).collect(),
    };
    let count: usize = res.iter().product();
    let mut levels = Vec::with_capacity(t_levels.len());
    for &t in t_levels {
        let shell = GridFunction {
            corner: corner.clone(),
            sides: sides.clone(),
            resolution: res.clone(),
            dim_out: f.dim_out,
            values: Vec::new(),
        };
        let values: Vec<f64> = (0..count)
            .into_par_iter()
            .flat_map_iter(|i| convolve_at(f, phi, &shell.node_point(i), t))
            .collect();
        levels.push(GridFunction::new(corner.clone(), sides.clone(), res.clone(), f.dim_out, values)?);
    }
    Ok(HalfSpaceFunction {
        window,
        t_levels: t_levels.to_vec(),
        levels,
    })
}

/// `‖f‖_{L^p}` with trapezoidal weights over the whole box.
pub fn lp_norm(f: &GridFunction, p: f64) -> f64 {
    let w = f.weights(&crate::sobolev::Region::Whole).expect("whole box is never empty");
    (0..f.node_count())
        .map(|i| w[i] * geom::norm(f.value(i)).powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// `‖Ef(·, t) − f‖_{L^p}` over the box, with `f` extended by zero.
pub fn trace_error(f: &GridFunction, phi: &Mollifier, t: f64, p: f64) -> f64 {
    let w = f.weights(&crate::sobolev::Region::Whole).expect("whole box is never empty");
    (0..f.node_count())
        .into_par_iter()
        .map(|i| {
            let e = convolve_at(f, phi, &f.node_point(i), t);
            w[i] * geom::distance(&e, f.value(i)).powf(p)
        })
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Settings of [`verify_extension_bounds`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionConfig {
    /// Geometric t-levels between `t_min` and `t_max`, both relative to the
    /// largest side of each function's box.
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
    /// x-lattice spacing at level t is `max(h, t / points_per_t)`.
    pub points_per_t: f64,
    pub gradient_samples: usize,
    pub seed: u64,
}

impl Default for ExtensionConfig {
    fn default() -> Self {
        ExtensionConfig {
            t_min: 1e-3,
            t_max: 8.0,
            t_count: 28,
            points_per_t: 8.0,
            gradient_samples: 500,
            seed: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionReport {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    /// `‖Ef‖_{L^q(R^{n+1}_+)} / ‖f‖_{L^p(R^n)}` per function.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// `max / min < 2`.
    pub stable: bool,
    /// Smallest `C` with `|∇(Ef)(x, t)| ≤ C ⨍_{B(x,t)} |∇f|` on the samples.
    pub gradient_constant: f64,
    /// `√2 · sup φ · |B^n|`, the constant the convolution structure gives.
    pub gradient_bound: f64,
    pub gradient_samples: usize,
}

/// `q = (n + 1) p / n`.
pub fn extension_exponent(n: usize, p: f64) -> f64 {
    (n as f64 + 1.0) * p / n as f64
}

/// `‖Ef‖^q_{L^q}` over the half-space for `f` extended by zero.
fn extension_lq_pow(f: &GridFunction, phi: &Mollifier, q: f64, cfg: &ExtensionConfig) -> f64 {
    let n = f.dim_in();
    let size = f.sides.iter().cloned().fold(0.0, f64::max);
    let h = (0..n).map(|a| f.spacing(a)).fold(0.0, f64::max);
    let ratio = (cfg.t_max / cfg.t_min).powf(1.0 / (cfg.t_count - 1) as f64);
    let mut ts = vec![0.0];
    ts.extend((0..cfg.t_count).map(|i| size * cfg.t_min * ratio.powi(i as i32)));
    let slab = |t: f64| -> f64 {
        if t == 0.0 {
            return lp_norm(f, q).powf(q);
        }
        let s = h.max(t / cfg.points_per_t);
        let m: Vec<usize> = (0..n).map(|a| ((f.sides[a] + 2.0 * t) / s).ceil() as usize + 1).collect();
        let count: usize = m.iter().product();
        let cell = s.powi(n as i32);
        (0..count)
            .into_par_iter()
            .map(|flat| {
                let mut rem = flat;
                let mut x = vec![0.0; n];
                for a in (0..n).rev() {
                    let j = rem % m[a];
                    rem /= m[a];
                    // lattice centred on the padded box
                    let span = (m[a] - 1) as f64 * s;
                    let mid = f.corner[a] + f.sides[a] / 2.0;
                    x[a] = mid - span / 2.0 + j as f64 * s;
                }
                cell * geom::norm(&convolve_at(f, phi, &x, t)).powf(q)
            })
            .sum()
    };
    let vals: Vec<f64> = ts.iter().map(|&t| slab(t)).collect();
    ts.windows(2).zip(vals.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

/// Empirical constants of the `L^p → L^q` bound and of the pointwise gradient
/// bound for a set of compactly supported test functions.
pub fn verify_extension_bounds(
    f_set: &[GridFunction],
    phi: &Mollifier,
    p: f64,
    cfg: &ExtensionConfig,
) -> Result<ExtensionReport> {
    if !(p > 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} must exceed 1")));
    }
    if f_set.is_empty() {
        return Err(Error::InvalidArgument("no test functions".into()));
    }
    let n = phi.dim;
    if f_set.iter().any(|f| f.dim_in() != n) {
        return Err(Error::DimensionMismatch("test functions must live on R^n".into()));
    }
    let q = extension_exponent(n, p);
    let ratios: Vec<f64> = f_set
        .iter()
        .map(|f| extension_lq_pow(f, phi, q, cfg).powf(1.0 / q) / lp_norm(f, p))
        .collect();
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let min_ratio = ratios.iter().cloned().fold(f64::INFINITY, f64::min);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut gradient_constant: f64 = 0.0;
    let mut used = 0;
    let per_fn = cfg.gradient_samples.div_ceil(f_set.len());
    for f in f_set {
        let grad: Vec<f64> = (0..f.node_count()).map(|i| geom::hs_norm(&f.gradient(i))).collect();
        let h = (0..n).map(|a| f.spacing(a)).fold(0.0, f64::max);
        let size = f.sides.iter().cloned().fold(0.0, f64::max);
        for _ in 0..per_fn {
            let x: Vec<f64> = (0..n).map(|a| rng.gen_range(f.corner[a]..f.corner[a] + f.sides[a])).collect();
            let t = rng.gen_range((4.0 * h)..(0.5 * size));
            // average of |∇f| over the lattice nodes in B(x, t), zero outside the box
            let mut sum = 0.0;
            let mut count = 0usize;
            let lo: Vec<i64> = (0..n).map(|a| ((x[a] - t - f.corner[a]) / f.spacing(a)).ceil() as i64).collect();
            let hi: Vec<i64> = (0..n).map(|a| ((x[a] + t - f.corner[a]) / f.spacing(a)).floor() as i64).collect();
            let mut idx = lo.clone();
            'walk: loop {
                let pt: Vec<f64> = (0..n).map(|a| f.corner[a] + idx[a] as f64 * f.spacing(a)).collect();
                if geom::distance(&pt, &x) <= t {
                    count += 1;
                    if idx.iter().enumerate().all(|(a, &i)| i >= 0 && (i as usize) < f.resolution[a]) {
                        let u: Vec<usize> = idx.iter().map(|&i| i as usize).collect();
                        sum += grad[f.flat_index(&u)];
                    }
                }
                let mut a = n;
                loop {
                    if a == 0 {
                        break 'walk;
                    }
                    a -= 1;
                    idx[a] += 1;
                    if idx[a] <= hi[a] {
                        break;
                    }
                    idx[a] = lo[a];
                }
            }
            let avg = sum / count.max(1) as f64;
            if avg < 1e-9 {
                continue;
            }
            let eta = 1e-3 * t;
            let mut g2 = 0.0;
            for a in 0..=n {
                let (mut xp, mut xm, mut tp, mut tm) = (x.clone(), x.clone(), t, t);
                if a < n {
                    xp[a] += eta;
                    xm[a] -= eta;
                } else {
                    tp += eta;
                    tm -= eta;
                }
                let d = geom::sub(&convolve_at(f, phi, &xp, tp), &convolve_at(f, phi, &xm, tm));
                g2 += geom::dot(&d, &d) / (4.0 * eta * eta);
            }
            gradient_constant = gradient_constant.max(g2.sqrt() / avg);
            used += 1;
        }
    }
    Ok(ExtensionReport {
        n,
        p,
        q,
        stable: max_ratio < 2.0 * min_ratio,
        ratios,
        max_ratio,
        min_ratio,
        gradient_constant,
        gradient_bound: 2f64.sqrt() * phi.sup() * geom::ball_volume(n),
        gradient_samples: used,
    })
}

type HomotopyFn = dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync;

/// A map `S^n × [0, 1] → R^m`.
#[derive(Clone)]
pub struct Homotopy {
    pub sphere_dim: usize,
    pub dim_out: usize,
    eval: Arc<HomotopyFn>,
}

impl std::fmt::Debug for Homotopy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Homotopy")
            .field("sphere_dim", &self.sphere_dim)
            .field("dim_out", &self.dim_out)
            .finish()
    }
}

impl Homotopy {
    pub fn new<F>(sphere_dim: usize, dim_out: usize, f: F) -> Homotopy
    where
        F: Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    {
        Homotopy {
            sphere_dim,
            dim_out,
            eval: Arc::new(f),
        }
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Vec<f64> {
        (self.eval)(x, t)
    }
}

/// Settings of the spherical averaging in [`build_homotopy`].
#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyConfig {
    /// Geodesic averaging radius at `t = 0`; it shrinks linearly to 0 at `t = 1`.
    pub initial_scale: f64,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
}

impl Default for HomotopyConfig {
    fn default() -> Self {
        HomotopyConfig {
            initial_scale: 0.5,
            radial_nodes: 4,
            angular_nodes: 12,
        }
    }
}

/// `3t² − 2t³`.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Polar rule for `∫_{B^n} F(y) φ(y) dy` with weights summing to 1 (n = 1, 2).
fn polar_rule(phi: &Mollifier, cfg: &HomotopyConfig) -> Vec<(Vec<f64>, f64)> {
    let (r, w) = geom::gauss_legendre_unit(cfg.radial_nodes.max(2) * if phi.dim == 1 { 2 } else { 1 });
    let mut out = Vec::new();
    if phi.dim == 1 {
        for (ri, wi) in r.iter().zip(&w) {
            let y = 2.0 * ri - 1.0;
            out.push((vec![y], wi * phi.profile(y.abs())));
        }
    } else {
        let m = cfg.angular_nodes;
        for (ri, wi) in r.iter().zip(&w) {
            for j in 0..m {
                let a = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                out.push((vec![ri * a.cos(), ri * a.sin()], wi * ri * phi.profile(*ri)));
            }
        }
    }
    let total: f64 = out.iter().map(|o| o.1).sum();
    out.iter_mut().for_each(|o| o.1 /= total);
    out
}

/// The homotopy `H(x, t) = g(x) + χ(t) (A_{s(t)} h)(x)` between `g` (at `t = 0`)
/// and the vertex-mapped `f` (at `t = 1`).
///
/// `h` is the piecewise-linear interpolation of the vertex values `f − g`,
/// `A_s` averages over geodesic balls of radius `s` with the mollifier
/// profile, `s(t) = s₀ (1 − t)` and `χ` is the smoothstep cutoff.
pub fn build_homotopy(
    f: &EmbeddedSphere,
    g: &MapOracle,
    phi: &Mollifier,
    cfg: &HomotopyConfig,
) -> Result<Homotopy> {
    let n = f.base_mesh.dim;
    if n > 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    if phi.dim != n {
        return Err(Error::DimensionMismatch(format!("mollifier on R^{} for S^{n}", phi.dim)));
    }
    let m = g.dim_out();
    if g.dim_in() != n + 1 || f.image_vertices.iter().any(|v| v.len() != m) {
        return Err(Error::DimensionMismatch("f and g must map S^n into the same R^m".into()));
    }
    if m < n + 1 {
        return Err(Error::DimensionMismatch(format!("m = {m} < n + 1 = {}", n + 1)));
    }
    let h_vertices: Vec<Vec<f64>> = f
        .base_mesh
        .vertices
        .iter()
        .zip(&f.image_vertices)
        .map(|(v, fv)| geom::sub(fv, &g.eval(v)))
        .collect();
    let locator = Arc::new(MeshLocator::new(&f.base_mesh));
    let rule = polar_rule(phi, cfg);
    let g = g.clone();
    let s0 = cfg.initial_scale;
    Ok(Homotopy::new(n, m, move |x, t| {
        let gx = g.eval(x);
        let chi = smoothstep(t);
        if chi == 0.0 {
            return gx;
        }
        let s = s0 * (1.0 - t.clamp(0.0, 1.0));
        let avg = if s == 0.0 {
            locator.interpolate(&h_vertices, x)
        } else {
            let frame = geom::tangent_frame(x);
            let mut acc = vec![0.0; m];
            for (y, w) in &rule {
                let mut v = vec![0.0; x.len()];
                for (yi, e) in y.iter().zip(&frame) {
                    for c in 0..x.len() {
                        v[c] += s * yi * e[c];
                    }
                }
                let len = geom::norm(&v);
                let z = if len == 0.0 {
                    x.to_vec()
                } else {
                    geom::geodesic_step(x, &geom::scale(&v, 1.0 / len), len)
                };
                let hz = locator.interpolate(&h_vertices, &z);
                for c in 0..m {
                    acc[c] += w * hz[c];
                }
            }
            acc
        };
        gx.iter().zip(&avg).map(|(a, b)| a + chi * b).collect()
    }))
}

/// `∫_0^1 ∫_{S^n} J_H dσ dt` with one node per simplex (projected centroid,
/// exact spherical weight) and per t-interval (midpoint).
pub fn hausdorff_volume_estimate(h: &Homotopy, mesh: &SphereMesh, t_levels: &[f64]) -> Result<f64> {
    if mesh.dim != h.sphere_dim {
        return Err(Error::DimensionMismatch("mesh and homotopy disagree on n".into()));
    }
    if t_levels.len() < 2 || t_levels.windows(2).any(|w| !(w[0] < w[1])) || t_levels[0] < 0.0 || *t_levels.last().unwrap() > 1.0 {
        return Err(Error::InvalidArgument("t_levels must increase within [0, 1]".into()));
    }
    let quad = mesh.quadrature();
    let step = 1e-5;
    let total: f64 = (0..quad.len())
        .into_par_iter()
        .map(|i| {
            let u = &quad.nodes[i];
            let frame = &quad.frames[i];
            let mut acc = 0.0;
            for w in t_levels.windows(2) {
                let t = 0.5 * (w[0] + w[1]);
                let mut cols: Vec<Vec<f64>> = frame
                    .iter()
                    .map(|e| {
                        let a = h.eval(&geom::geodesic_step(u, e, step), t);
                        let b = h.eval(&geom::geodesic_step(u, e, -step), t);
                        a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * step)).collect()
                    })
                    .collect();
                let dt = step.min(t).min(1.0 - t);
                let a = h.eval(u, t + dt);
                let b = h.eval(u, t - dt);
                cols.push(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * dt)).collect());
                acc += (w[1] - w[0]) * geom::gram_volume(&cols);
            }
            quad.weights[i] * acc
        })
        .sum();
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetBoundReport {
    pub n: usize,
    pub trials: usize,
    pub max_ratio: f64,
    /// `Λ(n) = n^{−n/2}`.
    pub lambda: f64,
    /// `Λ(n)` found by projected gradient ascent on the unit HS sphere.
    pub lambda_numeric: f64,
    /// `2^{n−1} Λ(n)`.
    pub bound: f64,
    /// Ratio at `A = B = I`, where the bound is attained.
    pub identity_ratio: f64,
    pub within_bound: bool,
}

/// `|det(A + B)| / (|A|^n + |B|^n)`.
pub fn det_ratio(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows() as i32;
    (a + b).determinant().abs() / (geom::hs_norm(a).powi(n) + geom::hs_norm(b).powi(n))
}

fn lambda_numeric(n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut best: f64 = 0.0;
    for _ in 0..4 {
        let mut m = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        m /= geom::hs_norm(&m);
        for _ in 0..500 {
            let det = m.determinant();
            // ∇ det = cofactor matrix = det · M^{−T}
            let Some(inv) = m.clone().try_inverse() else { break };
            let grad = inv.transpose() * det;
            m += grad * 0.1 * det.signum();
            let norm = geom::hs_norm(&m);
            m /= norm;
        }
        best = best.max(m.determinant().abs());
    }
    best
}

/// Samples Gaussian pairs and compares the largest ratio with `2^{n−1} n^{−n/2}`.
pub fn det_bound_check(n: usize, trials: usize, seed: u64) -> Result<DetBoundReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda = (n as f64).powf(-(n as f64) / 2.0);
    let bound = 2f64.powi(n as i32 - 1) * lambda;
    let mut max_ratio: f64 = 0.0;
    for _ in 0..trials {
        let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        max_ratio = max_ratio.max(det_ratio(&a, &b));
    }
    let id = DMatrix::identity(n, n);
    let identity_ratio = det_ratio(&id, &id);
    Ok(DetBoundReport {
        n,
        trials,
        max_ratio,
        lambda,
        lambda_numeric: lambda_numeric(n, &mut rng),
        bound,
        identity_ratio,
        within_bound: max_ratio <= bound * (1.0 + 1e-12),
    })
}
