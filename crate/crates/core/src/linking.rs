//! Linking numbers of disjoint spheres `γ₁: S^k → R^n`, `γ₂: S^l → R^n` with
//! `k + l = n − 1`.
//!
//! [`linking_number`] is the degree of the Gauss map
//! `ψ(s, t) = (γ₁(s) − γ₂(t)) / |γ₁(s) − γ₂(t)|` on `S^k × S^l`, oriented by
//! the concatenated tangent frames (`S^k` block first).
//! [`gauss_linking_circles`] is the classical double integral for two curves
//! in `R^3`,
//!
//! ```text
//! (1/4π) ∫∫ det(γ₁'(s), γ₂'(t), γ₁(s) − γ₂(t)) / |γ₁(s) − γ₂(t)|³ ds dt.
//! ```
//!
//! With these conventions the integral equals `−deg ψ` for every pair of
//! circles: moving `d = γ₁ − γ₂` to the front is a cyclic (even) permutation
//! and `∂_t d = −γ₂'` contributes the sign.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom;
use crate::map::MapOracle;
use crate::mesh::{ProductGrid, SphereQuadrature};

/// Images closer than this are treated as intersecting.
pub const SEPARATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkingMethod {
    GaussIntegral,
    GaussMap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkingResult {
    pub value: f64,
    pub rounded: i64,
    pub residual: f64,
    pub separation: f64,
    pub nodes_used: usize,
    pub method: LinkingMethod,
}

impl LinkingResult {
    fn new(value: f64, separation: f64, nodes_used: usize, method: LinkingMethod) -> LinkingResult {
        let rounded = value.round();
        LinkingResult {
            value,
            rounded: rounded as i64,
            residual: (value - rounded).abs(),
            separation,
            nodes_used,
            method,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.residual < 0.5
    }

    fn checked(self) -> Result<LinkingResult> {
        if self.residual >= 0.25 {
            Err(Error::NotConverged {
                residual: self.residual,
                threshold: 0.25,
            })
        } else {
            Ok(self)
        }
    }
}

/// Values and tangent derivatives of one factor at its quadrature nodes.
struct FactorSamples {
    values: Vec<Vec<f64>>,
    derivs: Vec<Vec<Vec<f64>>>,
}

fn sample_factor(g: &MapOracle, q: &SphereQuadrature) -> FactorSamples {
    let pairs: Vec<(Vec<f64>, Vec<Vec<f64>>)> = (0..q.len())
        .into_par_iter()
        .map(|i| (g.eval(&q.nodes[i]), g.tangent_derivatives(&q.nodes[i], &q.frames[i])))
        .collect();
    let (values, derivs) = pairs.into_iter().unzip();
    FactorSamples { values, derivs }
}

fn min_separation(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.par_iter()
        .map(|p| b.iter().map(|q| geom::distance(p, q)).fold(f64::INFINITY, f64::min))
        .reduce(|| f64::INFINITY, f64::min)
}

/// The Gauss map of a pair of parametrized spheres.
#[derive(Debug, Clone)]
pub struct GaussMapEval {
    pub gamma1: MapOracle,
    pub gamma2: MapOracle,
    /// Minimum of `|γ₁(s) − γ₂(t)|` over the sampled grid.
    pub separation: f64,
}

impl GaussMapEval {
    pub fn new(gamma1: &MapOracle, gamma2: &MapOracle, grid: &ProductGrid) -> Result<GaussMapEval> {
        check_dims(gamma1, gamma2, grid)?;
        let a: Vec<Vec<f64>> = grid.first.nodes.iter().map(|s| gamma1.eval(s)).collect();
        let b: Vec<Vec<f64>> = grid.second.nodes.iter().map(|t| gamma2.eval(t)).collect();
        let separation = min_separation(&a, &b);
        if separation <= SEPARATION_TOLERANCE {
            return Err(Error::ImagesIntersect(separation));
        }
        Ok(GaussMapEval {
            gamma1: gamma1.clone(),
            gamma2: gamma2.clone(),
            separation,
        })
    }

    /// `ψ(s, t)`.
    pub fn eval(&self, s: &[f64], t: &[f64]) -> Vec<f64> {
        geom::normalized(&geom::sub(&self.gamma1.eval(s), &self.gamma2.eval(t)))
    }
}

fn check_dims(g1: &MapOracle, g2: &MapOracle, grid: &ProductGrid) -> Result<()> {
    let (k, l) = grid.factor_dims();
    let n = g1.dim_out();
    if g2.dim_out() != n {
        return Err(Error::DimensionMismatch(format!(
            "curves map into R^{n} and R^{}",
            g2.dim_out()
        )));
    }
    if g1.dim_in() != k + 1 || g2.dim_in() != l + 1 {
        return Err(Error::DimensionMismatch(format!(
            "grid is S^{k} × S^{l} but maps take R^{} and R^{}",
            g1.dim_in(),
            g2.dim_in()
        )));
    }
    if k + l + 1 != n {
        return Err(Error::DimensionMismatch(format!("k + l = {} but n − 1 = {}", k + l, n - 1)));
    }
    Ok(())
}

/// The Gauss double integral for two closed curves in `R^3`, trapezoidal in
/// both parameters, without the convergence check.
pub fn gauss_linking_integral(gamma1: &MapOracle, gamma2: &MapOracle, nodes: usize) -> Result<LinkingResult> {
    if gamma1.dim_in() != 2 || gamma2.dim_in() != 2 || gamma1.dim_out() != 3 || gamma2.dim_out() != 3 {
        return Err(Error::DimensionMismatch("the Gauss integral needs two maps S¹ → R³".into()));
    }
    if nodes < 16 {
        return Err(Error::InvalidArgument(format!("nodes = {nodes} < 16")));
    }
    let q = SphereQuadrature::uniform_circle(nodes);
    let a = sample_factor(gamma1, &q);
    let b = sample_factor(gamma2, &q);
    let separation = min_separation(&a.values, &b.values);
    if separation <= SEPARATION_TOLERANCE {
        return Err(Error::ImagesIntersect(separation));
    }
    let h = q.weights[0];
    let rows: Vec<f64> = (0..nodes)
        .into_par_iter()
        .map(|i| {
            let (p, dp) = (&a.values[i], &a.derivs[i][0]);
            let mut row = 0.0;
            for j in 0..nodes {
                let d = geom::sub(p, &b.values[j]);
                let r = geom::norm(&d);
                row += geom::det_columns(&[dp.clone(), b.derivs[j][0].clone(), d]) / (r * r * r);
            }
            row
        })
        .collect();
    let value = rows.iter().sum::<f64>() * h * h / (4.0 * std::f64::consts::PI);
    Ok(LinkingResult::new(value, separation, nodes * nodes, LinkingMethod::GaussIntegral))
}

/// [`gauss_linking_integral`] with `NotConverged` when the residual is ≥ 0.25.
pub fn gauss_linking_circles(gamma1: &MapOracle, gamma2: &MapOracle, nodes: usize) -> Result<LinkingResult> {
    gauss_linking_integral(gamma1, gamma2, nodes)?.checked()
}

/// Degree of the Gauss map on the product grid, without the convergence check.
pub fn gauss_map_degree(gamma1: &MapOracle, gamma2: &MapOracle, grid: &ProductGrid) -> Result<LinkingResult> {
    check_dims(gamma1, gamma2, grid)?;
    let n = gamma1.dim_out();
    let (k, l) = grid.factor_dims();
    let a = sample_factor(gamma1, &grid.first);
    let b = sample_factor(gamma2, &grid.second);
    let separation = min_separation(&a.values, &b.values);
    if separation <= SEPARATION_TOLERANCE {
        return Err(Error::ImagesIntersect(separation));
    }
    // integrand det(d, ∂_s γ₁ ..., −∂_t γ₂ ...) / |d|^n, d = γ₁(s) − γ₂(t)
    let rows: Vec<f64> = (0..grid.first.len())
        .into_par_iter()
        .map(|i| {
            let mut buf = vec![0.0; n * n];
            let mut row = 0.0;
            for j in 0..grid.second.len() {
                let mut r2 = 0.0;
                for c in 0..n {
                    let d = a.values[i][c] - b.values[j][c];
                    buf[c * n] = d;
                    r2 += d * d;
                    for e in 0..k {
                        buf[c * n + 1 + e] = a.derivs[i][e][c];
                    }
                    for e in 0..l {
                        buf[c * n + 1 + k + e] = -b.derivs[j][e][c];
                    }
                }
                let det = geom::det_row_major(&mut buf, n);
                row += grid.second.weights[j] * det / r2.powf(n as f64 / 2.0);
            }
            row * grid.first.weights[i]
        })
        .collect();
    let value = rows.iter().sum::<f64>() / geom::sphere_volume(n - 1);
    Ok(LinkingResult::new(value, separation, grid.len(), LinkingMethod::GaussMap))
}

/// `ℓ(γ₁, γ₂) = deg ψ`, refusing results with residual ≥ 0.25.
pub fn linking_number(gamma1: &MapOracle, gamma2: &MapOracle, grid: &ProductGrid) -> Result<LinkingResult> {
    gauss_map_degree(gamma1, gamma2, grid)?.checked()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub before: LinkingResult,
    pub after: LinkingResult,
    /// Sign of the Jacobian of `h` (+1 sense preserving, −1 reversing).
    pub sense: i64,
    pub expected: i64,
    pub holds: bool,
}

/// Compares `ℓ(γ₁, γ₂)` with `ℓ(h∘γ₁, h∘γ₂)`. The sense of `h` is read off
/// the sign of its Jacobian at a point of `γ₁`.
pub fn verify_linking_invariance(
    gamma1: &MapOracle,
    gamma2: &MapOracle,
    h: &MapOracle,
    grid: &ProductGrid,
) -> Result<InvarianceReport> {
    let before = linking_number(gamma1, gamma2, grid)?;
    let probe = gamma1.eval(&grid.first.nodes[0]);
    let jac = h.jacobian_det(&probe);
    if jac.abs() < 1e-12 {
        return Err(Error::InvalidArgument("h has a vanishing Jacobian".into()));
    }
    let sense = if jac > 0.0 { 1 } else { -1 };
    let after = linking_number(&h.compose(gamma1), &h.compose(gamma2), grid)?;
    let expected = sense * before.rounded;
    Ok(InvarianceReport {
        holds: after.rounded == expected,
        before,
        after,
        sense,
        expected,
    })
}

/// Linking number of two closed curves in `R^3` from a diagram: both are
/// sampled as polygons with `nodes` vertices, projected along a generic
/// direction, and the signed crossings where `γ₁` passes over `γ₂` are counted.
pub fn crossing_linking_number(gamma1: &MapOracle, gamma2: &MapOracle, nodes: usize) -> Result<i64> {
    if gamma1.dim_out() != 3 || gamma2.dim_out() != 3 || gamma1.dim_in() != 2 || gamma2.dim_in() != 2 {
        return Err(Error::DimensionMismatch("crossings need two maps S¹ → R³".into()));
    }
    // frame (e1, e2, v) with v the projection direction
    let v = geom::normalized(&[0.123, 0.271, 0.955]);
    let e1 = geom::normalized(&[v[2], 0.0, -v[0]]);
    let e2 = [
        v[1] * e1[2] - v[2] * e1[1],
        v[2] * e1[0] - v[0] * e1[2],
        v[0] * e1[1] - v[1] * e1[0],
    ];
    let polygon = |g: &MapOracle| -> Vec<[f64; 3]> {
        (0..nodes)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / nodes as f64;
                let p = g.eval(&[a.cos(), a.sin()]);
                [geom::dot(&p, &e1), geom::dot(&p, &e2), geom::dot(&p, &v)]
            })
            .collect()
    };
    let (a, b) = (polygon(gamma1), polygon(gamma2));
    let mut total = 0i64;
    for i in 0..nodes {
        let (p0, p1) = (a[i], a[(i + 1) % nodes]);
        let dp = [p1[0] - p0[0], p1[1] - p0[1]];
        for j in 0..nodes {
            let (q0, q1) = (b[j], b[(j + 1) % nodes]);
            let dq = [q1[0] - q0[0], q1[1] - q0[1]];
            let cross = dp[0] * dq[1] - dp[1] * dq[0];
            if cross.abs() < 1e-15 {
                continue;
            }
            let w = [q0[0] - p0[0], q0[1] - p0[1]];
            let s = (w[0] * dq[1] - w[1] * dq[0]) / cross;
            let t = (w[0] * dp[1] - w[1] * dp[0]) / cross;
            if !(0.0..1.0).contains(&s) || !(0.0..1.0).contains(&t) {
                continue;
            }
            let hp = p0[2] + s * (p1[2] - p0[2]);
            let hq = q0[2] + t * (q1[2] - q0[2]);
            if (hp - hq).abs() < 1e-12 {
                return Err(Error::ImagesIntersect((hp - hq).abs()));
            }
            if hp > hq {
                total += if cross > 0.0 { 1 } else { -1 };
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{iota1_oracle, iota2_oracle, make_sphere_mesh};
    use nalgebra::DMatrix;

    fn circle() -> MapOracle {
        MapOracle::new(2, 3, |u| vec![u[0], u[1], 0.0])
    }

    fn hopf_partner(shift: f64) -> MapOracle {
        MapOracle::new(2, 3, move |u| vec![1.0 + shift + u[0], 0.0, u[1]])
    }

    #[test]
    fn hopf_pair_gauss_integral() {
        let r = gauss_linking_circles(&circle(), &hopf_partner(0.0), 256).unwrap();
        assert!((r.value.abs() - 1.0).abs() < 1e-3, "{}", r.value);
        let far = gauss_linking_circles(&circle(), &hopf_partner(10.0), 256).unwrap();
        assert!(far.value.abs() < 1e-3);
    }

    #[test]
    fn swapping_circles_keeps_the_integral() {
        let a = gauss_linking_circles(&circle(), &hopf_partner(0.0), 128).unwrap();
        let b = gauss_linking_circles(&hopf_partner(0.0), &circle(), 128).unwrap();
        assert!((a.value - b.value).abs() < 1e-6);
    }

    #[test]
    fn integral_is_minus_gauss_map_degree() {
        let grid = ProductGrid::new(SphereQuadrature::uniform_circle(128), SphereQuadrature::uniform_circle(128));
        let g = gauss_linking_circles(&circle(), &hopf_partner(0.0), 128).unwrap();
        let d = linking_number(&circle(), &hopf_partner(0.0), &grid).unwrap();
        assert!((g.value + d.value).abs() < 1e-8, "{} {}", g.value, d.value);
    }

    #[test]
    fn intersecting_images_are_refused() {
        // meets the unit circle at (±1, 0, 0)
        let through = MapOracle::new(2, 3, |u| vec![u[0], 0.0, u[1]]);
        assert!(matches!(gauss_linking_circles(&circle(), &through, 64), Err(Error::ImagesIntersect(_))));
        assert!(matches!(gauss_linking_circles(&circle(), &hopf_partner(0.0), 8), Err(Error::InvalidArgument(_))));
    }

    fn iota_grid(circle_nodes: usize, refinement: usize) -> ProductGrid {
        ProductGrid::new(
            SphereQuadrature::uniform_circle(circle_nodes),
            make_sphere_mesh(2, refinement).unwrap().quadrature(),
        )
    }

    #[test]
    fn iota_pair_links_once_and_reflections_act_as_expected() {
        let grid = iota_grid(128, 4);
        let g1 = iota1_oracle(4, &[0.0; 3]).unwrap();
        let g2 = iota2_oracle(4, &[0.0; 2]).unwrap();
        let base = linking_number(&g1, &g2, &grid).unwrap();
        assert_eq!(base.rounded.abs(), 1);
        assert!(base.residual < 1e-2, "{}", base.value);
        let refl = MapOracle::reflection(4);
        let r2 = linking_number(&g1, &refl.compose(&g2), &grid).unwrap();
        assert_eq!(r2.rounded, -base.rounded);
        let r1 = linking_number(&refl.compose(&g1), &g2, &grid).unwrap();
        assert_eq!(r1.rounded, base.rounded);
    }

    #[test]
    fn invariance_under_rigid_motion_scaling_and_reflection() {
        let grid = ProductGrid::new(SphereQuadrature::uniform_circle(64), SphereQuadrature::uniform_circle(64));
        let (s, c) = 0.7f64.sin_cos();
        let rigid = MapOracle::affine(
            DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]),
            vec![0.3, -1.0, 2.0],
        );
        let rep = verify_linking_invariance(&circle(), &hopf_partner(0.0), &rigid, &grid).unwrap();
        assert!(rep.holds && rep.sense == 1);
        let scale = MapOracle::linear(DMatrix::identity(3, 3) * 3.0);
        assert!(verify_linking_invariance(&circle(), &hopf_partner(0.0), &scale, &grid).unwrap().holds);

        let grid4 = iota_grid(32, 2);
        let g1 = iota1_oracle(4, &[0.0; 3]).unwrap();
        let g2 = iota2_oracle(4, &[0.0; 2]).unwrap();
        let rep = verify_linking_invariance(&g1, &g2, &MapOracle::reflection(4), &grid4).unwrap();
        assert!(rep.holds && rep.sense == -1 && rep.after.rounded == -rep.before.rounded);
    }

    #[test]
    fn dimension_checks() {
        let grid = iota_grid(16, 1);
        let g1 = iota1_oracle(4, &[0.0; 3]).unwrap();
        assert!(matches!(linking_number(&g1, &g1, &grid), Err(Error::DimensionMismatch(_))));
    }
}
