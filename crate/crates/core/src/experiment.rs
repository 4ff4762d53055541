//! Orientation calibration of the linked tori and the Jacobian-sign pipeline:
//! normalize a map at a point, blow it up, and read off the linking number of
//! the images of the two linked spheres.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom;
use crate::linking::{linking_number, LinkingResult};
use crate::map::MapOracle;
use crate::mesh::{half_dim, iota1_oracle, iota2_oracle, nu_dim, ProductGrid, SphereQuadrature};
use crate::sobolev::{blow_up, unit_ball, w1p_norm, BlowUpSource};

/// Resolution of a linking computation in `R^4`: nodes on `S¹` and the
/// octahedron refinement level on `S²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkGrid {
    pub circle_nodes: usize,
    pub refinement: usize,
}

impl LinkGrid {
    pub const REFERENCE: LinkGrid = LinkGrid {
        circle_nodes: 128,
        refinement: 4,
    };

    pub fn product(&self) -> Result<ProductGrid> {
        Ok(ProductGrid::new(
            SphereQuadrature::uniform_circle(self.circle_nodes),
            SphereQuadrature::for_sphere(2, self.refinement)?,
        ))
    }
}

/// Raw `ℓ(ι₁(x, ·), ι₂(y, ·))` in `R^4`, before the global sign.
pub fn iota_linking(x: &[f64], y: &[f64], grid: &ProductGrid) -> Result<LinkingResult> {
    linking_number(&iota1_oracle(4, x)?, &iota2_oracle(4, y)?, grid)
}

/// The sign that makes the base pair `x = 0, y = 0` link with `+1`.
pub fn calibrate_sign(grid: &LinkGrid) -> Result<(i64, LinkingResult)> {
    let base = iota_linking(&[0.0; 3], &[0.0; 2], &grid.product()?)?;
    if base.rounded == 0 {
        return Err(Error::NotConverged {
            residual: base.residual,
            threshold: 0.25,
        });
    }
    Ok((base.rounded.signum(), base))
}

/// Uniform point of the closed unit ball in `R^d`.
pub fn random_ball_point(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if geom::dot(&p, &p) <= 1.0 {
            return p;
        }
    }
}

/// `k` seeded parameter pairs `(x, y) ∈ B^{[n/2]+1} × B^{ν+1}` for `n = 4`.
pub fn random_parameter_pairs(k: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k)
        .map(|_| {
            let x = random_ball_point(half_dim(4) + 1, &mut rng);
            let y = random_ball_point(nu_dim(4) + 1, &mut rng);
            (x, y)
        })
        .collect()
}

/// `A = T · Df(x_o)⁻¹` with `T = ℛ` when `J_f(x_o) < 0` and `T = I` otherwise,
/// so that `det A > 0` and `D(A∘f)(x_o) = T`.
pub fn normalizing_matrix(f: &MapOracle, x_o: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = x_o.len();
    let df = f.jacobian(x_o);
    let det = df.determinant();
    if det.abs() < 1e-8 {
        return Err(Error::SingularPreimage {
            point: x_o.to_vec(),
            jacobian: det,
        });
    }
    let t = if det < 0.0 {
        geom::reflection_matrix(n)
    } else {
        DMatrix::identity(n, n)
    };
    let inv = df.try_inverse().expect("nonsingular");
    Ok((&t * inv, t))
}

/// `x ↦ (g(x_o + r x) − g(x_o)) / r` as an oracle.
pub fn blow_up_oracle(g: &MapOracle, x_o: &[f64], r: f64) -> MapOracle {
    let g = g.clone();
    let x_o = x_o.to_vec();
    let g0 = g.eval(&x_o);
    MapOracle::new(x_o.len(), g.dim_out(), move |x| {
        let y: Vec<f64> = x_o.iter().zip(x).map(|(a, b)| a + r * b).collect();
        g.eval(&y).iter().zip(&g0).map(|(v, v0)| (v - v0) / r).collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowUpConvergence {
    pub point: Vec<f64>,
    pub radii: Vec<f64>,
    pub det_a: f64,
    /// `‖g_r − T‖_{W^{1,p}(B)}`.
    pub forward: Vec<f64>,
    /// `‖(g_r)⁻¹ − T⁻¹‖_{W^{1,q}(B)}`.
    pub inverse: Vec<f64>,
    pub p: f64,
    pub q: f64,
    /// Ratios of consecutive errors (`error(r) / error(r/2)`).
    pub forward_factors: Vec<f64>,
    pub inverse_factors: Vec<f64>,
}

fn factors(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[0] / w[1]).collect()
}

/// Distances of the blow-ups of `g = A∘f` and of `g⁻¹` (at `g(x_o)`) to
/// their linear limits, on the unit ball.
pub fn blowup_convergence(
    f: &MapOracle,
    f_inv: &MapOracle,
    x_o: &[f64],
    radii: &[f64],
    p: f64,
    q: f64,
    resolution: usize,
) -> Result<BlowUpConvergence> {
    let n = x_o.len();
    let (a, t) = normalizing_matrix(f, x_o)?;
    let a_inv = a.clone().try_inverse().expect("nonsingular");
    let g = MapOracle::linear(a.clone()).compose(f);
    let g_inv = f_inv.compose(&MapOracle::linear(a_inv));
    let y_o = g.eval(x_o);
    let limit = MapOracle::linear(t.clone());
    let limit_inv = MapOracle::linear(t.try_inverse().expect("T is orthogonal"));
    let ball = unit_ball(n);
    let mut forward = Vec::new();
    let mut inverse = Vec::new();
    for &r in radii {
        let gr = blow_up(&BlowUpSource::Oracle(&g, None), x_o, r, resolution)?;
        forward.push(w1p_norm(&gr.minus_oracle(&limit), p, &ball)?);
        let hr = blow_up(&BlowUpSource::Oracle(&g_inv, None), &y_o, r, resolution)?;
        inverse.push(w1p_norm(&hr.minus_oracle(&limit_inv), q, &ball)?);
    }
    Ok(BlowUpConvergence {
        point: x_o.to_vec(),
        radii: radii.to_vec(),
        det_a: a.determinant(),
        forward_factors: factors(&forward),
        inverse_factors: factors(&inverse),
        forward,
        inverse,
        p,
        q,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid: LinkGrid,
    /// Blow-up lattice nodes per axis for the `W^{1,p}` distance.
    pub resolution: usize,
    pub p: f64,
    pub global_sign: i64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Retry with seeded random `(x, y)` when the images intersect.
    pub jitter: Option<u64>,
    pub jitter_attempts: usize,
}

impl ExperimentConfig {
    pub fn new(global_sign: i64) -> ExperimentConfig {
        ExperimentConfig {
            grid: LinkGrid::REFERENCE,
            resolution: 13,
            p: 2.0,
            global_sign,
            x: vec![0.0; 3],
            y: vec![0.0; 2],
            jitter: None,
            jitter_attempts: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusRecord {
    pub r: f64,
    /// Calibrated linking number of `g_r∘ι₁` and `g_r∘ι₂`.
    pub linking: Option<f64>,
    pub rounded: Option<i64>,
    pub residual: Option<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `‖g_r − T‖_{W^{1,p}(B)}`.
    pub w1p_distance: f64,
    /// Why this radius was skipped.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobianSignReport {
    pub point: Vec<f64>,
    pub jacobian: f64,
    pub det_a: f64,
    /// Calibrated base linking number (+1).
    pub base: i64,
    /// `sgn J_f(x_o) · base`, the small-radius limit.
    pub expected: i64,
    pub records: Vec<RadiusRecord>,
}

impl JacobianSignReport {
    /// Rounded linking at each radius that was not skipped.
    pub fn rounded(&self) -> Vec<Option<i64>> {
        self.records.iter().map(|r| r.rounded).collect()
    }
}

/// For each radius: blow up `g = A∘f` at `x_o`, push the linked spheres
/// through `g_r` and compute their linking number.
pub fn jacobian_sign_experiment(f: &MapOracle, x_o: &[f64], radii: &[f64], cfg: &ExperimentConfig) -> Result<JacobianSignReport> {
    let n = x_o.len();
    if n != 4 || f.dim_in() != 4 || f.dim_out() != 4 {
        return Err(Error::DimensionMismatch("the pipeline runs in R^4".into()));
    }
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0)) || radii.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidArgument("radii must be positive and decreasing".into()));
    }
    let jacobian = f.jacobian_det(x_o);
    let (a, t) = normalizing_matrix(f, x_o)?;
    let g = MapOracle::linear(a.clone()).compose(f);
    let limit = MapOracle::linear(t);
    let grid = cfg.grid.product()?;
    let mut rng = cfg.jitter.map(ChaCha8Rng::seed_from_u64);
    let mut records = Vec::new();
    for &r in radii {
        let gr = blow_up_oracle(&g, x_o, r);
        let w1p_distance = w1p_norm(
            &blow_up(&BlowUpSource::Oracle(&g, None), x_o, r, cfg.resolution)?.minus_oracle(&limit),
            cfg.p,
            &unit_ball(n),
        )?;
        let (mut x, mut y) = (cfg.x.clone(), cfg.y.clone());
        let mut attempts = 0;
        let record = loop {
            let run = linking_number(&gr.compose(&iota1_oracle(4, &x)?), &gr.compose(&iota2_oracle(4, &y)?), &grid);
            match run {
                Ok(l) => {
                    let value = l.value * cfg.global_sign as f64;
                    break RadiusRecord {
                        r,
                        linking: Some(value),
                        rounded: Some(l.rounded * cfg.global_sign),
                        residual: Some(l.residual),
                        x,
                        y,
                        w1p_distance,
                        skipped: None,
                    };
                }
                Err(Error::ImagesIntersect(_)) if rng.is_some() && attempts < cfg.jitter_attempts => {
                    let rng = rng.as_mut().unwrap();
                    x = random_ball_point(3, rng);
                    y = random_ball_point(2, rng);
                    attempts += 1;
                }
                Err(Error::ImagesIntersect(sep)) => {
                    break RadiusRecord {
                        r,
                        linking: None,
                        rounded: None,
                        residual: None,
                        x,
                        y,
                        w1p_distance,
                        skipped: Some(Error::ImagesIntersect(sep).to_string()),
                    };
                }
                Err(e) => return Err(e),
            }
        };
        records.push(record);
    }
    let sign = if jacobian < 0.0 { -1 } else { 1 };
    Ok(JacobianSignReport {
        point: x_o.to_vec(),
        jacobian,
        det_a: a.determinant(),
        base: 1,
        expected: sign,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn normalizing_matrix_has_positive_determinant() {
        for name in ["reversing-diffeo-4d", "reversing-affine-4d", "identity-4d"] {
            let f = catalog::get(name).unwrap().oracle;
            let x = [0.1, -0.2, 0.05, 0.3];
            let (a, t) = normalizing_matrix(&f, &x).unwrap();
            assert!(a.determinant() > 0.0, "{name}");
            let d = &a * f.jacobian(&x);
            assert!(geom::hs_norm(&(d - t)) < 1e-8, "{name}");
        }
    }

    #[test]
    fn blowup_of_a_linear_map_is_itself() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -0.5, 3.0]);
        let f = MapOracle::affine(m.clone(), vec![1.0, -1.0]);
        let b = blow_up_oracle(&f, &[0.3, 0.2], 0.01);
        let y = b.eval(&[0.5, -0.25]);
        let want = geom::mat_vec(&m, &[0.5, -0.25]);
        assert!(geom::distance(&y, &want) < 1e-12);
    }

    #[test]
    fn affine_reversing_map_blowups_are_exact() {
        let e = catalog::get("reversing-affine-4d").unwrap();
        let rep = blowup_convergence(&e.oracle, e.inverse.as_ref().unwrap(), &[0.0; 4], &[0.5, 0.25], 2.0, 1.0, 7).unwrap();
        assert!(rep.det_a > 0.0);
        assert!(rep.forward.iter().chain(&rep.inverse).all(|v| *v < 1e-6), "{rep:?}");
    }

    #[test]
    fn random_pairs_are_in_the_balls_and_reproducible() {
        let a = random_parameter_pairs(5, 7);
        assert_eq!(a, random_parameter_pairs(5, 7));
        for (x, y) in &a {
            assert_eq!((x.len(), y.len()), (3, 2));
            assert!(geom::norm(x) <= 1.0 && geom::norm(y) <= 1.0);
        }
    }

    #[test]
    fn pipeline_refuses_bad_radii() {
        let f = MapOracle::identity(4);
        let cfg = ExperimentConfig::new(1);
        assert!(jacobian_sign_experiment(&f, &[0.0; 4], &[0.1, 0.2], &cfg).is_err());
        assert!(jacobian_sign_experiment(&MapOracle::identity(3), &[0.0; 3], &[0.1], &cfg).is_err());
    }
}
