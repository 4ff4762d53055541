//! Evaluator handles for analytic maps.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::geom;

type Eval = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Default central finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

/// A deterministic map `R^dim_in -> R^dim_out` with finite-difference Jacobians.
///
/// Maps defined on a sphere `S^k` are represented with `dim_in = k + 1` and are
/// only ever evaluated at (or very near) unit vectors.
#[derive(Clone)]
pub struct MapOracle {
    dim_in: usize,
    dim_out: usize,
    eval: Arc<Eval>,
    jacobian_step: f64,
}

impl fmt::Debug for MapOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapOracle")
            .field("dim_in", &self.dim_in)
            .field("dim_out", &self.dim_out)
            .field("jacobian_step", &self.jacobian_step)
            .finish()
    }
}

impl MapOracle {
    pub fn new<F>(dim_in: usize, dim_out: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        MapOracle {
            dim_in,
            dim_out,
            eval: Arc::new(f),
            jacobian_step: DEFAULT_STEP,
        }
    }

    pub fn identity(n: usize) -> Self {
        MapOracle::new(n, n, |x| x.to_vec())
    }

    /// `x -> M x + b`.
    pub fn affine(m: DMatrix<f64>, b: Vec<f64>) -> Self {
        assert_eq!(m.nrows(), b.len());
        let (rows, cols) = (m.nrows(), m.ncols());
        MapOracle::new(cols, rows, move |x| {
            let mut y = geom::mat_vec(&m, x);
            for (yi, bi) in y.iter_mut().zip(&b) {
                *yi += bi;
            }
            y
        })
    }

    pub fn linear(m: DMatrix<f64>) -> Self {
        let rows = m.nrows();
        MapOracle::affine(m, vec![0.0; rows])
    }

    /// The reflection `Diag(1, ..., 1, -1)` of `R^n`.
    pub fn reflection(n: usize) -> Self {
        MapOracle::linear(geom::reflection_matrix(n))
    }

    pub fn with_step(mut self, h: f64) -> Self {
        assert!(h > 0.0);
        self.jacobian_step = h;
        self
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn jacobian_step(&self) -> f64 {
        self.jacobian_step
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim_in);
        (self.eval)(x)
    }

    /// Central-difference Jacobian, `dim_out x dim_in`.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let h = self.jacobian_step;
        let mut jac = DMatrix::zeros(self.dim_out, self.dim_in);
        let mut xp = x.to_vec();
        for j in 0..self.dim_in {
            xp[j] = x[j] + h;
            let fp = self.eval(&xp);
            xp[j] = x[j] - h;
            let fm = self.eval(&xp);
            xp[j] = x[j];
            for i in 0..self.dim_out {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        jac
    }

    /// Determinant of the finite-difference Jacobian (square maps only).
    pub fn jacobian_det(&self, x: &[f64]) -> f64 {
        assert_eq!(self.dim_in, self.dim_out, "Jacobian determinant of a non-square map");
        self.jacobian(x).determinant()
    }

    /// Derivatives along the given unit tangent directions at a sphere point `u`,
    /// by central differences along great circles.
    pub fn tangent_derivatives(&self, u: &[f64], frame: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let h = self.jacobian_step;
        frame
            .iter()
            .map(|e| {
                let fp = self.eval(&geom::geodesic_step(u, e, h));
                let fm = self.eval(&geom::geodesic_step(u, e, -h));
                fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
            })
            .collect()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &MapOracle) -> MapOracle {
        assert_eq!(
            inner.dim_out, self.dim_in,
            "cannot compose: inner output {} vs outer input {}",
            inner.dim_out, self.dim_in
        );
        let outer = self.clone();
        let inner = inner.clone();
        MapOracle {
            dim_in: inner.dim_in,
            dim_out: outer.dim_out,
            jacobian_step: inner.jacobian_step,
            eval: Arc::new(move |x| outer.eval(&inner.eval(x))),
        }
    }

    /// `x -> self(x) + offset`.
    pub fn translated(&self, offset: Vec<f64>) -> MapOracle {
        assert_eq!(offset.len(), self.dim_out);
        let f = self.clone();
        MapOracle::new(self.dim_in, self.dim_out, move |x| geom::add(&f.eval(x), &offset))
            .with_step(self.jacobian_step)
    }

    /// Inverse by damped Newton iteration from `start(y)`; intended for
    /// homeomorphisms whose analytic inverse is not available.
    pub fn newton_inverse(&self) -> MapOracle {
        assert_eq!(self.dim_in, self.dim_out);
        let f = self.clone();
        MapOracle::new(self.dim_in, self.dim_out, move |y| {
            newton_solve(&f, y, y.to_vec(), 100, 1e-14).unwrap_or_else(|x| x)
        })
    }
}

/// Damped Newton iteration for `f(x) = target` from `x0`.
///
/// Returns `Ok(x)` when `|f(x) - target| <= tol`, otherwise `Err(last_x)`.
pub fn newton_solve(
    f: &MapOracle,
    target: &[f64],
    x0: Vec<f64>,
    max_iter: usize,
    tol: f64,
) -> std::result::Result<Vec<f64>, Vec<f64>> {
    let n = f.dim_in();
    let mut x = x0;
    let mut r = geom::sub(&f.eval(&x), target);
    let mut rn = geom::norm(&r);
    for _ in 0..max_iter {
        if rn <= tol {
            return Ok(x);
        }
        let jac = f.jacobian(&x);
        let Some(step) = jac.lu().solve(&nalgebra::DVector::from_column_slice(&r)) else {
            return Err(x);
        };
        // Armijo backtracking on |f(x) - target|.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand: Vec<f64> = (0..n).map(|i| x[i] - lambda * step[i]).collect();
            let rc = geom::sub(&f.eval(&cand), target);
            let rcn = geom::norm(&rc);
            if rcn <= (1.0 - 1e-4 * lambda) * rn || rcn <= tol {
                x = cand;
                r = rc;
                rn = rcn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return if rn <= tol { Ok(x) } else { Err(x) };
        }
    }
    if rn <= tol {
        Ok(x)
    } else {
        Err(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_differences_match_analytic_jacobian() {
        let f = MapOracle::new(2, 2, |x| vec![x[0] * x[0] - x[1] * x[1], 2.0 * x[0] * x[1]]);
        let j = f.jacobian(&[0.7, -0.3]);
        let exact = [[1.4, 0.6], [-0.6, 1.4]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((j[(i, k)] - exact[i][k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn newton_inverse_of_cubic() {
        let f = MapOracle::new(2, 2, |x| vec![x[0].powi(3) + x[0], x[1]]);
        let inv = f.newton_inverse();
        let y = f.eval(&[0.8, -0.2]);
        let x = inv.eval(&y);
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] + 0.2).abs() < 1e-12);
    }

    #[test]
    fn composition_order() {
        let shift = MapOracle::identity(1).translated(vec![1.0]);
        let double = MapOracle::linear(DMatrix::from_element(1, 1, 2.0));
        assert_eq!(double.compose(&shift).eval(&[3.0]), vec![8.0]);
        assert_eq!(shift.compose(&double).eval(&[3.0]), vec![7.0]);
    }
}
