//! Small dense linear-algebra and sphere-geometry helpers shared by all modules.

use nalgebra::DMatrix;
use std::f64::consts::PI;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn normalized(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    a.iter().map(|x| x / n).collect()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Determinant of a square matrix given as columns.
///
/// Gaussian elimination with partial pivoting; avoids allocating a `DMatrix`
/// in hot quadrature loops.
pub fn det_columns(cols: &[Vec<f64>]) -> f64 {
    let n = cols.len();
    let mut a = vec![0.0; n * n];
    for (j, c) in cols.iter().enumerate() {
        debug_assert_eq!(c.len(), n);
        for i in 0..n {
            a[i * n + j] = c[i];
        }
    }
    det_row_major(&mut a, n)
}

/// Determinant of an `n x n` row-major matrix; the buffer is destroyed.
pub fn det_row_major(a: &mut [f64], n: usize) -> f64 {
    let mut det = 1.0;
    for k in 0..n {
        let mut piv = k;
        let mut best = a[k * n + k].abs();
        for i in (k + 1)..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            det = -det;
        }
        let d = a[k * n + k];
        det *= d;
        for i in (k + 1)..n {
            let f = a[i * n + k] / d;
            if f != 0.0 {
                for j in (k + 1)..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
    }
    det
}

/// Solves `A x = b` for `A` given as columns. Returns `None` when singular.
pub fn solve_columns(cols: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = cols.len();
    let m = DMatrix::from_fn(n, n, |i, j| cols[j][i]);
    let lu = m.lu();
    lu.solve(&nalgebra::DVector::from_column_slice(b))
        .map(|v| v.iter().copied().collect())
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The reflection negating the last coordinate, `Diag(1, ..., 1, -1)`.
pub fn reflection_matrix(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::identity(n, n);
    m[(n - 1, n - 1)] = -1.0;
    m
}

pub fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
        .collect()
}

/// Surface measure of the unit sphere `S^k` in `R^{k+1}`.
pub fn sphere_volume(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_volume(k - 2),
    }
}

/// Lebesgue measure of the unit ball in `R^n`.
pub fn ball_volume(n: usize) -> f64 {
    if n == 0 {
        1.0
    } else {
        sphere_volume(n - 1) / n as f64
    }
}

/// Orthonormal basis `(e_1, ..., e_k)` of the tangent space at `u` in `S^k`,
/// oriented so that `det(u, e_1, ..., e_k) = +1` (outward normal first).
pub fn tangent_frame(u: &[f64]) -> Vec<Vec<f64>> {
    let dim = u.len();
    if dim == 2 {
        return vec![vec![-u[1], u[0]]];
    }
    // Gram-Schmidt on the coordinate axes, least aligned with u first.
    let mut axes: Vec<usize> = (0..dim).collect();
    axes.sort_by(|&a, &b| u[a].abs().partial_cmp(&u[b].abs()).unwrap());
    let mut basis: Vec<Vec<f64>> = vec![u.to_vec()];
    for &ax in &axes {
        if basis.len() == dim {
            break;
        }
        let mut v = vec![0.0; dim];
        v[ax] = 1.0;
        for b in &basis {
            let c = dot(&v, b);
            for i in 0..dim {
                v[i] -= c * b[i];
            }
        }
        let nv = norm(&v);
        if nv < 1e-8 {
            continue;
        }
        // second pass for orthogonality to machine precision
        for b in &basis {
            let c = dot(&v, b);
            for i in 0..dim {
                v[i] -= c * b[i];
            }
        }
        basis.push(normalized(&v));
    }
    let mut frame: Vec<Vec<f64>> = basis.split_off(1);
    let mut cols = vec![u.to_vec()];
    cols.extend(frame.iter().cloned());
    if det_columns(&cols) < 0.0 {
        let last = frame.len() - 1;
        frame[last] = scale(&frame[last], -1.0);
    }
    frame
}

/// Point reached from `u` along the unit tangent `e` after arc length `h`.
pub fn geodesic_step(u: &[f64], e: &[f64], h: f64) -> Vec<f64> {
    let (s, c) = h.sin_cos();
    u.iter().zip(e).map(|(a, b)| c * a + s * b).collect()
}

/// Gram determinant `sqrt(det(V^T V))` of the vectors `vs`: their spanned k-volume.
pub fn gram_volume(vs: &[Vec<f64>]) -> f64 {
    let k = vs.len();
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            g[i * k + j] = dot(&vs[i], &vs[j]);
        }
    }
    det_row_major(&mut g, k).max(0.0).sqrt()
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Newton on P_n starting from the Chebyshev-like guess.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes.push(0.5 * (1.0 - x));
        weights.push(0.5 * w);
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_volumes() {
        assert!((sphere_volume(2) - 4.0 * PI).abs() < 1e-12);
        assert!((sphere_volume(3) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((ball_volume(2) - PI).abs() < 1e-12);
        assert!((ball_volume(3) - 4.0 / 3.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn frames_are_oriented_and_orthonormal() {
        for u in [
            vec![0.6, 0.8],
            vec![0.0, 0.0, 1.0],
            vec![0.3, -0.4, (1.0f64 - 0.25).sqrt()],
            vec![0.5, 0.5, 0.5, 0.5],
        ] {
            let f = tangent_frame(&u);
            assert_eq!(f.len(), u.len() - 1);
            let mut cols = vec![u.clone()];
            cols.extend(f.iter().cloned());
            assert!((det_columns(&cols) - 1.0).abs() < 1e-10);
            for (i, a) in f.iter().enumerate() {
                assert!(dot(a, &u).abs() < 1e-12);
                for (j, b) in f.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(a, b) - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre_unit(6);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(9)).sum();
        assert!((s - 0.1).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn determinant_matches_nalgebra() {
        let cols = vec![
            vec![2.0, 1.0, 0.5],
            vec![-1.0, 3.0, 0.0],
            vec![0.25, 0.0, 1.5],
        ];
        let m = DMatrix::from_fn(3, 3, |i, j| cols[j][i]);
        assert!((det_columns(&cols) - m.determinant()).abs() < 1e-12);
    }
}
