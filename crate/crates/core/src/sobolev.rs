//! Lattice-sampled maps and the discrete Sobolev toolkit: `W^{1,p}` norms,
//! blow-ups, good-point diagnostics, Fubini slicing, the maximal function and
//! chain-rule checks.
//!
//! Derivatives are central differences in the interior and second-order
//! one-sided differences on the boundary. Integrals use trapezoidal nodal
//! weights (each node owns the part of its cell that lies in the region).

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::degree::BoxDomain;
use crate::error::{Error, Result};
use crate::geom;
use crate::map::MapOracle;

/// A map `R^n ⊃ box → R^m` sampled on a uniform lattice. Values are stored
/// row-major, first axis slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub corner: Vec<f64>,
    pub sides: Vec<f64>,
    pub resolution: Vec<usize>,
    pub dim_out: usize,
    pub values: Vec<f64>,
}

/// Where an integral is taken.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Whole,
    SubBox(BoxDomain),
    Ball { center: Vec<f64>, radius: f64 },
}

impl GridFunction {
    pub fn new(corner: Vec<f64>, sides: Vec<f64>, resolution: Vec<usize>, dim_out: usize, values: Vec<f64>) -> Result<GridFunction> {
        let n = corner.len();
        if sides.len() != n || resolution.len() != n || n == 0 || dim_out == 0 {
            return Err(Error::DimensionMismatch("corner, sides and resolution must have equal length".into()));
        }
        if resolution.iter().any(|&r| r < 3) {
            return Err(Error::InvalidArgument("resolution must be at least 3 per axis".into()));
        }
        if sides.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidArgument("sides must be positive".into()));
        }
        let count: usize = resolution.iter().product();
        if values.len() != count * dim_out {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {count} nodes of {dim_out} components",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("values must be finite".into()));
        }
        Ok(GridFunction {
            corner,
            sides,
            resolution,
            dim_out,
            values,
        })
    }

    /// Samples `f` on the lattice of the box.
    pub fn sample(f: &MapOracle, corner: &[f64], sides: &[f64], resolution: &[usize]) -> Result<GridFunction> {
        if f.dim_in() != corner.len() {
            return Err(Error::DimensionMismatch(format!(
                "map takes R^{} but the box is in R^{}",
                f.dim_in(),
                corner.len()
            )));
        }
        let shell = GridFunction {
            corner: corner.to_vec(),
            sides: sides.to_vec(),
            resolution: resolution.to_vec(),
            dim_out: f.dim_out(),
            values: Vec::new(),
        };
        let values: Vec<f64> = (0..shell.node_count())
            .into_par_iter()
            .flat_map_iter(|i| f.eval(&shell.node_point(i)))
            .collect();
        GridFunction::new(corner.to_vec(), sides.to_vec(), resolution.to_vec(), f.dim_out(), values)
    }

    pub fn dim_in(&self) -> usize {
        self.corner.len()
    }

    pub fn node_count(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.sides[axis] / (self.resolution[axis] - 1) as f64
    }

    pub fn domain(&self) -> BoxDomain {
        BoxDomain {
            lo: self.corner.clone(),
            hi: self.corner.iter().zip(&self.sides).map(|(c, s)| c + s).collect(),
        }
    }

    fn strides(&self) -> Vec<usize> {
        let n = self.dim_in();
        let mut s = vec![1; n];
        for i in (0..n.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.resolution[i + 1];
        }
        s
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut rem = flat;
        let mut idx = vec![0; self.dim_in()];
        for i in (0..self.dim_in()).rev() {
            idx[i] = rem % self.resolution[i];
            rem /= self.resolution[i];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn node_point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.corner[a] + i as f64 * self.spacing(a))
            .collect()
    }

    pub fn value(&self, flat: usize) -> &[f64] {
        &self.values[flat * self.dim_out..(flat + 1) * self.dim_out]
    }

    /// Lattice node closest to `x` (clamped to the box).
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let idx: Vec<usize> = (0..self.dim_in())
            .map(|a| {
                let t = ((x[a] - self.corner[a]) / self.spacing(a)).round();
                t.clamp(0.0, (self.resolution[a] - 1) as f64) as usize
            })
            .collect();
        self.flat_index(&idx)
    }

    /// Finite-difference derivative at a node, `dim_out × dim_in`.
    pub fn gradient(&self, flat: usize) -> DMatrix<f64> {
        let n = self.dim_in();
        let m = self.dim_out;
        let idx = self.multi_index(flat);
        let strides = self.strides();
        let mut d = DMatrix::zeros(m, n);
        for a in 0..n {
            let h = self.spacing(a);
            let i = idx[a];
            let last = self.resolution[a] - 1;
            let at = |k: isize| self.value((flat as isize + k * strides[a] as isize) as usize);
            for c in 0..m {
                d[(c, a)] = if i == 0 {
                    (-3.0 * at(0)[c] + 4.0 * at(1)[c] - at(2)[c]) / (2.0 * h)
                } else if i == last {
                    (3.0 * at(0)[c] - 4.0 * at(-1)[c] + at(-2)[c]) / (2.0 * h)
                } else {
                    (at(1)[c] - at(-1)[c]) / (2.0 * h)
                };
            }
        }
        d
    }

    /// Multilinear interpolation; `None` outside the box.
    pub fn interpolate(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.dim_out];
        self.interpolate_add(x, 1.0, &mut out).then_some(out)
    }

    /// `out += weight · interpolate(x)` without allocating; false (and `out`
    /// untouched) outside the box. At most 8 input dimensions.
    pub fn interpolate_add(&self, x: &[f64], weight: f64, out: &mut [f64]) -> bool {
        let n = self.dim_in();
        assert!(n <= 8, "interpolation supports at most 8 dimensions");
        let mut base = 0usize;
        let mut stride = [0usize; 8];
        let mut frac = [0.0; 8];
        let mut s = 1;
        for a in (0..n).rev() {
            let t = (x[a] - self.corner[a]) / self.spacing(a);
            let last = (self.resolution[a] - 1) as f64;
            if t < -1e-9 || t > last + 1e-9 {
                return false;
            }
            let t = t.clamp(0.0, last);
            let i = (t.floor() as usize).min(self.resolution[a] - 2);
            base += i * s;
            stride[a] = s;
            frac[a] = t - i as f64;
            s *= self.resolution[a];
        }
        for corner in 0..(1usize << n) {
            let mut w = weight;
            let mut flat = base;
            for a in 0..n {
                if (corner >> a) & 1 == 1 {
                    flat += stride[a];
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w == 0.0 {
                continue;
            }
            let v = self.value(flat);
            for c in 0..self.dim_out {
                out[c] += w * v[c];
            }
        }
        true
    }

    /// Node-wise `self − f`.
    pub fn minus_oracle(&self, f: &MapOracle) -> GridFunction {
        let mut g = self.clone();
        for i in 0..self.node_count() {
            let v = f.eval(&self.node_point(i));
            for c in 0..self.dim_out {
                g.values[i * self.dim_out + c] -= v[c];
            }
        }
        g
    }

    /// Node-wise `self − other` on an identical lattice.
    pub fn minus(&self, other: &GridFunction) -> Result<GridFunction> {
        if self.corner != other.corner || self.sides != other.sides || self.resolution != other.resolution || self.dim_out != other.dim_out {
            return Err(Error::DimensionMismatch("grids differ".into()));
        }
        let mut g = self.clone();
        for (a, b) in g.values.iter_mut().zip(&other.values) {
            *a -= b;
        }
        Ok(g)
    }

    pub fn scaled(&self, lambda: f64) -> GridFunction {
        let mut g = self.clone();
        g.values.iter_mut().for_each(|v| *v *= lambda);
        g
    }

    /// Per-axis weight of node `i`: the length of its cell inside `[a, b]`.
    fn axis_weight(&self, axis: usize, i: usize, a: f64, b: f64) -> f64 {
        let h = self.spacing(axis);
        let x = self.corner[axis] + i as f64 * h;
        let lo = (x - h / 2.0).max(self.corner[axis]).max(a);
        let hi = (x + h / 2.0).min(self.corner[axis] + self.sides[axis]).min(b);
        (hi - lo).max(0.0)
    }

    /// Quadrature weight of every node for the region (zero outside it).
    pub fn weights(&self, region: &Region) -> Result<Vec<f64>> {
        let n = self.dim_in();
        let (lo, hi): (Vec<f64>, Vec<f64>) = match region {
            Region::Whole => (vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n]),
            Region::SubBox(b) => {
                if b.dim() != n {
                    return Err(Error::DimensionMismatch("sub-box dimension".into()));
                }
                (b.lo.clone(), b.hi.clone())
            }
            Region::Ball { center, .. } => {
                if center.len() != n {
                    return Err(Error::DimensionMismatch("ball centre dimension".into()));
                }
                (vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n])
            }
        };
        let per_axis: Vec<Vec<f64>> = (0..n)
            .map(|a| (0..self.resolution[a]).map(|i| self.axis_weight(a, i, lo[a], hi[a])).collect())
            .collect();
        let w: Vec<f64> = (0..self.node_count())
            .map(|flat| {
                let idx = self.multi_index(flat);
                let mut w: f64 = idx.iter().enumerate().map(|(a, &i)| per_axis[a][i]).product();
                if let Region::Ball { center, radius } = region {
                    if geom::distance(&self.node_point(flat), center) > *radius {
                        w = 0.0;
                    }
                }
                w
            })
            .collect();
        if w.iter().all(|&x| x == 0.0) {
            return Err(Error::EmptySubdomain);
        }
        Ok(w)
    }

    /// Text format: `n m`, the resolutions, the corner, the sides, then one
    /// line of `m` values per node (row-major, first axis slowest).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "{} {}", self.dim_in(), self.dim_out);
        let _ = writeln!(out, "{}", self.resolution.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" "));
        let _ = writeln!(out, "{}", join(&self.corner));
        let _ = writeln!(out, "{}", join(&self.sides));
        for i in 0..self.node_count() {
            let _ = writeln!(out, "{}", join(self.value(i)));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<GridFunction> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::Parse(format!("missing {what}")));
        let head: Vec<usize> = parse_line(next("header")?)?;
        if head.len() != 2 {
            return Err(Error::Parse("header must be `n m`".into()));
        }
        let (n, m) = (head[0], head[1]);
        let resolution: Vec<usize> = parse_line(next("resolution")?)?;
        let corner: Vec<f64> = parse_line(next("corner")?)?;
        let sides: Vec<f64> = parse_line(next("sides")?)?;
        if resolution.len() != n || corner.len() != n || sides.len() != n {
            return Err(Error::Parse(format!("expected {n} entries in the resolution, corner and sides lines")));
        }
        let count: usize = resolution.iter().product();
        let mut values = Vec::with_capacity(count * m);
        for i in 0..count {
            let v: Vec<f64> = parse_line(next("sample")?)?;
            if v.len() != m {
                return Err(Error::Parse(format!("sample {i} has {} components, expected {m}", v.len())));
            }
            values.extend(v);
        }
        GridFunction::new(corner, sides, resolution, m, values)
    }

    /// Nodes in the closed ball `B(c, r)`, plus the number of nodes of the
    /// infinite lattice extension that the ball contains.
    fn ball_nodes(&self, c: &[f64], r: f64) -> (Vec<usize>, usize) {
        let n = self.dim_in();
        let h: Vec<f64> = (0..n).map(|a| self.spacing(a)).collect();
        let lo: Vec<i64> = (0..n).map(|a| ((c[a] - r - self.corner[a]) / h[a]).ceil() as i64).collect();
        let hi: Vec<i64> = (0..n).map(|a| ((c[a] + r - self.corner[a]) / h[a]).floor() as i64).collect();
        let mut inside = Vec::new();
        let mut total = 0usize;
        let mut idx = lo.clone();
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return (inside, 0);
        }
        loop {
            let mut d2 = 0.0;
            for a in 0..n {
                let x = self.corner[a] + idx[a] as f64 * h[a] - c[a];
                d2 += x * x;
            }
            if d2 <= r * r * (1.0 + 1e-12) {
                total += 1;
                if idx.iter().enumerate().all(|(a, &i)| i >= 0 && (i as usize) < self.resolution[a]) {
                    let u: Vec<usize> = idx.iter().map(|&i| i as usize).collect();
                    inside.push(self.flat_index(&u));
                }
            }
            let mut a = n;
            loop {
                if a == 0 {
                    return (inside, total);
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] <= hi[a] {
                    break;
                }
                idx[a] = lo[a];
            }
        }
    }
}

fn parse_line<T: std::str::FromStr>(line: &str) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| Error::Parse(format!("bad token `{t}`"))))
        .collect()
}

/// `(Σ w (|f|^p + |Df|_HS^p))^{1/p}` over the region.
pub fn w1p_norm(f: &GridFunction, p: f64, region: &Region) -> Result<f64> {
    Ok(w1p_norm_pow(f, p, region)?.powf(1.0 / p))
}

/// `‖f‖^p_{W^{1,p}}` over the region.
pub fn w1p_norm_pow(f: &GridFunction, p: f64, region: &Region) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} < 1")));
    }
    let w = f.weights(region)?;
    Ok((0..f.node_count())
        .into_par_iter()
        .filter(|&i| w[i] > 0.0)
        .map(|i| w[i] * (geom::norm(f.value(i)).powf(p) + geom::hs_norm(&f.gradient(i)).powf(p)))
        .sum())
}

/// Where [`blow_up`] reads the map from.
#[derive(Debug, Clone)]
pub enum BlowUpSource<'a> {
    /// An analytic map, optionally restricted to a box.
    Oracle(&'a MapOracle, Option<&'a BoxDomain>),
    /// A sampled map, interpolated multilinearly.
    Grid(&'a GridFunction),
}

/// `f_r(x) = (f(x_o + r x) − f(x_o)) / r` sampled on `[−1, 1]^n` with
/// `resolution` nodes per axis.
pub fn blow_up(source: &BlowUpSource<'_>, x_o: &[f64], r: f64, resolution: usize) -> Result<GridFunction> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius r = {r} must be positive")));
    }
    let n = x_o.len();
    let reach = r * (n as f64).sqrt();
    let domain = match source {
        BlowUpSource::Oracle(f, dom) => {
            if f.dim_in() != n {
                return Err(Error::DimensionMismatch("x_o dimension".into()));
            }
            dom.cloned()
        }
        BlowUpSource::Grid(g) => {
            if g.dim_in() != n {
                return Err(Error::DimensionMismatch("x_o dimension".into()));
            }
            Some(g.domain())
        }
    };
    if let Some(d) = &domain {
        for a in 0..n {
            if x_o[a] - reach < d.lo[a] - 1e-12 || x_o[a] + reach > d.hi[a] + 1e-12 {
                return Err(Error::OutOfDomain(format!(
                    "B(x_o, r√n) with r = {r} leaves the domain along axis {a}"
                )));
            }
        }
    }
    let eval = |x: &[f64]| -> Vec<f64> {
        match source {
            BlowUpSource::Oracle(f, _) => f.eval(x),
            BlowUpSource::Grid(g) => g.interpolate(x).expect("checked against the domain"),
        }
    };
    let f0 = eval(x_o);
    let corner = vec![-1.0; n];
    let sides = vec![2.0; n];
    let res = vec![resolution; n];
    let shell = GridFunction {
        corner: corner.clone(),
        sides: sides.clone(),
        resolution: res.clone(),
        dim_out: f0.len(),
        values: Vec::new(),
    };
    let values: Vec<f64> = (0..shell.node_count())
        .flat_map(|i| {
            let x = shell.node_point(i);
            let y: Vec<f64> = x_o.iter().zip(&x).map(|(a, b)| a + r * b).collect();
            eval(&y).iter().zip(&f0).map(|(v, v0)| (v - v0) / r).collect::<Vec<f64>>()
        })
        .collect();
    GridFunction::new(corner, sides, res, f0.len(), values)
}

/// The unit ball `B = B(0, 1)`.
pub fn unit_ball(n: usize) -> Region {
    Region::Ball {
        center: vec![0.0; n],
        radius: 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Good,
    Inconclusive,
    Bad,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodPointReport {
    pub point: Vec<f64>,
    pub radii: Vec<f64>,
    /// `⨍_{B(x,r)} |Df(y) − Df(x)|^p`.
    pub lebesgue_averages: Vec<f64>,
    /// `⨍_{B(x,r)} |(f(y) − f(x) − Df(x)(y − x)) / r|^p`.
    pub cz_averages: Vec<f64>,
    pub verdict: Verdict,
}

const NEGLIGIBLE: f64 = 1e-12;

fn decays(v: &[f64]) -> bool {
    let z = |x: f64| if x < NEGLIGIBLE { 0.0 } else { x };
    let tail = &v[v.len().saturating_sub(3)..];
    let monotone = tail.windows(2).all(|w| z(w[1]) <= z(w[0]));
    let last = z(*v.last().unwrap());
    monotone && (last == 0.0 || last < 0.1 * z(v[0]))
}

/// Both good-point averages at the node nearest to `x` over decreasing radii.
pub fn good_point_check(f: &GridFunction, x: &[f64], p: f64, radii: &[f64]) -> Result<GoodPointReport> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] < w[0])) || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidArgument("radii must be positive and strictly decreasing".into()));
    }
    let node = f.nearest_node(x);
    let xo = f.node_point(node);
    let dom = f.domain();
    for a in 0..f.dim_in() {
        if xo[a] - radii[0] < dom.lo[a] - 1e-12 || xo[a] + radii[0] > dom.hi[a] + 1e-12 {
            return Err(Error::OutOfDomain(format!("ball of radius {} leaves the box", radii[0])));
        }
    }
    let df = f.gradient(node);
    let f0 = f.value(node).to_vec();
    let mut leb = Vec::new();
    let mut cz = Vec::new();
    for &r in radii {
        let (nodes, _) = f.ball_nodes(&xo, r);
        let (mut a, mut b) = (0.0, 0.0);
        for &i in &nodes {
            let y = f.node_point(i);
            let dy: Vec<f64> = y.iter().zip(&xo).map(|(u, v)| u - v).collect();
            let lin = geom::mat_vec(&df, &dy);
            let rem: Vec<f64> = (0..f.dim_out).map(|c| (f.value(i)[c] - f0[c] - lin[c]) / r).collect();
            a += geom::hs_norm(&(f.gradient(i) - &df)).powf(p);
            b += geom::norm(&rem).powf(p);
        }
        leb.push(a / nodes.len() as f64);
        cz.push(b / nodes.len() as f64);
    }
    let z = |x: f64| if x < NEGLIGIBLE { 0.0 } else { x };
    let verdict = if decays(&leb) && decays(&cz) {
        Verdict::Good
    } else if z(*leb.last().unwrap()) >= 0.5 * z(leb[0]) && z(leb[0]) > 0.0 {
        Verdict::Bad
    } else {
        Verdict::Inconclusive
    };
    Ok(GoodPointReport {
        point: xo,
        radii: radii.to_vec(),
        lebesgue_averages: leb,
        cz_averages: cz,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FubiniReport {
    /// Number of leading axes that index slices.
    pub slice_axes: usize,
    pub slice_points: Vec<Vec<f64>>,
    /// Quadrature weight of each slice index (cell volume in the first axes).
    pub slice_weights: Vec<f64>,
    /// `‖f_x‖_{W^{1,p}}` of the slice map with its own `ℓ` derivatives.
    pub slice_norms: Vec<f64>,
    /// `F(x)`: the slice integral of `|f|^p + |Df|^p` with the full gradient, to the `1/p`.
    pub full_gradient_norms: Vec<f64>,
    /// `Σ_x F(x)^p · w_x`.
    pub sliced_total: f64,
    /// `‖f‖^p_{W^{1,p}}` over the whole box.
    pub total: f64,
    /// Slice distances `‖f_x − g_x‖` (own derivatives) when `g` is given.
    pub distances: Option<Vec<f64>>,
    /// Slice distances with the full gradient, whose `p`-th powers sum to `‖f − g‖^p`.
    pub full_gradient_distances: Option<Vec<f64>>,
}

/// Slices `f` along the last `l` axes: for every lattice point `x` of the
/// first `n − l` axes, the map `z ↦ f(x, z)`.
pub fn fubini_slices(f: &GridFunction, l: usize, p: f64, g: Option<&GridFunction>) -> Result<FubiniReport> {
    let n = f.dim_in();
    if l == 0 || l >= n {
        return Err(Error::DimensionMismatch(format!("split (n − ℓ, ℓ) = ({}, {l}) is not a partition", n as i64 - l as i64)));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} < 1")));
    }
    let diff = match g {
        Some(g) => Some(f.minus(g)?),
        None => None,
    };
    let k = n - l;
    let whole = f.weights(&Region::Whole)?;
    let outer_count: usize = f.resolution[..k].iter().product();
    let inner_count: usize = f.resolution[k..].iter().product();
    let outer_w = |o: usize| -> f64 {
        let mut rem = o;
        let mut w = 1.0;
        for a in (0..k).rev() {
            let i = rem % f.resolution[a];
            rem /= f.resolution[a];
            w *= f.axis_weight(a, i, f64::NEG_INFINITY, f64::INFINITY);
        }
        w
    };
    let slice_sums = |h: &GridFunction, o: usize| -> (f64, f64) {
        let ow = outer_w(o);
        let (mut own, mut full) = (0.0, 0.0);
        for i in 0..inner_count {
            let flat = o * inner_count + i;
            let w = whole[flat] / ow;
            let d = h.gradient(flat);
            let v = geom::norm(h.value(flat)).powf(p);
            let own_grad = geom::hs_norm(&d.columns(k, l).into_owned()).powf(p);
            own += w * (v + own_grad);
            full += w * (v + geom::hs_norm(&d).powf(p));
        }
        (own, full)
    };
    let per_slice: Vec<(f64, f64)> = (0..outer_count).into_par_iter().map(|o| slice_sums(f, o)).collect();
    let slice_weights: Vec<f64> = (0..outer_count).map(outer_w).collect();
    let slice_points: Vec<Vec<f64>> = (0..outer_count).map(|o| f.node_point(o * inner_count)[..k].to_vec()).collect();
    let sliced_total = per_slice.iter().zip(&slice_weights).map(|(s, w)| s.1 * w).sum();
    let total = w1p_norm_pow(f, p, &Region::Whole)?;
    let (distances, full_gradient_distances) = match &diff {
        Some(d) => {
            let s: Vec<(f64, f64)> = (0..outer_count).into_par_iter().map(|o| slice_sums(d, o)).collect();
            (
                Some(s.iter().map(|x| x.0.powf(1.0 / p)).collect()),
                Some(s.iter().map(|x| x.1.powf(1.0 / p)).collect()),
            )
        }
        None => (None, None),
    };
    Ok(FubiniReport {
        slice_axes: k,
        slice_points,
        slice_weights,
        slice_norms: per_slice.iter().map(|s| s.0.powf(1.0 / p)).collect(),
        full_gradient_norms: per_slice.iter().map(|s| s.1.powf(1.0 / p)).collect(),
        sliced_total,
        total,
        distances,
        full_gradient_distances,
    })
}

/// Treatment of balls that leave the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// Skip the radius at that point.
    #[default]
    Skip,
    /// Treat `f` as zero outside the box.
    ZeroExtend,
}

/// `max_r ⨍_{B(x,r)} |f|` at a single point.
pub fn maximal_function_at(f: &GridFunction, x: &[f64], radii: &[f64], mode: BoundaryMode) -> Result<f64> {
    if f.dim_out != 1 {
        return Err(Error::DimensionMismatch("maximal function of a scalar grid".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidArgument("radii must be positive".into()));
    }
    let dom = f.domain();
    let mut best: Option<f64> = None;
    for &r in radii {
        let inside_box = (0..f.dim_in()).all(|a| x[a] - r >= dom.lo[a] - 1e-12 && x[a] + r <= dom.hi[a] + 1e-12);
        if mode == BoundaryMode::Skip && !inside_box {
            continue;
        }
        let (nodes, total) = f.ball_nodes(x, r);
        if total == 0 {
            continue;
        }
        let denom = match mode {
            BoundaryMode::Skip => nodes.len(),
            BoundaryMode::ZeroExtend => total,
        };
        let avg = nodes.iter().map(|&i| f.value(i)[0].abs()).sum::<f64>() / denom as f64;
        best = Some(best.map_or(avg, |b: f64| b.max(avg)));
    }
    Ok(match best {
        Some(b) => b,
        None => f.interpolate(x).map(|v| v[0].abs()).unwrap_or(0.0),
    })
}

/// The maximal function at every node.
pub fn maximal_function(f: &GridFunction, radii: &[f64], mode: BoundaryMode) -> Result<GridFunction> {
    maximal_function_at(f, &f.node_point(0), radii, mode)?;
    let values: Vec<f64> = (0..f.node_count())
        .into_par_iter()
        .map(|i| maximal_function_at(f, &f.node_point(i), radii, mode).expect("validated above"))
        .collect();
    GridFunction::new(f.corner.clone(), f.sides.clone(), f.resolution.clone(), 1, values)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRuleReport {
    pub samples: usize,
    /// Points with `|J_f| ≤ 1e−6`, left out of the comparison.
    pub excluded: usize,
    /// `max |f⁻¹(f(x)) − x|`.
    pub identity_error: f64,
    /// `max ‖Df(x)⁻¹ − Df⁻¹(f(x))‖_HS`.
    pub max_inverse_error: f64,
    /// `max |D(g∘f)(x) − Dg(f(x)) Df(x)|` when a scalar `g` is supplied.
    pub max_chain_error: Option<f64>,
}

pub const JACOBIAN_CUTOFF: f64 = 1e-6;

/// Sample points: an odd lattice (so coordinate hyperplanes through the box
/// centre are hit) plus `samples` seeded uniform points.
pub fn sample_points(domain: &BoxDomain, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = domain.dim();
    let mut m = ((samples as f64).powf(1.0 / n as f64).round() as usize).max(3);
    if m % 2 == 0 {
        m += 1;
    }
    let mut pts: Vec<Vec<f64>> = (0..m.pow(n as u32))
        .map(|flat| {
            let mut rem = flat;
            (0..n)
                .map(|a| {
                    let j = rem % m;
                    rem /= m;
                    domain.lo[a] + (domain.hi[a] - domain.lo[a]) * (j as f64 + 0.5) / m as f64
                })
                .collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        pts.push((0..n).map(|a| rng.gen_range(domain.lo[a]..domain.hi[a])).collect());
    }
    pts
}

/// Compares `Df(x)⁻¹` with `D(f⁻¹)(f(x))` and checks the chain rule for `g`.
pub fn chain_rule_check(
    f: &MapOracle,
    f_inv: &MapOracle,
    domain: &BoxDomain,
    samples: usize,
    g: Option<&MapOracle>,
) -> Result<ChainRuleReport> {
    let n = domain.dim();
    if f.dim_in() != n || f.dim_out() != n || f_inv.dim_in() != n || f_inv.dim_out() != n {
        return Err(Error::DimensionMismatch("f and f⁻¹ must map R^n to R^n".into()));
    }
    if let Some(g) = g {
        if g.dim_in() != n || g.dim_out() != 1 {
            return Err(Error::DimensionMismatch("g must be a scalar function on R^n".into()));
        }
    }
    let pts = sample_points(domain, samples, 0x5eed);
    let mut identity_error: f64 = 0.0;
    for x in &pts {
        identity_error = identity_error.max(geom::distance(&f_inv.eval(&f.eval(x)), x));
    }
    if identity_error > 1e-8 {
        return Err(Error::NotInverse(identity_error));
    }
    let mut excluded = 0;
    let mut max_inverse_error: f64 = 0.0;
    let mut max_chain: f64 = 0.0;
    for x in &pts {
        let df = f.jacobian(x);
        if df.determinant().abs() <= JACOBIAN_CUTOFF {
            excluded += 1;
            continue;
        }
        let inv = df.clone().try_inverse().expect("nonsingular above the cutoff");
        let dfinv = f_inv.jacobian(&f.eval(x));
        max_inverse_error = max_inverse_error.max(geom::hs_norm(&(inv - dfinv)));
        if let Some(g) = g {
            let lhs = g.compose(f).jacobian(x);
            let rhs = g.jacobian(&f.eval(x)) * &df;
            max_chain = max_chain.max(geom::hs_norm(&(lhs - rhs)));
        }
    }
    Ok(ChainRuleReport {
        samples: pts.len(),
        excluded,
        identity_error,
        max_inverse_error,
        max_chain_error: g.map(|_| max_chain),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseInequalityReport {
    pub pairs: usize,
    /// Smallest `C` with `|u(x) − u(y)| ≤ C |x − y| (M|Du|(x) + M|Du|(y))` on all pairs.
    pub fitted_constant: f64,
}

/// Fits the constant of the pointwise inequality on seeded random node pairs.
/// `M` uses dyadic radii from the lattice spacing up to `2|x − y|`, with `u`
/// extended by zero.
pub fn pointwise_inequality_check(u: &GridFunction, pairs: usize, seed: u64) -> Result<PointwiseInequalityReport> {
    if u.dim_out != 1 {
        return Err(Error::DimensionMismatch("scalar grid expected".into()));
    }
    let grad_norm: Vec<f64> = (0..u.node_count()).map(|i| geom::hs_norm(&u.gradient(i))).collect();
    let du = GridFunction::new(u.corner.clone(), u.sides.clone(), u.resolution.clone(), 1, grad_norm)?;
    let h = (0..u.dim_in()).map(|a| u.spacing(a)).fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fitted: f64 = 0.0;
    let mut done = 0;
    while done < pairs {
        let i = rng.gen_range(0..u.node_count());
        let j = rng.gen_range(0..u.node_count());
        if i == j {
            continue;
        }
        let (x, y) = (u.node_point(i), u.node_point(j));
        let d = geom::distance(&x, &y);
        let mut radii = Vec::new();
        let mut r = h;
        while r <= 2.0 * d {
            radii.push(r);
            r *= 2.0;
        }
        radii.push(2.0 * d);
        let mx = maximal_function_at(&du, &x, &radii, BoundaryMode::ZeroExtend)?;
        let my = maximal_function_at(&du, &y, &radii, BoundaryMode::ZeroExtend)?;
        let lhs = (u.value(i)[0] - u.value(j)[0]).abs();
        if lhs > 0.0 {
            fitted = fitted.max(lhs / (d * (mx + my)));
        }
        done += 1;
    }
    Ok(PointwiseInequalityReport {
        pairs,
        fitted_constant: fitted,
    })
}
