//! Periodic grids on the torus C / (Z + tau Z) with a conformal factor lambda^2.
//!
//! Nodes sit at lattice coordinates (a, b) = (i/n, j/n), with z = a + tau b. Fields are stored
//! node-major with index `p = j * n + i`, optionally with several components per node.
//! All first derivatives are second-order central differences; the Laplacian is the composition
//! of two of them, so it is the exact discrete gradient of the central-difference Dirichlet form.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SigmaError};

/// One Fourier mode of a trigonometric conformal factor, in lattice coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigMode {
    pub ka: i32,
    pub kb: i32,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// How lambda^2 is specified. Closed forms keep an analytic curvature available.
#[derive(Clone, Debug, PartialEq)]
pub enum LambdaSpec {
    Constant(f64),
    /// c0 + sum (cos * cos(theta) + sin * sin(theta)), theta = 2 pi (ka a + kb b)
    Trig {
        c0: f64,
        modes: Vec<TrigMode>,
    },
    Samples(Vec<f64>),
}

impl LambdaSpec {
    /// Value, (d_a, d_b) and (d_aa, d_ab, d_bb) at lattice point (a, b).
    fn jet(&self, a: f64, b: f64) -> Option<(f64, [f64; 2], [f64; 3])> {
        match self {
            LambdaSpec::Constant(c) => Some((*c, [0.0; 2], [0.0; 3])),
            LambdaSpec::Trig { c0, modes } => {
                let mut v = *c0;
                let mut g = [0.0; 2];
                let mut h = [0.0; 3];
                for m in modes {
                    let ka = 2.0 * PI * m.ka as f64;
                    let kb = 2.0 * PI * m.kb as f64;
                    let th = ka * a + kb * b;
                    let (s, c) = th.sin_cos();
                    let f = m.cos * c + m.sin * s;
                    let fp = -m.cos * s + m.sin * c;
                    v += f;
                    g[0] += ka * fp;
                    g[1] += kb * fp;
                    h[0] -= ka * ka * f;
                    h[1] -= ka * kb * f;
                    h[2] -= kb * kb * f;
                }
                Some((v, g, h))
            }
            LambdaSpec::Samples(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConformalDomain {
    n: usize,
    tau: Complex64,
    lambda_sq: Vec<f64>,
    spec: LambdaSpec,
}

impl ConformalDomain {
    pub fn new(n: usize, tau: Complex64, spec: LambdaSpec) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(SigmaError::InvalidGrid(format!(
                "n = {n}, need an even n >= 8"
            )));
        }
        if !(tau.im > 0.0) || !tau.re.is_finite() || !tau.im.is_finite() {
            return Err(SigmaError::InvalidModulus(tau.im));
        }
        let len = n * n;
        let lambda_sq = match &spec {
            LambdaSpec::Samples(s) => {
                if s.len() != len {
                    return Err(SigmaError::DimensionMismatch {
                        expected: len,
                        got: s.len(),
                    });
                }
                s.clone()
            }
            _ => (0..len)
                .map(|p| {
                    let (a, b) = ab_of(n, p);
                    spec.jet(a, b).expect("closed form").0
                })
                .collect(),
        };
        if let Some(bad) = lambda_sq.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(SigmaError::InvalidConformalFactor(format!(
                "lambda^2 must be positive, found {bad}"
            )));
        }
        Ok(Self {
            n,
            tau,
            lambda_sq,
            spec,
        })
    }

    pub fn flat(n: usize, tau: Complex64) -> Result<Self> {
        Self::new(n, tau, LambdaSpec::Constant(1.0))
    }

    /// Same grid and modulus, new conformal factor samples.
    pub fn with_lambda_sq(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(self.n, self.tau, LambdaSpec::Samples(samples))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn spec(&self) -> &LambdaSpec {
        &self.spec
    }

    pub fn lambda_sq(&self) -> &[f64] {
        &self.lambda_sq
    }

    /// Flat area element of one grid cell.
    pub fn cell_area(&self) -> f64 {
        self.tau.im / (self.n * self.n) as f64
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        (j % self.n) * self.n + (i % self.n)
    }

    pub fn node_ab(&self, p: usize) -> (f64, f64) {
        ab_of(self.n, p)
    }

    pub fn node_z(&self, p: usize) -> Complex64 {
        let (a, b) = self.node_ab(p);
        Complex64::new(a, 0.0) + self.tau * b
    }

    /// Neighbour indices (i+1, i-1, j+1, j-1) of node p, and whether each step wrapped.
    #[inline]
    pub fn neighbours(&self, p: usize) -> [(usize, bool); 4] {
        let n = self.n;
        let i = p % n;
        let j = p / n;
        let ip = if i + 1 == n {
            (j * n, true)
        } else {
            (p + 1, false)
        };
        let im = if i == 0 {
            (j * n + n - 1, true)
        } else {
            (p - 1, false)
        };
        let jp = if j + 1 == n {
            (i, true)
        } else {
            (p + n, false)
        };
        let jm = if j == 0 {
            ((n - 1) * n + i, true)
        } else {
            (p - n, false)
        };
        [ip, im, jp, jm]
    }

    /// Central difference along a, for fields with `stride` components per node.
    pub fn d_a<T>(&self, f: &[T], stride: usize) -> Vec<T>
    where
        T: Copy + Sub<Output = T> + Mul<f64, Output = T>,
    {
        self.central(f, stride, 0)
    }

    pub fn d_b<T>(&self, f: &[T], stride: usize) -> Vec<T>
    where
        T: Copy + Sub<Output = T> + Mul<f64, Output = T>,
    {
        self.central(f, stride, 1)
    }

    fn central<T>(&self, f: &[T], stride: usize, axis: usize) -> Vec<T>
    where
        T: Copy + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let half_n = 0.5 * self.n as f64;
        let mut out = Vec::with_capacity(f.len());
        for p in 0..self.len() {
            let nb = self.neighbours(p);
            let (fwd, bwd) = (nb[2 * axis].0, nb[2 * axis + 1].0);
            for c in 0..stride {
                out.push((f[fwd * stride + c] - f[bwd * stride + c]) * half_n);
            }
        }
        out
    }

    pub fn d_x<T>(&self, f: &[T], stride: usize) -> Vec<T>
    where
        T: Copy + Sub<Output = T> + Mul<f64, Output = T>,
    {
        self.d_a(f, stride)
    }

    pub fn d_y<T>(&self, f: &[T], stride: usize) -> Vec<T>
    where
        T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let fa = self.d_a(f, stride);
        let fb = self.d_b(f, stride);
        self.combine_y(&fa, &fb)
    }

    /// d_y from lattice derivatives: (d_b - Re tau d_a) / Im tau.
    pub fn combine_y<T>(&self, fa: &[T], fb: &[T]) -> Vec<T>
    where
        T: Copy + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let (t1, inv) = (self.tau.re, 1.0 / self.tau.im);
        fa.iter()
            .zip(fb)
            .map(|(&a, &b)| (b - a * t1) * inv)
            .collect()
    }

    pub fn d_z(&self, f: &[Complex64]) -> Vec<Complex64> {
        let fx = self.d_x(f, 1);
        let fy = self.d_y(f, 1);
        fx.iter()
            .zip(&fy)
            .map(|(x, y)| 0.5 * (x - Complex64::i() * y))
            .collect()
    }

    pub fn d_zbar(&self, f: &[Complex64]) -> Vec<Complex64> {
        let fx = self.d_x(f, 1);
        let fy = self.d_y(f, 1);
        fx.iter()
            .zip(&fy)
            .map(|(x, y)| 0.5 * (x + Complex64::i() * y))
            .collect()
    }

    /// Flat Laplacian d_x d_x + d_y d_y.
    pub fn laplacian_flat(&self, f: &[f64], stride: usize) -> Vec<f64> {
        let fx = self.d_x(f, stride);
        let fy = self.d_y(f, stride);
        let fxx = self.d_x(&fx, stride);
        let fyy = self.d_y(&fy, stride);
        fxx.iter().zip(&fyy).map(|(a, b)| a + b).collect()
    }

    pub fn laplace_beltrami(&self, f: &[f64]) -> Vec<f64> {
        let mut l = self.laplacian_flat(f, 1);
        for (v, l2) in l.iter_mut().zip(&self.lambda_sq) {
            *v /= l2;
        }
        l
    }

    /// Integral of f against the area form lambda^2 dx dy.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter()
            .zip(&self.lambda_sq)
            .map(|(v, l)| v * l)
            .sum::<f64>()
            * self.cell_area()
    }

    /// Integral of f against dx dy.
    pub fn integrate_flat(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.cell_area()
    }

    pub fn area(&self) -> f64 {
        self.lambda_sq.iter().sum::<f64>() * self.cell_area()
    }

    /// Gauss curvature -Delta log(lambda) / lambda^2; analytic for closed-form factors.
    pub fn gauss_curvature(&self) -> Vec<f64> {
        match self.spec {
            LambdaSpec::Samples(_) => self.gauss_curvature_discrete(),
            _ => (0..self.len())
                .map(|p| {
                    let (a, b) = self.node_ab(p);
                    let (f, g, h) = self.spec.jet(a, b).expect("closed form");
                    let (t1, t2) = (self.tau.re, self.tau.im);
                    let fx = g[0];
                    let fy = (g[1] - t1 * g[0]) / t2;
                    let fxx = h[0];
                    let fyy = (h[2] - 2.0 * t1 * h[1] + t1 * t1 * h[0]) / (t2 * t2);
                    let lap_log = (fxx + fyy) / f - (fx * fx + fy * fy) / (f * f);
                    -0.5 * lap_log / f
                })
                .collect(),
        }
    }

    pub fn gauss_curvature_discrete(&self) -> Vec<f64> {
        let log_l: Vec<f64> = self.lambda_sq.iter().map(|v| v.ln()).collect();
        self.laplace_beltrami(&log_l)
            .into_iter()
            .map(|v| -0.5 * v)
            .collect()
    }

    /// Effective spacing h with h^2 = 1/n^2 at tau = i; shrinks for skewed or thin moduli.
    pub fn cfl_spacing(&self) -> f64 {
        let r = (1.0 + self.tau.re.abs()) / self.tau.im;
        (2.0 / (1.0 + r * r)).sqrt() / self.n as f64
    }

    /// Explicit Euler step that is stable for the wide Laplacian.
    pub fn default_dt(&self) -> f64 {
        let h = self.cfl_spacing();
        let lmin = self.lambda_sq.iter().cloned().fold(f64::INFINITY, f64::min);
        h * h * lmin / 8.0
    }
}

fn ab_of(n: usize, p: usize) -> (f64, f64) {
    ((p % n) as f64 / n as f64, (p / n) as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trig(a: f64) -> LambdaSpec {
        LambdaSpec::Trig {
            c0: 1.0,
            modes: vec![TrigMode {
                ka: 1,
                kb: 0,
                cos: 0.0,
                sin: a,
            }],
        }
    }

    #[test]
    fn rejects_bad_grids() {
        let t = Complex64::new(0.0, 1.0);
        assert!(ConformalDomain::flat(7, t).is_err());
        assert!(ConformalDomain::flat(6, t).is_err());
        assert!(ConformalDomain::flat(8, Complex64::new(0.0, -1.0)).is_err());
        assert!(ConformalDomain::new(8, t, LambdaSpec::Constant(0.0)).is_err());
    }

    #[test]
    fn constants_integrate_to_area() {
        let dom = ConformalDomain::flat(16, Complex64::new(0.3, 1.2)).unwrap();
        assert!((dom.integrate(&vec![1.0; dom.len()]) - 1.2).abs() < 1e-14);
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        let dom = ConformalDomain::new(16, Complex64::new(0.2, 0.9), trig(0.5)).unwrap();
        let l = dom.laplace_beltrami(&vec![3.0; dom.len()]);
        assert!(l.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn trig_mode_is_an_eigenfunction_of_the_wide_stencil() {
        // cos(2 pi a): wide stencil symbol is -(n sin(2 pi / n))^2
        let n = 16;
        let dom = ConformalDomain::flat(n, Complex64::new(0.0, 1.0)).unwrap();
        let f: Vec<f64> = (0..dom.len())
            .map(|p| (2.0 * PI * dom.node_ab(p).0).cos())
            .collect();
        let l = dom.laplacian_flat(&f, 1);
        let sym = -(n as f64 * (2.0 * PI / n as f64).sin()).powi(2);
        for (a, b) in l.iter().zip(&f) {
            assert!((a - sym * b).abs() < 1e-10);
        }
    }

    #[test]
    fn laplacian_converges_on_sheared_modulus() {
        let tau = Complex64::new(0.4, 0.8);
        let mut errs = vec![];
        for n in [16, 32, 64] {
            let dom = ConformalDomain::flat(n, tau).unwrap();
            // u = sin(2 pi (a + 2 b)); in x, y: a = x - t1 y / t2, b = y / t2
            let kx = 2.0 * PI;
            let ky = 2.0 * PI * (2.0 - tau.re) / tau.im;
            let f: Vec<f64> = (0..dom.len())
                .map(|p| {
                    let (a, b) = dom.node_ab(p);
                    (2.0 * PI * (a + 2.0 * b)).sin()
                })
                .collect();
            let l = dom.laplacian_flat(&f, 1);
            let e = l
                .iter()
                .zip(&f)
                .map(|(v, u)| (v + (kx * kx + ky * ky) * u).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(
            errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5,
            "{errs:?}"
        );
    }

    #[test]
    fn analytic_curvature_matches_discrete() {
        let mut errs = vec![];
        for n in [32, 64] {
            let dom = ConformalDomain::new(n, Complex64::new(0.1, 1.0), trig(0.3)).unwrap();
            let ka = dom.gauss_curvature();
            let kd = dom.gauss_curvature_discrete();
            errs.push(
                ka.iter()
                    .zip(&kd)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            );
            // total curvature of a torus vanishes
            assert!(dom.integrate(&ka).abs() < 1e-10);
        }
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn dz_of_z_is_one() {
        // z is not periodic, but its lattice differences are: use a linear ramp locally.
        let dom = ConformalDomain::flat(16, Complex64::new(0.3, 1.1)).unwrap();
        let e: Vec<Complex64> = (0..dom.len())
            .map(|p| {
                let (a, b) = dom.node_ab(p);
                let th = 2.0 * PI * a;
                Complex64::new(th.cos(), th.sin()) * (2.0 * PI * b).cos()
            })
            .collect();
        let zb = dom.d_zbar(&e);
        let z = dom.d_z(&e);
        // d_x = d_z + d_zbar
        let ex = dom.d_x(&e, 1);
        for k in 0..e.len() {
            assert!((z[k] + zb[k] - ex[k]).norm() < 1e-12);
        }
    }
}
