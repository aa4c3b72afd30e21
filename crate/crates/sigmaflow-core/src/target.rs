//! Target manifolds given in a single coordinate chart, possibly with a period lattice.
//!
//! Index conventions: `christoffel[i][j][k] = Gamma^i_{jk}`, `riemann[i][j][k][l] = R^i_{jkl}`
//! with `R(d_k, d_l) d_j = R^i_{jkl} d_i`, so the lowered tensor is
//! `R_{ijkl} = g(R(d_k, d_l) d_j, d_i)` and sectional curvature is `R_{1212} / det g`.
//! Arrays are flattened row-major.

use std::f64::consts::PI;
use std::fmt::Debug;

use nalgebra::DMatrix;

use crate::error::{Result, SigmaError};

const FD_CHRISTOFFEL: f64 = 1e-5;
const FD_RIEMANN: f64 = 1e-4;

/// Period lattice of a chart: y ~ y + sum k_m basis_m.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    basis: Vec<Vec<f64>>,
    dual: Vec<Vec<f64>>,
}

impl Lattice {
    pub fn new(basis: Vec<Vec<f64>>) -> Result<Self> {
        let m = basis.len();
        if m == 0 {
            return Ok(Self {
                basis,
                dual: vec![],
            });
        }
        let d = basis[0].len();
        if basis.iter().any(|b| b.len() != d) || m > d {
            return Err(SigmaError::InvalidTarget(
                "inconsistent period vectors".into(),
            ));
        }
        let gram = DMatrix::from_fn(m, m, |a, b| dot(&basis[a], &basis[b]));
        let inv = gram
            .try_inverse()
            .ok_or_else(|| SigmaError::InvalidTarget("degenerate period lattice".into()))?;
        let dual = (0..m)
            .map(|a| {
                (0..d)
                    .map(|c| (0..m).map(|b| inv[(a, b)] * basis[b][c]).sum())
                    .collect()
            })
            .collect();
        Ok(Self { basis, dual })
    }

    pub fn none() -> Self {
        Self {
            basis: vec![],
            dual: vec![],
        }
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    fn reduce(&self, y: &mut [f64], round: fn(f64) -> f64) {
        for (b, du) in self.basis.iter().zip(&self.dual) {
            let t = round(dot(du, y));
            if t != 0.0 {
                for (c, bc) in b.iter().enumerate() {
                    y[c] -= t * bc;
                }
            }
        }
    }

    /// Representative in the fundamental domain [0, 1) in lattice coordinates.
    pub fn wrap(&self, y: &mut [f64]) {
        self.reduce(y, f64::floor);
    }

    /// Minimal-image difference y1 - y0.
    pub fn delta(&self, y1: &[f64], y0: &[f64], out: &mut [f64]) {
        for c in 0..out.len() {
            out[c] = y1[c] - y0[c];
        }
        self.reduce(out, f64::round);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub trait TargetChart: Send + Sync + Debug {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    /// Metric components g_ij at y, row-major d x d.
    fn metric_into(&self, y: &[f64], g: &mut [f64]);

    fn lattice(&self) -> &Lattice;

    fn is_flat(&self) -> bool {
        false
    }

    /// Whether y lies in the chart.
    fn contains(&self, _y: &[f64]) -> bool {
        true
    }

    /// rho^2 when the metric is rho^2 times the Euclidean metric.
    fn conformal_factor(&self, _y: &[f64]) -> Option<f64> {
        None
    }

    fn area(&self) -> Option<f64> {
        None
    }

    /// Gamma^i_{jk}; central differences of the metric by default.
    fn christoffel_into(&self, y: &[f64], out: &mut [f64]) {
        fd_christoffel(self, y, out);
    }

    /// R^i_{jkl}; central differences of the Christoffel symbols by default.
    fn riemann_into(&self, y: &[f64], out: &mut [f64]) {
        fd_riemann(self, y, out);
    }

    /// Covariant derivative of the lowered curvature, `out[n][i][j][k][l] = (nabla_n R)_{ijkl}`.
    fn riemann_cov_into(&self, y: &[f64], out: &mut [f64]) {
        fd_riemann_cov(self, y, out);
    }

    fn wrap(&self, y: &mut [f64]) {
        self.lattice().wrap(y);
    }

    fn delta(&self, y1: &[f64], y0: &[f64], out: &mut [f64]) {
        self.lattice().delta(y1, y0, out);
    }

    /// Sectional curvature for two-dimensional targets.
    fn gauss_curvature(&self, y: &[f64]) -> Option<f64> {
        if self.dim() != 2 {
            return None;
        }
        let mut g = [0.0; 4];
        self.metric_into(y, &mut g);
        let low = riemann_lower(self, y);
        // R_{1212}, zero-based (0, 1, 0, 1)
        Some(low[5] / (g[0] * g[3] - g[1] * g[2]))
    }
}

/// Lowered curvature tensor R_{ijkl}.
pub fn riemann_lower<C: TargetChart + ?Sized>(chart: &C, y: &[f64]) -> Vec<f64> {
    let d = chart.dim();
    let mut g = vec![0.0; d * d];
    chart.metric_into(y, &mut g);
    let mut r = vec![0.0; d * d * d * d];
    chart.riemann_into(y, &mut r);
    let mut low = vec![0.0; r.len()];
    for i in 0..d {
        for m in 0..d {
            let gim = g[i * d + m];
            if gim == 0.0 {
                continue;
            }
            for jkl in 0..d * d * d {
                low[i * d * d * d + jkl] += gim * r[m * d * d * d + jkl];
            }
        }
    }
    low
}

/// Inverse of a small symmetric positive matrix.
pub fn invert(g: &[f64], d: usize) -> Vec<f64> {
    if d == 2 {
        let det = g[0] * g[3] - g[1] * g[2];
        return vec![g[3] / det, -g[1] / det, -g[2] / det, g[0] / det];
    }
    let m = DMatrix::from_row_slice(d, d, g);
    let inv = m.try_inverse().expect("metric must be invertible");
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = inv[(i, j)];
        }
    }
    out
}

pub fn fd_christoffel<C: TargetChart + ?Sized>(chart: &C, y: &[f64], out: &mut [f64]) {
    let d = chart.dim();
    let h = FD_CHRISTOFFEL;
    let mut g = vec![0.0; d * d];
    chart.metric_into(y, &mut g);
    let ginv = invert(&g, d);
    // dg[k][i][j] = d_k g_ij
    let mut dg = vec![0.0; d * d * d];
    let mut yp = y.to_vec();
    let mut gp = vec![0.0; d * d];
    let mut gm = vec![0.0; d * d];
    for k in 0..d {
        yp[k] = y[k] + h;
        chart.metric_into(&yp, &mut gp);
        yp[k] = y[k] - h;
        chart.metric_into(&yp, &mut gm);
        yp[k] = y[k];
        for ij in 0..d * d {
            dg[k * d * d + ij] = (gp[ij] - gm[ij]) / (2.0 * h);
        }
    }
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let mut s = 0.0;
                for m in 0..d {
                    s += ginv[i * d + m]
                        * (dg[j * d * d + m * d + k] + dg[k * d * d + m * d + j]
                            - dg[m * d * d + j * d + k]);
                }
                out[(i * d + j) * d + k] = 0.5 * s;
            }
        }
    }
}

pub fn fd_riemann<C: TargetChart + ?Sized>(chart: &C, y: &[f64], out: &mut [f64]) {
    let d = chart.dim();
    let h = FD_RIEMANN;
    let d3 = d * d * d;
    let mut gam = vec![0.0; d3];
    chart.christoffel_into(y, &mut gam);
    // dgam[k][i][j][l] = d_k Gamma^i_{jl}
    let mut dgam = vec![0.0; d * d3];
    let mut yp = y.to_vec();
    let mut gp = vec![0.0; d3];
    let mut gm = vec![0.0; d3];
    for k in 0..d {
        yp[k] = y[k] + h;
        chart.christoffel_into(&yp, &mut gp);
        yp[k] = y[k] - h;
        chart.christoffel_into(&yp, &mut gm);
        yp[k] = y[k];
        for c in 0..d3 {
            dgam[k * d3 + c] = (gp[c] - gm[c]) / (2.0 * h);
        }
    }
    let g3 = |i: usize, j: usize, k: usize| gam[(i * d + j) * d + k];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let mut r =
                        dgam[k * d3 + (i * d + l) * d + j] - dgam[l * d3 + (i * d + k) * d + j];
                    for m in 0..d {
                        r += g3(i, k, m) * g3(m, l, j) - g3(i, l, m) * g3(m, k, j);
                    }
                    out[((i * d + j) * d + k) * d + l] = r;
                }
            }
        }
    }
}

pub fn fd_riemann_cov<C: TargetChart + ?Sized>(chart: &C, y: &[f64], out: &mut [f64]) {
    let d = chart.dim();
    let h = FD_RIEMANN;
    let d4 = d * d * d * d;
    let low = riemann_lower(chart, y);
    let mut gam = vec![0.0; d * d * d];
    chart.christoffel_into(y, &mut gam);
    let mut yp = y.to_vec();
    for n in 0..d {
        yp[n] = y[n] + h;
        let rp = riemann_lower(chart, &yp);
        yp[n] = y[n] - h;
        let rm = riemann_lower(chart, &yp);
        yp[n] = y[n];
        for idx in 0..d4 {
            let (i, j, k, l) = (
                idx / (d * d * d),
                (idx / (d * d)) % d,
                (idx / d) % d,
                idx % d,
            );
            let mut v = (rp[idx] - rm[idx]) / (2.0 * h);
            for p in 0..d {
                let gnp = |a: usize| gam[(p * d + n) * d + a];
                v -= gnp(i) * low[((p * d + j) * d + k) * d + l];
                v -= gnp(j) * low[((i * d + p) * d + k) * d + l];
                v -= gnp(k) * low[((i * d + j) * d + p) * d + l];
                v -= gnp(l) * low[((i * d + j) * d + k) * d + p];
            }
            out[n * d4 + idx] = v;
        }
    }
}

/// Closed-form geometry of a two-dimensional metric exp(2w) times Euclidean.
#[derive(Clone, Copy, Debug)]
struct ConformalJet {
    w: f64,
    dw: [f64; 2],
    lap_w: f64,
}

impl ConformalJet {
    fn rho_sq(&self) -> f64 {
        (2.0 * self.w).exp()
    }

    fn curvature(&self) -> f64 {
        -(-2.0 * self.w).exp() * self.lap_w
    }

    fn metric(&self, g: &mut [f64]) {
        let r = self.rho_sq();
        g[0] = r;
        g[1] = 0.0;
        g[2] = 0.0;
        g[3] = r;
    }

    fn christoffel(&self, out: &mut [f64]) {
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let mut v = 0.0;
                    if i == j {
                        v += self.dw[k];
                    }
                    if i == k {
                        v += self.dw[j];
                    }
                    if j == k {
                        v -= self.dw[i];
                    }
                    out[(i * 2 + j) * 2 + k] = v;
                }
            }
        }
    }

    fn riemann(&self, out: &mut [f64]) {
        let kk = self.curvature();
        let r = self.rho_sq();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let mut v = 0.0;
                        if i == k && j == l {
                            v += r;
                        }
                        if i == l && j == k {
                            v -= r;
                        }
                        out[((i * 2 + j) * 2 + k) * 2 + l] = kk * v;
                    }
                }
            }
        }
    }
}

fn conformal_riemann_cov(jet: impl Fn(&[f64]) -> ConformalJet, y: &[f64], out: &mut [f64]) {
    let h = FD_CHRISTOFFEL;
    let base = jet(y);
    let r = base.rho_sq();
    for n in 0..2 {
        let mut yp = [y[0], y[1]];
        yp[n] += h;
        let kp = jet(&yp).curvature();
        yp[n] -= 2.0 * h;
        let km = jet(&yp).curvature();
        let dk = (kp - km) / (2.0 * h);
        for idx in 0..16 {
            let (i, j, k, l) = (idx / 8, (idx / 4) % 2, (idx / 2) % 2, idx % 2);
            let mut v = 0.0;
            if i == k && j == l {
                v += r * r;
            }
            if i == l && j == k {
                v -= r * r;
            }
            out[n * 16 + idx] = dk * v;
        }
    }
}

macro_rules! conformal_chart_methods {
    () => {
        fn dim(&self) -> usize {
            2
        }

        fn metric_into(&self, y: &[f64], g: &mut [f64]) {
            self.jet(y).metric(g);
        }

        fn conformal_factor(&self, y: &[f64]) -> Option<f64> {
            Some(self.jet(y).rho_sq())
        }

        fn christoffel_into(&self, y: &[f64], out: &mut [f64]) {
            self.jet(y).christoffel(out);
        }

        fn riemann_into(&self, y: &[f64], out: &mut [f64]) {
            self.jet(y).riemann(out);
        }

        fn riemann_cov_into(&self, y: &[f64], out: &mut [f64]) {
            conformal_riemann_cov(|p| self.jet(p), y, out);
        }

        fn gauss_curvature(&self, y: &[f64]) -> Option<f64> {
            Some(self.jet(y).curvature())
        }

        fn lattice(&self) -> &Lattice {
            &self.lattice
        }
    };
}

/// R^2 / (Z omega1 + Z omega2) with metric scale * Euclidean.
#[derive(Clone, Debug)]
pub struct FlatTorus {
    omega1: [f64; 2],
    omega2: [f64; 2],
    scale: f64,
    lattice: Lattice,
}

impl FlatTorus {
    pub fn new(omega1: [f64; 2], omega2: [f64; 2], scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(SigmaError::InvalidTarget(format!(
                "scale {scale} must be positive"
            )));
        }
        let lattice = Lattice::new(vec![omega1.to_vec(), omega2.to_vec()])?;
        Ok(Self {
            omega1,
            omega2,
            scale,
            lattice,
        })
    }

    /// C / (Z + sigma Z) with the Euclidean metric.
    pub fn from_modulus(sigma_re: f64, sigma_im: f64) -> Result<Self> {
        if !(sigma_im > 0.0) {
            return Err(SigmaError::InvalidModulus(sigma_im));
        }
        Self::new([1.0, 0.0], [sigma_re, sigma_im], 1.0)
    }

    /// C / (Z + sigma Z) scaled to unit area.
    pub fn unit_area(sigma_re: f64, sigma_im: f64) -> Result<Self> {
        if !(sigma_im > 0.0) {
            return Err(SigmaError::InvalidModulus(sigma_im));
        }
        Self::new([1.0, 0.0], [sigma_re, sigma_im], 1.0 / sigma_im)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl TargetChart for FlatTorus {
    fn name(&self) -> String {
        "flat_torus".into()
    }

    fn dim(&self) -> usize {
        2
    }

    fn metric_into(&self, _y: &[f64], g: &mut [f64]) {
        g.copy_from_slice(&[self.scale, 0.0, 0.0, self.scale]);
    }

    fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    fn is_flat(&self) -> bool {
        true
    }

    fn conformal_factor(&self, _y: &[f64]) -> Option<f64> {
        Some(self.scale)
    }

    fn area(&self) -> Option<f64> {
        Some(self.scale * (self.omega1[0] * self.omega2[1] - self.omega1[1] * self.omega2[0]).abs())
    }

    fn christoffel_into(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn riemann_into(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn riemann_cov_into(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn gauss_curvature(&self, _y: &[f64]) -> Option<f64> {
        Some(0.0)
    }
}

/// Round sphere of radius r in stereographic coordinates: rho^2 = 4 r^4 / (r^2 + |y|^2)^2.
#[derive(Clone, Debug)]
pub struct RoundSphere {
    r: f64,
    lattice: Lattice,
}

impl RoundSphere {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(SigmaError::InvalidTarget(format!(
                "radius {r} must be positive"
            )));
        }
        Ok(Self {
            r,
            lattice: Lattice::none(),
        })
    }

    fn jet(&self, y: &[f64]) -> ConformalJet {
        let r2 = self.r * self.r;
        let s = r2 + y[0] * y[0] + y[1] * y[1];
        ConformalJet {
            w: (2.0 * r2).ln() - s.ln(),
            dw: [-2.0 * y[0] / s, -2.0 * y[1] / s],
            lap_w: -4.0 * r2 / (s * s),
        }
    }
}

impl TargetChart for RoundSphere {
    fn name(&self) -> String {
        "round_sphere".into()
    }

    fn area(&self) -> Option<f64> {
        Some(4.0 * PI * self.r * self.r)
    }

    conformal_chart_methods!();
}

/// Upper half plane with |dy|^2 / y2^2.
#[derive(Clone, Debug)]
pub struct HyperbolicPlane {
    lattice: Lattice,
}

impl HyperbolicPlane {
    pub fn new() -> Self {
        Self {
            lattice: Lattice::none(),
        }
    }

    fn jet(&self, y: &[f64]) -> ConformalJet {
        ConformalJet {
            w: -y[1].ln(),
            dw: [0.0, -1.0 / y[1]],
            lap_w: 1.0 / (y[1] * y[1]),
        }
    }
}

impl Default for HyperbolicPlane {
    fn default() -> Self {
        Self::new()
    }
}

impl TargetChart for HyperbolicPlane {
    fn name(&self) -> String {
        "hyperbolic_plane".into()
    }

    fn contains(&self, y: &[f64]) -> bool {
        y[1] > 0.0
    }

    conformal_chart_methods!();
}

/// Hyperbolic cylinder: the quotient of the half plane by z -> e^ell z in the chart
/// w = log z, with metric |dw|^2 / sin^2(Im w) on the band 0 < Im w < pi and period ell.
#[derive(Clone, Debug)]
pub struct HyperbolicCylinder {
    ell: f64,
    lattice: Lattice,
}

impl HyperbolicCylinder {
    pub fn new(ell: f64) -> Result<Self> {
        if !(ell > 0.0) {
            return Err(SigmaError::InvalidTarget(format!(
                "period {ell} must be positive"
            )));
        }
        Ok(Self {
            ell,
            lattice: Lattice::new(vec![vec![ell, 0.0]])?,
        })
    }

    pub fn period(&self) -> f64 {
        self.ell
    }

    fn jet(&self, y: &[f64]) -> ConformalJet {
        let (s, c) = y[1].sin_cos();
        ConformalJet {
            w: -s.ln(),
            dw: [0.0, -c / s],
            lap_w: 1.0 / (s * s),
        }
    }
}

impl TargetChart for HyperbolicCylinder {
    fn name(&self) -> String {
        "hyperbolic_cylinder".into()
    }

    fn contains(&self, y: &[f64]) -> bool {
        y[1] > 0.0 && y[1] < PI
    }

    conformal_chart_methods!();
}

/// Flat torus lattice Z + sigma Z with metric exp(2w) Euclidean,
/// w = amp (cos 2 pi s + cos 2 pi t) in lattice coordinates y = s + sigma t.
#[derive(Clone, Debug)]
pub struct WarpedTorus {
    sigma: [f64; 2],
    amp: f64,
    lattice: Lattice,
}

impl WarpedTorus {
    pub fn new(sigma_re: f64, sigma_im: f64, amp: f64) -> Result<Self> {
        if !(sigma_im > 0.0) {
            return Err(SigmaError::InvalidModulus(sigma_im));
        }
        Ok(Self {
            sigma: [sigma_re, sigma_im],
            amp,
            lattice: Lattice::new(vec![vec![1.0, 0.0], vec![sigma_re, sigma_im]])?,
        })
    }

    fn jet(&self, y: &[f64]) -> ConformalJet {
        let [s1, s2] = self.sigma;
        let t = y[1] / s2;
        let s = y[0] - s1 * t;
        let k = 2.0 * PI;
        let (ss, cs) = (k * s).sin_cos();
        let (st, ct) = (k * t).sin_cos();
        let w_s = -self.amp * k * ss;
        let w_t = -self.amp * k * st;
        let w_ss = -self.amp * k * k * cs;
        let w_tt = -self.amp * k * k * ct;
        ConformalJet {
            w: self.amp * (cs + ct),
            dw: [w_s, (w_t - s1 * w_s) / s2],
            lap_w: w_ss + (w_tt + s1 * s1 * w_ss) / (s2 * s2),
        }
    }
}

impl TargetChart for WarpedTorus {
    fn name(&self) -> String {
        "warped_torus".into()
    }

    fn area(&self) -> Option<f64> {
        let i0 = bessel_i0(2.0 * self.amp);
        Some(self.sigma[1] * i0 * i0)
    }

    conformal_chart_methods!();
}

fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

type MetricFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A chart given only by its metric; all curvature quantities use finite differences.
pub struct MetricChart {
    name: String,
    dim: usize,
    metric: Box<MetricFn>,
    lattice: Lattice,
}

impl MetricChart {
    pub fn new(
        name: &str,
        dim: usize,
        lattice: Lattice,
        metric: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            metric: Box::new(metric),
            lattice,
        }
    }
}

impl Debug for MetricChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MetricChart({}, dim {})", self.name, self.dim)
    }
}

impl TargetChart for MetricChart {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn metric_into(&self, y: &[f64], g: &mut [f64]) {
        (self.metric)(y, g);
    }

    fn lattice(&self) -> &Lattice {
        &self.lattice
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn charts() -> Vec<(Box<dyn TargetChart>, Vec<f64>)> {
        vec![
            (Box::new(RoundSphere::new(1.3).unwrap()), vec![0.4, -0.7]),
            (Box::new(HyperbolicPlane::new()), vec![0.3, 1.7]),
            (
                Box::new(HyperbolicCylinder::new(2.0).unwrap()),
                vec![0.3, 1.2],
            ),
            (
                Box::new(WarpedTorus::new(0.2, 1.3, 0.15).unwrap()),
                vec![0.31, 0.77],
            ),
        ]
    }

    #[test]
    fn closed_forms_match_finite_differences() {
        for (chart, y) in charts() {
            let mut a = vec![0.0; 8];
            let mut b = vec![0.0; 8];
            chart.christoffel_into(&y, &mut a);
            fd_christoffel(chart.as_ref(), &y, &mut b);
            for k in 0..8 {
                assert!((a[k] - b[k]).abs() < 1e-5, "{} gamma {k}", chart.name());
            }
            let mut a = vec![0.0; 16];
            let mut b = vec![0.0; 16];
            chart.riemann_into(&y, &mut a);
            fd_riemann(chart.as_ref(), &y, &mut b);
            for k in 0..16 {
                assert!((a[k] - b[k]).abs() < 1e-5, "{} riemann {k}", chart.name());
            }
            let mut a = vec![0.0; 32];
            let mut b = vec![0.0; 32];
            chart.riemann_cov_into(&y, &mut a);
            fd_riemann_cov(chart.as_ref(), &y, &mut b);
            for k in 0..32 {
                assert!(
                    (a[k] - b[k]).abs() < 1e-4,
                    "{} cov riemann {k}",
                    chart.name()
                );
            }
        }
    }

    #[test]
    fn curvature_signs() {
        let s = RoundSphere::new(1.0).unwrap();
        let k = s.gauss_curvature(&[0.2, 0.5]).unwrap();
        assert!((k - 1.0).abs() < 1e-12);
        let s2 = RoundSphere::new(2.0).unwrap();
        assert!((s2.gauss_curvature(&[0.2, 0.5]).unwrap() - 0.25).abs() < 1e-12);
        let h = HyperbolicPlane::new();
        assert!((h.gauss_curvature(&[0.2, 0.5]).unwrap() + 1.0).abs() < 1e-12);
        let c = HyperbolicCylinder::new(1.0).unwrap();
        assert!((c.gauss_curvature(&[0.2, 0.5]).unwrap() + 1.0).abs() < 1e-12);
        // generic path through the lowered tensor
        let m = MetricChart::new("sphere", 2, Lattice::none(), |y, g| {
            let s = 1.0 + y[0] * y[0] + y[1] * y[1];
            let r = 4.0 / (s * s);
            g.copy_from_slice(&[r, 0.0, 0.0, r]);
        });
        assert!((m.gauss_curvature(&[0.2, 0.5]).unwrap() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn flat_torus_wrap_and_delta() {
        let t = FlatTorus::new([1.0, 0.0], [0.0, 1.0], 1.0).unwrap();
        let mut y = [1.25, -0.5];
        t.wrap(&mut y);
        assert_eq!(y, [0.25, 0.5]);
        let mut d = [0.0; 2];
        t.delta(&[0.05, 0.95], &[0.95, 0.05], &mut d);
        assert!((d[0] - 0.1).abs() < 1e-15 && (d[1] + 0.1).abs() < 1e-15);
        assert_eq!(t.area(), Some(1.0));
        let u = FlatTorus::unit_area(0.3, 2.0).unwrap();
        assert!((u.area().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn warped_area_matches_quadrature() {
        let t = WarpedTorus::new(0.0, 1.0, 0.2).unwrap();
        let m = 200;
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                let y = [i as f64 / m as f64, j as f64 / m as f64];
                s += t.conformal_factor(&y).unwrap();
            }
        }
        s /= (m * m) as f64;
        assert!((s - t.area().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn cylinder_period() {
        let c = HyperbolicCylinder::new(1.5).unwrap();
        let mut y = [3.2, 1.0];
        c.wrap(&mut y);
        assert!((y[0] - 0.2).abs() < 1e-14 && y[1] == 1.0);
    }
}
