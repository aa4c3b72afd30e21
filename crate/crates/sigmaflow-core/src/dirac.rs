//! Spinors, the spin Dirac operator, the twisted Dirac operator along a map and the
//! Dirac-harmonic coupled flow.
//!
//! The spinor bundle of a surface is trivialised by the spin structure: a spinor is a
//! quaternion per node, and moving across the period a -> a + 1 (or b -> b + 1) multiplies it
//! by eps_1 (or eps_2). In a general orthonormal frame e_alpha = E^mu_alpha d_mu with
//! A = sqrt(det gamma) E, the operator is written in the split form
//!
//! `D psi = (1/sqrt det gamma) e_alpha . 1/2 (A^mu_alpha d_mu psi + d_mu(A^mu_alpha psi))`,
//!
//! which equals the usual formula with spin connection for the transported frame and is
//! exactly symmetric on the grid. Central differences give the naive lattice operator, whose
//! spectrum contains the doublers at the corners of the Brillouin zone.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SigmaError};
use crate::grid::ConformalDomain;
use crate::harmonic::{
    check_map, energy, euler_flow, euler_step, map_derivatives, tension, FlowParams, FlowReport,
    MapField,
};
use crate::quaternion::{self as q, Quat};
use crate::target::TargetChart;

/// Singular values below this fraction of the largest one span the kernel.
pub const KERNEL_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinStructure {
    /// Sign picked up along the a period and the b period.
    pub eps: [i8; 2],
}

impl SpinStructure {
    pub const PERIODIC: SpinStructure = SpinStructure { eps: [1, 1] };

    pub fn parse(s: &str) -> Result<Self> {
        let b = s.as_bytes();
        if b.len() != 2 {
            return Err(SigmaError::Parse(format!(
                "spin structure {s:?}, expected e.g. \"+-\""
            )));
        }
        let sign = |c: u8| match c {
            b'+' => Ok(1),
            b'-' => Ok(-1),
            _ => Err(SigmaError::Parse(format!(
                "spin structure {s:?}, expected + or -"
            ))),
        };
        Ok(Self {
            eps: [sign(b[0])?, sign(b[1])?],
        })
    }

    pub fn all() -> [SpinStructure; 4] {
        [[1, 1], [1, -1], [-1, 1], [-1, -1]].map(|eps| SpinStructure { eps })
    }

    /// Momentum shift: 0 for periodic, 1/2 for antiperiodic directions.
    pub fn shift(&self) -> [f64; 2] {
        self.eps.map(|e| if e > 0 { 0.0 } else { 0.5 })
    }

    pub fn label(&self) -> String {
        self.eps
            .iter()
            .map(|e| if *e > 0 { '+' } else { '-' })
            .collect()
    }
}

/// Orthonormal frame e_alpha = E^mu_alpha d_mu (x, y coordinates) and the volume density.
#[derive(Clone, Debug)]
pub struct Frame {
    pub sqrt_det: Vec<f64>,
    /// `e[p][alpha][mu] = E^mu_alpha`
    pub e: Vec<[[f64; 2]; 2]>,
}

impl Frame {
    pub fn conformal(dom: &ConformalDomain) -> Self {
        let lam = dom.lambda_sq();
        Self {
            sqrt_det: lam.to_vec(),
            e: lam
                .iter()
                .map(|l| {
                    let il = 1.0 / l.sqrt();
                    [[il, 0.0], [0.0, il]]
                })
                .collect(),
        }
    }

    /// Frame E = gamma^{-1/2} for a metric given as (g_xx, g_xy, g_yy) per node. For a
    /// metric near a conformal one this is the frame transported from lambda^{-1} d_mu.
    pub fn from_metric(g: &[[f64; 3]]) -> Result<Self> {
        let mut sqrt_det = Vec::with_capacity(g.len());
        let mut e = Vec::with_capacity(g.len());
        for m in g {
            let det = m[0] * m[2] - m[1] * m[1];
            if !(det > 0.0) || !(m[0] > 0.0) {
                return Err(SigmaError::InvalidConformalFactor(
                    "metric is not positive definite".into(),
                ));
            }
            let s = det.sqrt();
            let t = (m[0] + m[2] + 2.0 * s).sqrt();
            // sqrt(M) = (M + s I) / t, then invert the 2x2 symmetric root
            let r = [(m[0] + s) / t, m[1] / t, (m[2] + s) / t];
            let rd = r[0] * r[2] - r[1] * r[1];
            e.push([[r[2] / rd, -r[1] / rd], [-r[1] / rd, r[0] / rd]]);
            sqrt_det.push(s);
        }
        Ok(Self { sqrt_det, e })
    }

    pub fn len(&self) -> usize {
        self.sqrt_det.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sqrt_det.is_empty()
    }

    /// A^mu_alpha = sqrt(det gamma) E^mu_alpha.
    #[inline]
    pub fn a(&self, p: usize, alpha: usize, mu: usize) -> f64 {
        self.sqrt_det[p] * self.e[p][alpha][mu]
    }

    /// Frame derivative e_alpha(f) = E^mu_alpha d_mu f from coordinate derivatives.
    #[inline]
    pub fn along(&self, p: usize, alpha: usize, fx: f64, fy: f64) -> f64 {
        self.e[p][alpha][0] * fx + self.e[p][alpha][1] * fy
    }
}

/// Spinor field with values in S tensor phi^*TN: `dim` quaternions per node.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    pub dim: usize,
    pub spin: SpinStructure,
    pub values: Vec<f64>,
}

impl SpinorField {
    pub fn zeros(len: usize, dim: usize, spin: SpinStructure) -> Self {
        Self {
            dim,
            spin,
            values: vec![0.0; len * dim * 4],
        }
    }

    #[inline]
    pub fn get(&self, p: usize, i: usize) -> Quat {
        let o = (p * self.dim + i) * 4;
        [
            self.values[o],
            self.values[o + 1],
            self.values[o + 2],
            self.values[o + 3],
        ]
    }

    #[inline]
    pub fn set(&mut self, p: usize, i: usize, s: Quat) {
        let o = (p * self.dim + i) * 4;
        self.values[o..o + 4].copy_from_slice(&s);
    }

    pub fn len(&self) -> usize {
        self.values.len() / (self.dim * 4)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Central difference along axis 0 (a) or 1 (b) for spin-twisted data with `w` floats per node.
pub fn twisted_diff(
    dom: &ConformalDomain,
    spin: SpinStructure,
    f: &[f64],
    w: usize,
    axis: usize,
) -> Vec<f64> {
    let half_n = 0.5 * dom.n() as f64;
    let eps = spin.eps[axis] as f64;
    let mut out = vec![0.0; f.len()];
    out.par_chunks_mut(w).enumerate().for_each(|(p, o)| {
        let nb = dom.neighbours(p);
        let (fwd, fw) = nb[2 * axis];
        let (bwd, bw) = nb[2 * axis + 1];
        let sf = if fw { eps } else { 1.0 };
        let sb = if bw { eps } else { 1.0 };
        for c in 0..w {
            o[c] = (sf * f[fwd * w + c] - sb * f[bwd * w + c]) * half_n;
        }
    });
    out
}

/// Twisted (d_x, d_y) for spinor data with `w` floats per node.
pub fn twisted_grad(
    dom: &ConformalDomain,
    spin: SpinStructure,
    f: &[f64],
    w: usize,
) -> (Vec<f64>, Vec<f64>) {
    let fa = twisted_diff(dom, spin, f, w, 0);
    let fb = twisted_diff(dom, spin, f, w, 1);
    let fy = dom.combine_y(&fa, &fb);
    (fa, fy)
}

/// Spin Dirac operator applied componentwise to a field of `dim` spinors per node.
pub fn spin_dirac(
    dom: &ConformalDomain,
    frame: &Frame,
    spin: SpinStructure,
    psi: &[f64],
    dim: usize,
) -> Vec<f64> {
    let w = dim * 4;
    let len = dom.len();
    let (dx, dy) = twisted_grad(dom, spin, psi, w);
    // products A^mu_alpha psi, then their divergence per alpha
    let mut div = [vec![0.0; psi.len()], vec![0.0; psi.len()]];
    for (alpha, dv) in div.iter_mut().enumerate() {
        let mut px = vec![0.0; psi.len()];
        let mut py = vec![0.0; psi.len()];
        for p in 0..len {
            let (ax, ay) = (frame.a(p, alpha, 0), frame.a(p, alpha, 1));
            for c in 0..w {
                px[p * w + c] = ax * psi[p * w + c];
                py[p * w + c] = ay * psi[p * w + c];
            }
        }
        let (pxx, _) = twisted_grad(dom, spin, &px, w);
        let (_, pyy) = twisted_grad(dom, spin, &py, w);
        for k in 0..psi.len() {
            dv[k] = pxx[k] + pyy[k];
        }
    }
    let mut out = vec![0.0; psi.len()];
    out.par_chunks_mut(w).enumerate().for_each(|(p, o)| {
        let inv = 1.0 / frame.sqrt_det[p];
        for i in 0..dim {
            let mut acc = q::ZERO;
            for alpha in 0..2 {
                let (ax, ay) = (frame.a(p, alpha, 0), frame.a(p, alpha, 1));
                let mut v = q::ZERO;
                for c in 0..4 {
                    let k = p * w + i * 4 + c;
                    v[c] = 0.5 * (ax * dx[k] + ay * dy[k] + div[alpha][k]);
                }
                q::axpy(inv, &q::e(alpha, &v), &mut acc);
            }
            o[i * 4..i * 4 + 4].copy_from_slice(&acc);
        }
    });
    out
}

/// Frame derivatives of the map, `out[alpha][p * d + i] = e_alpha(phi^i)`.
pub fn frame_derivatives(
    dom: &ConformalDomain,
    frame: &Frame,
    chart: &dyn TargetChart,
    phi: &MapField,
) -> [Vec<f64>; 2] {
    let d = phi.dim;
    let (dx, dy) = map_derivatives(dom, chart, phi);
    let mut out = [vec![0.0; dx.len()], vec![0.0; dx.len()]];
    for p in 0..dom.len() {
        for i in 0..d {
            for (alpha, o) in out.iter_mut().enumerate() {
                o[p * d + i] = frame.along(p, alpha, dx[p * d + i], dy[p * d + i]);
            }
        }
    }
    out
}

/// Twisted Dirac operator D psi = spin Dirac + Gamma^k_{jl}(phi) e_alpha(phi^l) e_alpha . psi^j.
pub fn twisted_dirac(
    dom: &ConformalDomain,
    frame: &Frame,
    chart: &dyn TargetChart,
    phi: &MapField,
    psi: &SpinorField,
) -> SpinorField {
    let d = phi.dim;
    let mut out = spin_dirac(dom, frame, psi.spin, &psi.values, d);
    if !chart.is_flat() {
        let ephi = frame_derivatives(dom, frame, chart, phi);
        out.par_chunks_mut(d * 4).enumerate().for_each(|(p, o)| {
            let mut gam = vec![0.0; d * d * d];
            chart.christoffel_into(phi.node(p), &mut gam);
            for k in 0..d {
                for j in 0..d {
                    let pj = psi.get(p, j);
                    for alpha in 0..2 {
                        let mut c = 0.0;
                        for l in 0..d {
                            c += gam[(k * d + j) * d + l] * ephi[alpha][p * d + l];
                        }
                        if c != 0.0 {
                            let v = q::e(alpha, &pj);
                            for m in 0..4 {
                                o[k * 4 + m] += c * v[m];
                            }
                        }
                    }
                }
            }
        });
    }
    SpinorField {
        dim: d,
        spin: psi.spin,
        values: out,
    }
}

/// Pointwise g_kl <u^k, v^l>.
pub fn spinor_dot(
    chart: &dyn TargetChart,
    phi: &MapField,
    u: &SpinorField,
    v: &SpinorField,
) -> Vec<f64> {
    let d = phi.dim;
    (0..phi.len())
        .map(|p| {
            let mut g = vec![0.0; d * d];
            chart.metric_into(phi.node(p), &mut g);
            let mut s = 0.0;
            for k in 0..d {
                for l in 0..d {
                    s += g[k * d + l] * q::dot(&u.get(p, k), &v.get(p, l));
                }
            }
            s
        })
        .collect()
}

/// L^2 inner product with the volume density of the frame.
pub fn spinor_l2(
    dom: &ConformalDomain,
    frame: &Frame,
    chart: &dyn TargetChart,
    phi: &MapField,
    u: &SpinorField,
    v: &SpinorField,
) -> f64 {
    let dens = spinor_dot(chart, phi, u, v);
    dens.iter()
        .zip(&frame.sqrt_det)
        .map(|(a, s)| a * s)
        .sum::<f64>()
        * dom.cell_area()
}

/// Integral of |d phi|^2 + <psi, D psi> over a conformal domain; for psi = 0 this is exactly
/// twice the Dirichlet energy.
pub fn dh_action(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    phi: &MapField,
    psi: &SpinorField,
) -> f64 {
    let frame = Frame::conformal(dom);
    2.0 * energy(dom, chart, phi) + dirac_term(dom, &frame, chart, phi, psi)
}

/// Integral of <psi, D psi>.
pub fn dirac_term(
    dom: &ConformalDomain,
    frame: &Frame,
    chart: &dyn TargetChart,
    phi: &MapField,
    psi: &SpinorField,
) -> f64 {
    let dpsi = twisted_dirac(dom, frame, chart, phi, psi);
    spinor_l2(dom, frame, chart, phi, psi, &dpsi)
}

/// Curvature term R^m = sum_alpha <psi^i, e_alpha . psi^j> R^m_{lij}(phi) e_alpha(phi^l),
/// i.e. the vector <psi^i, e_alpha . psi^j> R(d_i, d_j) phi_* e_alpha.
pub fn curvature_coupling(
    dom: &ConformalDomain,
    frame: &Frame,
    chart: &dyn TargetChart,
    phi: &MapField,
    psi: &SpinorField,
) -> Vec<f64> {
    let d = phi.dim;
    let mut out = vec![0.0; phi.values.len()];
    if chart.is_flat() {
        return out;
    }
    let ephi = frame_derivatives(dom, frame, chart, phi);
    out.par_chunks_mut(d).enumerate().for_each(|(p, o)| {
        let mut r = vec![0.0; d * d * d * d];
        chart.riemann_into(phi.node(p), &mut r);
        for alpha in 0..2 {
            for i in 0..d {
                for j in 0..d {
                    let c = q::dot(&psi.get(p, i), &q::e(alpha, &psi.get(p, j)));
                    if c == 0.0 {
                        continue;
                    }
                    for m in 0..d {
                        for l in 0..d {
                            o[m] += c * r[((m * d + l) * d + i) * d + j] * ephi[alpha][p * d + l];
                        }
                    }
                }
            }
        }
    });
    out
}

/// Pointwise sup of |tau - R/2|_g and of |D psi|.
pub fn dh_el_residual(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    phi: &MapField,
    psi: &SpinorField,
) -> (f64, f64) {
    let frame = Frame::conformal(dom);
    let t = tension(dom, chart, phi);
    let r = curvature_coupling(dom, &frame, chart, phi, psi);
    let f: Vec<f64> = t.iter().zip(&r).map(|(a, b)| a - 0.5 * b).collect();
    let rphi = crate::harmonic::sup_norm(chart, phi, &f);
    let dpsi = twisted_dirac(dom, &frame, chart, phi, psi);
    let n2 = spinor_dot(chart, phi, &dpsi, &dpsi);
    let rpsi = n2.iter().fold(0.0f64, |m, v| m.max(v.max(0.0).sqrt()));
    (rphi, rpsi)
}

/// Dense matrix of a linear map on R^len.
fn dense_matrix(len: usize, apply: impl Fn(&[f64]) -> Vec<f64> + Sync) -> DMatrix<f64> {
    let cols: Vec<Vec<f64>> = (0..len)
        .into_par_iter()
        .map(|c| {
            let mut e = vec![0.0; len];
            e[c] = 1.0;
            apply(&e)
        })
        .collect();
    DMatrix::from_fn(len, len, |r, c| cols[c][r])
}

/// Dense matrix of the spin Dirac operator on single spinors (4 n^2 real unknowns).
pub fn spin_dirac_matrix(
    dom: &ConformalDomain,
    frame: &Frame,
    spin: SpinStructure,
) -> DMatrix<f64> {
    dense_matrix(dom.len() * 4, |v| spin_dirac(dom, frame, spin, v, 1))
}

/// Dense matrix of the twisted operator on spinors along phi.
pub fn twisted_dirac_matrix(
    dom: &ConformalDomain,
    frame: &Frame,
    chart: &dyn TargetChart,
    phi: &MapField,
    spin: SpinStructure,
) -> DMatrix<f64> {
    let d = phi.dim;
    dense_matrix(dom.len() * d * 4, |v| {
        let s = SpinorField {
            dim: d,
            spin,
            values: v.to_vec(),
        };
        twisted_dirac(dom, frame, chart, phi, &s).values
    })
}

/// Eigenvalues of the spin Dirac operator on a conformal domain, ascending. The operator is
/// self-adjoint for the lambda^2-weighted product, so it is conjugated to a symmetric matrix.
pub fn dirac_spectrum(dom: &ConformalDomain, spin: SpinStructure) -> Vec<f64> {
    let frame = Frame::conformal(dom);
    let m = spin_dirac_matrix(dom, &frame, spin);
    let w: Vec<f64> = (0..dom.len() * 4)
        .map(|k| frame.sqrt_det[k / 4].sqrt())
        .collect();
    let sym = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
        let a = w[r] * m[(r, c)] / w[c];
        let b = w[c] * m[(c, r)] / w[r];
        0.5 * (a + b)
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .cloned()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleMode {
    pub k: [i64; 2],
    /// Lattice symbol |(n sin 2 pi m_a / n, ...)| of the naive operator.
    pub discrete: f64,
    /// Continuum eigenvalue 2 pi |m| for the mode folded to the nearest corner.
    pub continuum: f64,
}

/// Fourier oracle for a flat torus (lambda = 1): every mode k contributes +-discrete, each
/// with multiplicity two.
pub fn fourier_oracle(n: usize, tau: Complex64, spin: SpinStructure) -> Vec<OracleMode> {
    let shift = spin.shift();
    let nf = n as f64;
    let (t1, t2) = (tau.re, tau.im);
    let phys = |pa: f64, pb: f64| (pa * pa + ((pb - t1 * pa) / t2).powi(2)).sqrt();
    let mut out = Vec::with_capacity(n * n);
    for kb in 0..n as i64 {
        for ka in 0..n as i64 {
            let m = [ka as f64 + shift[0], kb as f64 + shift[1]];
            let s = m.map(|v| nf * (2.0 * PI * v / nf).sin());
            let folded = m.map(|v| {
                let r = (2.0 * v / nf).round();
                let sign = if (r as i64) % 2 == 0 { 1.0 } else { -1.0 };
                sign * 2.0 * PI * (v - 0.5 * nf * r)
            });
            out.push(OracleMode {
                k: [ka, kb],
                discrete: phys(s[0], s[1]),
                continuum: phys(folded[0], folded[1]),
            });
        }
    }
    out
}

/// Full sorted eigenvalue list predicted by the lattice symbol.
pub fn oracle_spectrum(n: usize, tau: Complex64, spin: SpinStructure) -> Vec<f64> {
    let mut v = Vec::with_capacity(4 * n * n);
    for m in fourier_oracle(n, tau, spin) {
        v.extend([m.discrete, m.discrete, -m.discrete, -m.discrete]);
    }
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Exact eigenspinor of the flat lattice operator for mode k: cos(theta) s - sin(theta) P s / mu
/// with P the Clifford symbol and mu = sign |P|. Returns the single-spinor field and mu.
pub fn plane_wave_eigenspinor(
    dom: &ConformalDomain,
    spin: SpinStructure,
    k: [i64; 2],
    s: Quat,
    positive: bool,
) -> (Vec<f64>, f64) {
    let nf = dom.n() as f64;
    let shift = spin.shift();
    let m = [k[0] as f64 + shift[0], k[1] as f64 + shift[1]];
    let sa = nf * (2.0 * PI * m[0] / nf).sin();
    let sb = nf * (2.0 * PI * m[1] / nf).sin();
    let px = sa;
    let py = (sb - dom.tau().re * sa) / dom.tau().im;
    let norm = (px * px + py * py).sqrt();
    let mu = if positive { norm } else { -norm };
    let ps = q::clifford([px, py], &s);
    let mut out = Vec::with_capacity(dom.len() * 4);
    for p in 0..dom.len() {
        let (a, b) = dom.node_ab(p);
        let th = 2.0 * PI * (m[0] * a + m[1] * b);
        let (sn, cs) = th.sin_cos();
        for c in 0..4 {
            let extra = if mu != 0.0 { -sn * ps[c] / mu } else { 0.0 };
            out.push(cs * s[c] + extra);
        }
    }
    (out, mu)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowMode {
    pub k: [i64; 2],
    /// Rayleigh quotient of the operator on the plane-wave eigenspinor.
    pub eigenvalue: f64,
    /// 2 pi |k + delta| in physical units.
    pub continuum: f64,
    /// sup |D v - mu v| / sup |v|.
    pub residual: f64,
}

/// Positive eigenvalues of the spin Dirac operator on a flat domain for the modes
/// |k_a|, |k_b| <= kmax, obtained by applying the operator to plane waves, next to the
/// continuum values they approximate.
pub fn low_modes(dom: &ConformalDomain, spin: SpinStructure, kmax: i64) -> Vec<LowMode> {
    let frame = Frame::conformal(dom);
    let shift = spin.shift();
    let (t1, t2) = (dom.tau().re, dom.tau().im);
    let mut out = vec![];
    for kb in -kmax..=kmax {
        for ka in -kmax..=kmax {
            let (v, _) = plane_wave_eigenspinor(dom, spin, [ka, kb], [0.6, -0.2, 0.3, 0.7], true);
            let dv = spin_dirac(dom, &frame, spin, &v, 1);
            let vv: f64 = v.iter().map(|x| x * x).sum();
            let mu = v.iter().zip(&dv).map(|(a, b)| a * b).sum::<f64>() / vv;
            let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let res = dv
                .iter()
                .zip(&v)
                .fold(0.0f64, |m, (a, b)| m.max((a - mu * b).abs()))
                / vmax;
            let m = [ka as f64 + shift[0], kb as f64 + shift[1]];
            let cont = 2.0 * PI * (m[0] * m[0] + ((m[1] - t1 * m[0]) / t2).powi(2)).sqrt();
            out.push(LowMode {
                k: [ka, kb],
                eigenvalue: mu,
                continuum: cont,
                residual: res,
            });
        }
    }
    out
}

/// Orthonormal (Euclidean) basis of the numerical kernel of a square matrix, from an SVD.
pub fn kernel_basis(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("right singular vectors");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = KERNEL_THRESHOLD * smax.max(f64::MIN_POSITIVE);
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= cut)
        .map(|(r, _)| vt.row(r).transpose())
        .collect()
}

/// Kernel of a symmetric matrix from its eigendecomposition.
pub fn symmetric_kernel_basis(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let eig = SymmetricEigen::new(m.clone());
    let emax = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cut = KERNEL_THRESHOLD * emax.max(f64::MIN_POSITIVE);
    eig.eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() <= cut)
        .map(|(c, _)| eig.eigenvectors.column(c).into_owned())
        .collect()
}

/// Projection onto span(basis) orthogonal for the weighted product sum w_k u_k v_k.
fn weighted_projection(basis: &[DVector<f64>], w: &[f64], v: &[f64]) -> Vec<f64> {
    let k = basis.len();
    if k == 0 {
        return vec![0.0; v.len()];
    }
    let wdot =
        |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(w).map(|((x, y), z)| x * y * z).sum() };
    let gram = DMatrix::from_fn(k, k, |r, c| wdot(basis[r].as_slice(), basis[c].as_slice()));
    let rhs = DVector::from_fn(k, |r, _| wdot(basis[r].as_slice(), v));
    let coef = gram
        .cholesky()
        .map(|c| c.solve(&rhs))
        .unwrap_or_else(|| DVector::zeros(k));
    let mut out = vec![0.0; v.len()];
    for (b, c) in basis.iter().zip(coef.iter()) {
        for (o, x) in out.iter_mut().zip(b.iter()) {
            *o += c * x;
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct DhState {
    pub phi: MapField,
    pub psi: SpinorField,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoupledReport {
    pub flow: FlowReport,
    pub kernel_dim_initial: usize,
    pub kernel_dim_final: usize,
    /// The kernel became trivial and psi was set to zero.
    pub kernel_trivial: bool,
    pub psi_norm: f64,
}

fn weights(dom: &ConformalDomain, chart: &dyn TargetChart, phi: &MapField, dim: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(dom.len() * dim * 4);
    let mut g = vec![0.0; dim * dim];
    for p in 0..dom.len() {
        chart.metric_into(phi.node(p), &mut g);
        for i in 0..dim {
            // diagonal metric weight; off-diagonal terms are not used by the projection
            let s = g[i * dim + i] * dom.lambda_sq()[p] * dom.cell_area();
            w.extend([s; 4]);
        }
    }
    w
}

/// Kernel projector of the twisted operator at phi; flat targets reduce to one scalar block.
fn kernel_at(
    dom: &ConformalDomain,
    frame: &Frame,
    chart: &dyn TargetChart,
    phi: &MapField,
    spin: SpinStructure,
) -> Vec<DVector<f64>> {
    let d = phi.dim;
    if chart.is_flat() {
        let m = spin_dirac_matrix(dom, frame, spin);
        let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
            frame.sqrt_det[r / 4] * m[(r, c)]
        });
        let scalar = symmetric_kernel_basis(&scaled);
        let block = dom.len() * 4;
        let mut out = vec![];
        for i in 0..d {
            for b in &scalar {
                let mut v = DVector::zeros(block * d);
                for p in 0..dom.len() {
                    for c in 0..4 {
                        v[(p * d + i) * 4 + c] = b[p * 4 + c];
                    }
                }
                out.push(v);
            }
        }
        out
    } else {
        kernel_basis(&twisted_dirac_matrix(dom, frame, chart, phi, spin))
    }
}

fn project_psi(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    phi: &MapField,
    basis: &[DVector<f64>],
    psi: &SpinorField,
    target_norm: f64,
) -> SpinorField {
    let w = weights(dom, chart, phi, psi.dim);
    let mut v = weighted_projection(basis, &w, &psi.values);
    let nrm: f64 = v.iter().zip(&w).map(|(a, b)| a * a * b).sum::<f64>().sqrt();
    if nrm > 0.0 {
        let s = target_norm / nrm;
        v.iter_mut().for_each(|x| *x *= s);
    }
    SpinorField {
        dim: psi.dim,
        spin: psi.spin,
        values: v,
    }
}

/// Coupled flow: phi follows tau(phi) - R(phi, psi)/2 and psi is projected onto the kernel of
/// the twisted Dirac operator after each step, keeping its initial L^2 norm. Steps are accepted
/// while E(phi) + <psi, D psi>/2 does not increase. For flat targets the curvature term
/// vanishes and the phi updates coincide with `heat_flow`.
pub fn coupled_flow(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    state0: &DhState,
    params: &FlowParams,
) -> Result<(DhState, CoupledReport)> {
    check_map(dom, chart, &state0.phi)?;
    let d = state0.phi.dim;
    if state0.psi.dim != d || state0.psi.len() != dom.len() {
        return Err(SigmaError::DimensionMismatch {
            expected: dom.len() * d,
            got: state0.psi.len() * state0.psi.dim,
        });
    }
    let frame = Frame::conformal(dom);
    let spin = state0.psi.spin;
    let mut phi0 = state0.phi.clone();
    phi0.wrap(chart);
    let w0 = weights(dom, chart, &phi0, d);
    let norm0: f64 = state0
        .psi
        .values
        .iter()
        .zip(&w0)
        .map(|(a, b)| a * a * b)
        .sum::<f64>()
        .sqrt();
    let basis0 = kernel_at(dom, &frame, chart, &phi0, spin);
    let kdim0 = basis0.len();
    let psi0 = project_psi(dom, chart, &phi0, &basis0, &state0.psi, norm0);
    let flat = chart.is_flat();
    let kdim = std::cell::Cell::new(kdim0);
    let mut state = DhState {
        phi: phi0,
        psi: psi0,
    };
    let dt0 = params.dt.unwrap_or_else(|| dom.default_dt());
    let report = euler_flow(
        &mut state,
        dt0,
        params,
        |s| {
            let mut t = tension(dom, chart, &s.phi);
            if !flat {
                let r = curvature_coupling(dom, &frame, chart, &s.phi, &s.psi);
                for (a, b) in t.iter_mut().zip(&r) {
                    *a -= 0.5 * b;
                }
            }
            let sup = crate::harmonic::sup_norm(chart, &s.phi, &t);
            (t, sup)
        },
        |s, f, dt| {
            let phi = euler_step(chart, &s.phi, f, dt);
            let psi = if flat {
                s.psi.clone()
            } else {
                let b = kernel_at(dom, &frame, chart, &phi, spin);
                kdim.set(b.len());
                project_psi(dom, chart, &phi, &b, &s.psi, norm0)
            };
            DhState { phi, psi }
        },
        |s| {
            (
                energy(dom, chart, &s.phi),
                dirac_term(dom, &frame, chart, &s.phi, &s.psi),
            )
        },
        |s| {
            s.phi.values.iter().all(|v| v.is_finite()) && s.psi.values.iter().all(|v| v.is_finite())
        },
    )?;
    let psi_norm = spinor_l2(dom, &frame, chart, &state.phi, &state.psi, &state.psi).sqrt();
    Ok((
        state,
        CoupledReport {
            flow: report,
            kernel_dim_initial: kdim0,
            kernel_dim_final: kdim.get(),
            kernel_trivial: kdim.get() == 0,
            psi_norm,
        },
    ))
}

/// Spinor parallel transport correction for a variation v of phi: -Gamma^k_{jl} v^l psi^j.
pub fn transport_correction(
    chart: &dyn TargetChart,
    phi: &MapField,
    psi: &SpinorField,
    v: &[f64],
) -> SpinorField {
    let d = phi.dim;
    let mut out = SpinorField::zeros(phi.len(), d, psi.spin);
    let mut gam = vec![0.0; d * d * d];
    for p in 0..phi.len() {
        chart.christoffel_into(phi.node(p), &mut gam);
        for k in 0..d {
            let mut acc = q::ZERO;
            for j in 0..d {
                let mut c = 0.0;
                for l in 0..d {
                    c += gam[(k * d + j) * d + l] * v[p * d + l];
                }
                q::axpy(-c, &psi.get(p, j), &mut acc);
            }
            out.set(p, k, acc);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{LambdaSpec, TrigMode};
    use crate::target::{FlatTorus, RoundSphere};

    fn bumpy(n: usize) -> ConformalDomain {
        ConformalDomain::new(
            n,
            Complex64::new(0.1, 1.05),
            LambdaSpec::Trig {
                c0: 1.0,
                modes: vec![TrigMode {
                    ka: 1,
                    kb: 0,
                    cos: 0.2,
                    sin: 0.1,
                }],
            },
        )
        .unwrap()
    }

    fn smooth_spinor(dom: &ConformalDomain, dim: usize, spin: SpinStructure) -> SpinorField {
        let mut s = SpinorField::zeros(dom.len(), dim, spin);
        let sh = spin.shift();
        for p in 0..dom.len() {
            let (a, b) = dom.node_ab(p);
            for i in 0..dim {
                let th = 2.0 * PI * ((1.0 + sh[0]) * a + (i as f64 + sh[1]) * b);
                s.set(
                    p,
                    i,
                    [th.cos(), 0.5 * th.sin(), 0.3, -0.2 * (2.0 * th).cos()],
                );
            }
        }
        // make the constant part compatible with antiperiodic directions
        if spin != SpinStructure::PERIODIC {
            for p in 0..dom.len() {
                for i in 0..dim {
                    let mut v = s.get(p, i);
                    v[2] = 0.0;
                    s.set(p, i, v);
                }
            }
        }
        s
    }

    #[test]
    fn spin_structure_parse() {
        assert_eq!(SpinStructure::parse("+-").unwrap().eps, [1, -1]);
        assert!(SpinStructure::parse("+x").is_err());
        assert_eq!(SpinStructure::parse("--").unwrap().label(), "--");
    }

    #[test]
    fn dirac_is_symmetric_on_curved_domain() {
        let dom = bumpy(8);
        let frame = Frame::conformal(&dom);
        for spin in SpinStructure::all() {
            let m = spin_dirac_matrix(&dom, &frame, spin);
            let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
                frame.sqrt_det[r / 4] * m[(r, c)]
            });
            let asym = (&scaled - scaled.transpose()).abs().max();
            assert!(asym < 1e-12, "{asym}");
        }
    }

    #[test]
    fn plane_waves_are_eigenspinors() {
        let dom = ConformalDomain::flat(16, Complex64::new(0.3, 0.9)).unwrap();
        let frame = Frame::conformal(&dom);
        for spin in SpinStructure::all() {
            for positive in [true, false] {
                let (v, mu) =
                    plane_wave_eigenspinor(&dom, spin, [2, 3], [0.2, -0.4, 1.0, 0.5], positive);
                let dv = spin_dirac(&dom, &frame, spin, &v, 1);
                let e = dv
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| (a - mu * b).abs())
                    .fold(0.0, f64::max);
                assert!(e < 1e-10, "{e}");
            }
        }
    }

    #[test]
    fn twisted_equals_spin_dirac_for_flat_targets() {
        let dom = bumpy(16);
        let frame = Frame::conformal(&dom);
        let chart = FlatTorus::from_modulus(0.0, 1.0).unwrap();
        let phi = MapField::from_fn(&dom, 2, |a, b| vec![a + 0.1 * (2.0 * PI * b).sin(), b]);
        let psi = smooth_spinor(&dom, 2, SpinStructure::PERIODIC);
        let t = twisted_dirac(&dom, &frame, &chart, &phi, &psi);
        let s = spin_dirac(&dom, &frame, psi.spin, &psi.values, 2);
        assert_eq!(t.values, s);
    }

    #[test]
    fn spectrum_is_symmetric() {
        let dom = bumpy(8);
        for spin in SpinStructure::all() {
            let ev = dirac_spectrum(&dom, spin);
            let k = ev.len();
            for a in 0..k {
                assert!((ev[a] + ev[k - 1 - a]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn periodic_kernel_has_sixteen_real_dimensions() {
        let dom = ConformalDomain::flat(8, Complex64::i()).unwrap();
        let frame = Frame::conformal(&dom);
        let m = spin_dirac_matrix(&dom, &frame, SpinStructure::PERIODIC);
        assert_eq!(kernel_basis(&m).len(), 16);
        let m = spin_dirac_matrix(&dom, &frame, SpinStructure::parse("-+").unwrap());
        assert_eq!(kernel_basis(&m).len(), 0);
    }

    #[test]
    fn action_with_zero_spinor_is_twice_energy() {
        let dom = bumpy(16);
        let chart = RoundSphere::new(1.0).unwrap();
        let phi = MapField::from_fn(&dom, 2, |a, b| {
            vec![0.3 * (2.0 * PI * a).cos(), 0.2 * (2.0 * PI * b).sin()]
        });
        let psi = SpinorField::zeros(dom.len(), 2, SpinStructure::PERIODIC);
        assert_eq!(
            dh_action(&dom, &chart, &phi, &psi),
            2.0 * energy(&dom, &chart, &phi)
        );
    }

    #[test]
    fn action_of_unit_eigenspinor_is_its_eigenvalue() {
        let dom = ConformalDomain::flat(16, Complex64::i()).unwrap();
        let chart = FlatTorus::from_modulus(0.0, 1.0).unwrap();
        let phi = MapField::from_fn(&dom, 2, |_, _| vec![0.25, 0.5]);
        let spin = SpinStructure::parse("+-").unwrap();
        let (v, mu) = plane_wave_eigenspinor(&dom, spin, [1, 0], [1.0, 0.0, 0.0, 0.0], true);
        let mut psi = SpinorField::zeros(dom.len(), 2, spin);
        for p in 0..dom.len() {
            psi.set(p, 0, [v[4 * p], v[4 * p + 1], v[4 * p + 2], v[4 * p + 3]]);
        }
        let frame = Frame::conformal(&dom);
        let nrm = spinor_l2(&dom, &frame, &chart, &phi, &psi, &psi);
        psi.values.iter_mut().for_each(|x| *x /= nrm.sqrt());
        let a = dh_action(&dom, &chart, &phi, &psi);
        assert!((a - mu).abs() < 1e-12, "{a} {mu}");
        // continuum value 2 pi |(1, 1/2)|
        let cont = 2.0 * PI * (1.25f64).sqrt();
        assert!((a - cont).abs() < 0.03 * cont);
    }

    #[test]
    fn curvature_term_matches_variation_of_action() {
        // dA(phi + eps v, psi transported) = -2 <tau - R/2, v> up to discretisation error
        let chart = RoundSphere::new(1.0).unwrap();
        let mut errs = vec![];
        for n in [16, 32] {
            let dom = bumpy(n);
            let frame = Frame::conformal(&dom);
            let phi = MapField::from_fn(&dom, 2, |a, b| {
                vec![0.4 * (2.0 * PI * a).cos(), 0.3 * (2.0 * PI * (a + b)).sin()]
            });
            let psi = smooth_spinor(&dom, 2, SpinStructure::PERIODIC);
            let v: Vec<f64> = (0..dom.len())
                .flat_map(|p| {
                    let (a, b) = dom.node_ab(p);
                    [(2.0 * PI * b).cos(), (2.0 * PI * a).sin() * 0.5]
                })
                .collect();
            let eps = 1e-5;
            let act = |s: f64| {
                let mut ph = phi.clone();
                for (x, dv) in ph.values.iter_mut().zip(&v) {
                    *x += s * dv;
                }
                let corr = transport_correction(&chart, &phi, &psi, &v);
                let mut ps = psi.clone();
                for (x, c) in ps.values.iter_mut().zip(&corr.values) {
                    *x += s * c;
                }
                dh_action(&dom, &chart, &ph, &ps)
            };
            let fd = (act(eps) - act(-eps)) / (2.0 * eps);
            let t = tension(&dom, &chart, &phi);
            let r = curvature_coupling(&dom, &frame, &chart, &phi, &psi);
            let f: Vec<f64> = t.iter().zip(&r).map(|(a, b)| a - 0.5 * b).collect();
            let pred = -2.0 * crate::harmonic::l2_pairing(&dom, &chart, &phi, &f, &v);
            errs.push((fd - pred).abs() / pred.abs());
        }
        assert!(errs[1] < 0.3 * errs[0] && errs[1] < 1e-2, "{errs:?}");
    }

    #[test]
    fn low_modes_converge_at_second_order() {
        let spin = SpinStructure::parse("+-").unwrap();
        let err = |n: usize| {
            let dom = ConformalDomain::flat(n, Complex64::new(0.2, 1.1)).unwrap();
            low_modes(&dom, spin, 1)
                .iter()
                .map(|m| {
                    assert!(m.residual < 1e-10, "{m:?}");
                    (m.eigenvalue - m.continuum).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(16), err(32));
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }
}
