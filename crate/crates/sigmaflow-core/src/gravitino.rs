//! Sigma model coupled to a gravitino: the action, its Euler-Lagrange residuals, the
//! energy-momentum tensor and supercurrent, and numerical checks of its symmetries.
//!
//! The gravitino chi is stored by frame components chi^beta = chi(e_beta), each a spinor.
//! Q is the pointwise projection onto the part of chi that is not of the form e_alpha . s,
//! `(Q chi)^1 = (chi^1 + k chi^2) / 2`, `(Q chi)^2 = (chi^2 - k chi^1) / 2`.
//! With Y_beta = g(phi_* e_beta, psi) the action density is
//!
//! `|d phi|^2 + <psi, D psi> - 4 <(Q chi)^beta, Y_beta> - |Q chi|^2 |psi|^2 - R(psi) / 6`,
//!
//! where R(psi) = R_ijkl <psi^i, psi^k> <psi^j, psi^l>. Under a metric variation with frame
//! components of psi and chi held fixed, dA = -1/2 integral h_{alpha beta} T_{alpha beta}, and
//! under a variation of chi, dA = integral <delta chi, J>.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirac::{
    frame_derivatives, twisted_dirac, twisted_grad, Frame, SpinStructure, SpinorField,
};
use crate::error::{Result, SigmaError};
use crate::grid::ConformalDomain;
use crate::harmonic::{map_derivatives, tension, MapField};
use crate::quaternion::{self as q, Quat};
use crate::target::{invert, riemann_lower, TargetChart};

/// Sign of the spinor rotation that accompanies a rotation of the frame by the angle w:
/// s -> s + SPIN_ROTATION * w * k s.
pub const SPIN_ROTATION: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct GravitinoField {
    pub spin: SpinStructure,
    /// `values[(p * 2 + beta) * 4 + c]`
    pub values: Vec<f64>,
}

impl GravitinoField {
    pub fn zeros(len: usize, spin: SpinStructure) -> Self {
        Self {
            spin,
            values: vec![0.0; len * 8],
        }
    }

    #[inline]
    pub fn get(&self, p: usize, beta: usize) -> Quat {
        let o = (p * 2 + beta) * 4;
        [
            self.values[o],
            self.values[o + 1],
            self.values[o + 2],
            self.values[o + 3],
        ]
    }

    #[inline]
    pub fn set(&mut self, p: usize, beta: usize, s: Quat) {
        let o = (p * 2 + beta) * 4;
        self.values[o..o + 4].copy_from_slice(&s);
    }

    pub fn len(&self) -> usize {
        self.values.len() / 8
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Pointwise Q on the pair (chi^1, chi^2).
#[inline]
pub fn q_pair(c1: &Quat, c2: &Quat) -> [Quat; 2] {
    let k1 = q::ek(c1);
    let k2 = q::ek(c2);
    [
        q::scale(0.5, &q::add(c1, &k2)),
        q::scale(0.5, &q::sub(c2, &k1)),
    ]
}

pub fn q_projection(chi: &GravitinoField) -> GravitinoField {
    let mut out = chi.clone();
    for p in 0..chi.len() {
        let [a, b] = q_pair(&chi.get(p, 0), &chi.get(p, 1));
        out.set(p, 0, a);
        out.set(p, 1, b);
    }
    out
}

#[derive(Clone, Debug)]
pub struct AdhgState {
    pub phi: MapField,
    pub psi: SpinorField,
    pub chi: GravitinoField,
}

impl AdhgState {
    fn check(&self, dom: &ConformalDomain, chart: &dyn TargetChart) -> Result<()> {
        crate::harmonic::check_map(dom, chart, &self.phi)?;
        if self.psi.dim != self.phi.dim
            || self.psi.len() != dom.len()
            || self.chi.len() != dom.len()
        {
            return Err(SigmaError::DimensionMismatch {
                expected: dom.len(),
                got: self.psi.len().min(self.chi.len()),
            });
        }
        if self.psi.spin != self.chi.spin {
            return Err(SigmaError::Parse(
                "psi and chi use different spin structures".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ActionTerms {
    pub dirichlet: f64,
    pub dirac: f64,
    pub coupling: f64,
    pub quartic: f64,
    pub curvature: f64,
    pub total: f64,
}

/// Pointwise ingredients shared by the action, currents and residuals.
struct Pointwise {
    d: usize,
    g: Vec<f64>,
    ephi: [Vec<f64>; 2],
    qchi: GravitinoField,
}

impl Pointwise {
    fn new(dom: &ConformalDomain, frame: &Frame, chart: &dyn TargetChart, s: &AdhgState) -> Self {
        let d = s.phi.dim;
        let mut g = vec![0.0; dom.len() * d * d];
        for p in 0..dom.len() {
            chart.metric_into(s.phi.node(p), &mut g[p * d * d..(p + 1) * d * d]);
        }
        Self {
            d,
            g,
            ephi: frame_derivatives(dom, frame, chart, &s.phi),
            qchi: q_projection(&s.chi),
        }
    }

    fn g(&self, p: usize, i: usize, j: usize) -> f64 {
        self.g[(p * self.d + i) * self.d + j]
    }

    /// Y_beta = g_ij e_beta(phi^i) psi^j
    fn y(&self, p: usize, beta: usize, psi: &SpinorField) -> Quat {
        let d = self.d;
        let mut acc = q::ZERO;
        for i in 0..d {
            for j in 0..d {
                let c = self.g(p, i, j) * self.ephi[beta][p * d + i];
                if c != 0.0 {
                    q::axpy(c, &psi.get(p, j), &mut acc);
                }
            }
        }
        acc
    }

    fn psi_sq(&self, p: usize, psi: &SpinorField) -> f64 {
        let mut s = 0.0;
        for i in 0..self.d {
            for j in 0..self.d {
                s += self.g(p, i, j) * q::dot(&psi.get(p, i), &psi.get(p, j));
            }
        }
        s
    }

    fn qchi_sq(&self, p: usize) -> f64 {
        let a = self.qchi.get(p, 0);
        let b = self.qchi.get(p, 1);
        q::dot(&a, &a) + q::dot(&b, &b)
    }

    /// G = sum_beta <(Q chi)^beta, Y_beta>
    fn coupling(&self, p: usize, psi: &SpinorField) -> f64 {
        (0..2)
            .map(|b| q::dot(&self.qchi.get(p, b), &self.y(p, b, psi)))
            .sum()
    }
}

/// R(psi) = R_ijkl <psi^i, psi^k> <psi^j, psi^l> at node p.
fn curvature_quartic(low: &[f64], d: usize, psi: &SpinorField, p: usize) -> f64 {
    let mut pp = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            pp[i * d + j] = q::dot(&psi.get(p, i), &psi.get(p, j));
        }
    }
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    s += low[((i * d + j) * d + k) * d + l] * pp[i * d + k] * pp[j * d + l];
                }
            }
        }
    }
    s
}

pub fn adhg_action(
    dom: &ConformalDomain,
    frame: &Frame,
    chart: &dyn TargetChart,
    s: &AdhgState,
) -> Result<ActionTerms> {
    s.check(dom, chart)?;
    let pw = Pointwise::new(dom, frame, chart, s);
    let d = pw.d;
    let dpsi = twisted_dirac(dom, frame, chart, &s.phi, &s.psi);
    let flat = chart.is_flat();
    let cell = dom.cell_area();
    let parts: Vec<[f64; 5]> = (0..dom.len())
        .into_par_iter()
        .map(|p| {
            let mut dir = 0.0;
            let mut dirac = 0.0;
            for i in 0..d {
                for j in 0..d {
                    let gij = pw.g(p, i, j);
                    dir += gij
                        * (pw.ephi[0][p * d + i] * pw.ephi[0][p * d + j]
                            + pw.ephi[1][p * d + i] * pw.ephi[1][p * d + j]);
                    dirac += gij * q::dot(&s.psi.get(p, i), &dpsi.get(p, j));
                }
            }
            let curv = if flat {
                0.0
            } else {
                -curvature_quartic(&riemann_lower(chart, s.phi.node(p)), d, &s.psi, p) / 6.0
            };
            let w = frame.sqrt_det[p] * cell;
            [
                w * dir,
                w * dirac,
                -4.0 * w * pw.coupling(p, &s.psi),
                -w * pw.qchi_sq(p) * pw.psi_sq(p, &s.psi),
                w * curv,
            ]
        })
        .collect();
    let mut t = ActionTerms::default();
    for v in parts {
        t.dirichlet += v[0];
        t.dirac += v[1];
        t.coupling += v[2];
        t.quartic += v[3];
        t.curvature += v[4];
    }
    t.total = t.dirichlet + t.dirac + t.coupling + t.quartic + t.curvature;
    Ok(t)
}

/// Dirac stress S_ab = <psi, e_a nabla_b psi>, written so that its pairing with a frame
/// variation is the exact first variation of the discrete Dirac term: the derivative part is
/// averaged between psi and g psi, `(<g psi, e_a d_b psi> + <psi, e_a d_b (g psi)>) / 2`.
fn dirac_stress(
    dom: &ConformalDomain,
    frame: &Frame,
    chart: &dyn TargetChart,
    s: &AdhgState,
    pw: &Pointwise,
) -> Vec<[[f64; 2]; 2]> {
    let d = pw.d;
    let w = d * 4;
    let mut gpsi = s.psi.clone();
    for p in 0..dom.len() {
        for l in 0..d {
            let mut v = q::ZERO;
            for k in 0..d {
                q::axpy(pw.g(p, k, l), &s.psi.get(p, k), &mut v);
            }
            gpsi.set(p, l, v);
        }
    }
    let (dx, dy) = twisted_grad(dom, s.psi.spin, &s.psi.values, w);
    let (gx, gy) = twisted_grad(dom, s.psi.spin, &gpsi.values, w);
    let flat = chart.is_flat();
    let mut gam = vec![0.0; d * d * d];
    let mut out = vec![[[0.0; 2]; 2]; dom.len()];
    for p in 0..dom.len() {
        if !flat {
            chart.christoffel_into(s.phi.node(p), &mut gam);
        }
        for b in 0..2 {
            for l in 0..d {
                let mut dpsi = q::ZERO;
                let mut dg = q::ZERO;
                for c in 0..4 {
                    let k = p * w + l * 4 + c;
                    dpsi[c] = frame.along(p, b, dx[k], dy[k]);
                    dg[c] = frame.along(p, b, gx[k], gy[k]);
                }
                for a in 0..2 {
                    out[p][a][b] += 0.5
                        * (q::dot(&gpsi.get(p, l), &q::e(a, &dpsi))
                            + q::dot(&s.psi.get(p, l), &q::e(a, &dg)));
                }
            }
            if !flat {
                // g_mk <psi^m, e_a Gamma^k_{jl} e_b(phi^l) psi^j>
                for k in 0..d {
                    for j in 0..d {
                        let mut c = 0.0;
                        for l in 0..d {
                            c += gam[(k * d + j) * d + l] * pw.ephi[b][p * d + l];
                        }
                        if c != 0.0 {
                            let pj = s.psi.get(p, j);
                            for a in 0..2 {
                                out[p][a][b] += c * q::dot(&gpsi.get(p, k), &q::e(a, &pj));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct Currents {
    /// Frame components (T_11, T_12, T_22) per node.
    pub t: Vec<[f64; 3]>,
    /// Supercurrent J^beta per node, same layout as the gravitino.
    pub j: GravitinoField,
}

pub fn noether_currents(
    dom: &ConformalDomain,
    frame: &Frame,
    chart: &dyn TargetChart,
    s: &AdhgState,
) -> Result<Currents> {
    s.check(dom, chart)?;
    let pw = Pointwise::new(dom, frame, chart, s);
    let d = pw.d;
    let stress = dirac_stress(dom, frame, chart, s, &pw);
    let flat = chart.is_flat();
    let mut t = Vec::with_capacity(dom.len());
    let mut j = GravitinoField::zeros(dom.len(), s.chi.spin);
    for p in 0..dom.len() {
        // bosonic part 2 <phi_* e_a, phi_* e_b> - delta |d phi|^2
        let mut m = [[0.0; 2]; 2];
        let dm = stress[p];
        for a in 0..2 {
            for b in 0..2 {
                for i in 0..d {
                    for jj in 0..d {
                        let gij = pw.g(p, i, jj);
                        m[a][b] += gij * pw.ephi[a][p * d + i] * pw.ephi[b][p * d + jj];
                    }
                }
            }
        }
        let dphi2 = m[0][0] + m[1][1];
        let pp = dm[0][0] + dm[1][1];
        let y = [pw.y(p, 0, &s.psi), pw.y(p, 1, &s.psi)];
        let qc = [pw.qchi.get(p, 0), pw.qchi.get(p, 1)];
        let gc: f64 = q::dot(&qc[0], &y[0]) + q::dot(&qc[1], &y[1]);
        let qq = pw.qchi_sq(p);
        let ps = pw.psi_sq(p, &s.psi);
        let rq = if flat {
            0.0
        } else {
            curvature_quartic(&riemann_lower(chart, s.phi.node(p)), d, &s.psi, p)
        };
        let comp = |a: usize, b: usize| {
            let delta = if a == b { 1.0 } else { 0.0 };
            2.0 * m[a][b] - delta * dphi2 + 0.5 * (dm[a][b] + dm[b][a]) - delta * pp
                + 4.0 * delta * gc
                - 2.0 * (q::dot(&qc[a], &y[b]) + q::dot(&qc[b], &y[a]))
                + delta * qq * ps
                + delta * rq / 6.0
        };
        t.push([comp(0, 0), comp(0, 1), comp(1, 1)]);
        // J = -4 Q Y - 2 |psi|^2 Q chi
        let qy = q_pair(&y[0], &y[1]);
        for b in 0..2 {
            let v = q::add(&q::scale(-4.0, &qy[b]), &q::scale(-2.0 * ps, &qc[b]));
            j.set(p, b, v);
        }
    }
    Ok(Currents { t, j })
}

/// tr T - (-P + 4G + 2|Q chi|^2 |psi|^2 + R(psi)/3), sup over nodes.
pub fn trace_residual(
    dom: &ConformalDomain,
    frame: &Frame,
    chart: &dyn TargetChart,
    s: &AdhgState,
) -> Result<f64> {
    let cur = noether_currents(dom, frame, chart, s)?;
    let pw = Pointwise::new(dom, frame, chart, s);
    let d = pw.d;
    let stress = dirac_stress(dom, frame, chart, s, &pw);
    let mut worst = 0.0f64;
    for p in 0..dom.len() {
        let pp = stress[p][0][0] + stress[p][1][1];
        let rq = if chart.is_flat() {
            0.0
        } else {
            curvature_quartic(&riemann_lower(chart, s.phi.node(p)), d, &s.psi, p)
        };
        let rhs = -pp
            + 4.0 * pw.coupling(p, &s.psi)
            + 2.0 * pw.qchi_sq(p) * pw.psi_sq(p, &s.psi)
            + rq / 3.0;
        let tr = cur.t[p][0] + cur.t[p][2];
        worst = worst.max((tr - rhs).abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElResidual {
    pub r_phi: f64,
    pub r_psi: f64,
}

/// Euler-Lagrange residual fields: for phi,
/// `tau - R/2 - 2 div <Q chi, psi> + S_nabla_R(psi) / 12`, and for psi,
/// `D psi - |Q chi|^2 psi - S_R(psi) / 3 - 2 (Id x phi_*) Q chi`. Conformal domains only.
pub fn adhg_el_fields(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    s: &AdhgState,
) -> Result<(Vec<f64>, SpinorField)> {
    s.check(dom, chart)?;
    let frame = Frame::conformal(dom);
    let pw = Pointwise::new(dom, &frame, chart, s);
    let d = pw.d;
    let flat = chart.is_flat();
    let mut rphi = tension(dom, chart, &s.phi);
    if !flat {
        let r = crate::dirac::curvature_coupling(dom, &frame, chart, &s.phi, &s.psi);
        for (a, b) in rphi.iter_mut().zip(&r) {
            *a -= 0.5 * b;
        }
    }
    // V_beta^i = <(Q chi)^beta, psi^i>, div V = (1/sqrt g) d_mu(A^mu_beta V_beta) + Gamma e_beta(phi) V_beta
    let len = dom.len();
    let mut vx = vec![0.0; len * d];
    let mut vy = vec![0.0; len * d];
    let mut vb = [vec![0.0; len * d], vec![0.0; len * d]];
    for p in 0..len {
        for b in 0..2 {
            let qc = pw.qchi.get(p, b);
            for i in 0..d {
                let v = q::dot(&qc, &s.psi.get(p, i));
                vb[b][p * d + i] = v;
                vx[p * d + i] += frame.a(p, b, 0) * v;
                vy[p * d + i] += frame.a(p, b, 1) * v;
            }
        }
    }
    let dvx = dom.d_x(&vx, d);
    let dvy = dom.d_y(&vy, d);
    let mut gam = vec![0.0; d * d * d];
    for p in 0..len {
        if !flat {
            chart.christoffel_into(s.phi.node(p), &mut gam);
        }
        let mut sr = vec![0.0; d];
        if !flat {
            let mut cov = vec![0.0; d * d * d * d * d];
            chart.riemann_cov_into(s.phi.node(p), &mut cov);
            let ginv = invert(&pw.g[p * d * d..(p + 1) * d * d], d);
            let d4 = d * d * d * d;
            let mut lowered = vec![0.0; d];
            for n in 0..d {
                lowered[n] = curvature_quartic(&cov[n * d4..(n + 1) * d4], d, &s.psi, p);
            }
            for m in 0..d {
                for n in 0..d {
                    sr[m] += ginv[m * d + n] * lowered[n];
                }
            }
        }
        for i in 0..d {
            let mut div = (dvx[p * d + i] + dvy[p * d + i]) / frame.sqrt_det[p];
            if !flat {
                for b in 0..2 {
                    for j in 0..d {
                        for k in 0..d {
                            div +=
                                gam[(i * d + j) * d + k] * pw.ephi[b][p * d + k] * vb[b][p * d + j];
                        }
                    }
                }
            }
            rphi[p * d + i] += -2.0 * div + sr[i] / 12.0;
        }
    }
    let dpsi = twisted_dirac(dom, &frame, chart, &s.phi, &s.psi);
    let mut rpsi = dpsi.clone();
    let mut r = vec![0.0; d * d * d * d];
    for p in 0..len {
        let qq = pw.qchi_sq(p);
        if !flat {
            chart.riemann_into(s.phi.node(p), &mut r);
        }
        for m in 0..d {
            let mut v = rpsi.get(p, m);
            q::axpy(-qq, &s.psi.get(p, m), &mut v);
            for b in 0..2 {
                q::axpy(-2.0 * pw.ephi[b][p * d + m], &pw.qchi.get(p, b), &mut v);
            }
            if !flat {
                // S_R^m = R^m_{jkl} <psi^j, psi^l> psi^k
                for j in 0..d {
                    for k in 0..d {
                        for l in 0..d {
                            let c = r[((m * d + j) * d + k) * d + l]
                                * q::dot(&s.psi.get(p, j), &s.psi.get(p, l));
                            if c != 0.0 {
                                q::axpy(-c / 3.0, &s.psi.get(p, k), &mut v);
                            }
                        }
                    }
                }
            }
            rpsi.set(p, m, v);
        }
    }
    Ok((rphi, rpsi))
}

pub fn adhg_el_residual(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    s: &AdhgState,
) -> Result<ElResidual> {
    let (fphi, fpsi) = adhg_el_fields(dom, chart, s)?;
    let r_phi = crate::harmonic::sup_norm(chart, &s.phi, &fphi);
    let n2 = crate::dirac::spinor_dot(chart, &s.phi, &fpsi, &fpsi);
    let r_psi = n2.iter().fold(0.0f64, |m, v| m.max(v.max(0.0).sqrt()));
    Ok(ElResidual { r_phi, r_psi })
}

/// Generator of a diffeomorphism acting on all fields, as first-order variations.
pub struct LieVariation {
    pub dphi: Vec<f64>,
    pub dpsi: SpinorField,
    /// Frame components (h_11, h_12, h_22) of the metric variation.
    pub h: Vec<[f64; 3]>,
    pub dchi: GravitinoField,
}

/// Frame rotation rate w = (d_y X^x - d_x X^y) / 2 and the coordinate Jacobian of X.
fn jacobian(dom: &ConformalDomain, x: &[[f64; 2]]) -> (Vec<[[f64; 2]; 2]>, Vec<f64>) {
    let flat: Vec<f64> = x.iter().flat_map(|v| [v[0], v[1]]).collect();
    let dx = dom.d_x(&flat, 2);
    let dy = dom.d_y(&flat, 2);
    // dxm[p][mu][nu] = d_nu X^mu
    let dxm: Vec<[[f64; 2]; 2]> = (0..dom.len())
        .map(|p| [[dx[2 * p], dy[2 * p]], [dx[2 * p + 1], dy[2 * p + 1]]])
        .collect();
    let w = dxm.iter().map(|m| 0.5 * (m[0][1] - m[1][0])).collect();
    (dxm, w)
}

fn grad_log_lambda(dom: &ConformalDomain) -> Vec<[f64; 2]> {
    let ll: Vec<f64> = dom.lambda_sq().iter().map(|v| 0.5 * v.ln()).collect();
    let gx = dom.d_x(&ll, 1);
    let gy = dom.d_y(&ll, 1);
    gx.into_iter().zip(gy).map(|(a, b)| [a, b]).collect()
}

/// Lie derivative of (phi, psi, gamma, chi) along the vector field X on a conformal domain.
pub fn lie_variation(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    s: &AdhgState,
    x: &[[f64; 2]],
) -> LieVariation {
    let d = s.phi.dim;
    let (pdx, pdy) = map_derivatives(dom, chart, &s.phi);
    let dphi = (0..dom.len() * d)
        .map(|k| x[k / d][0] * pdx[k] + x[k / d][1] * pdy[k])
        .collect();
    let (dxm, w) = jacobian(dom, x);
    let gl = grad_log_lambda(dom);
    let h = (0..dom.len())
        .map(|p| {
            let c = 2.0 * (x[p][0] * gl[p][0] + x[p][1] * gl[p][1]);
            let m = dxm[p];
            [c + 2.0 * m[0][0], m[0][1] + m[1][0], c + 2.0 * m[1][1]]
        })
        .collect();
    let (sx, sy) = twisted_grad(dom, s.psi.spin, &s.psi.values, d * 4);
    let mut dpsi = s.psi.clone();
    for p in 0..dom.len() {
        for i in 0..d {
            let mut v = q::ZERO;
            for c in 0..4 {
                let k = (p * d + i) * 4 + c;
                v[c] = x[p][0] * sx[k] + x[p][1] * sy[k];
            }
            q::axpy(SPIN_ROTATION * w[p], &q::ek(&s.psi.get(p, i)), &mut v);
            dpsi.set(p, i, v);
        }
    }
    let (cx, cy) = twisted_grad(dom, s.chi.spin, &s.chi.values, 8);
    let mut dchi = s.chi.clone();
    for p in 0..dom.len() {
        let m = dxm[p];
        for b in 0..2 {
            let mut v = q::ZERO;
            for c in 0..4 {
                let k = (p * 2 + b) * 4 + c;
                v[c] = x[p][0] * cx[k] + x[p][1] * cy[k];
            }
            q::axpy(SPIN_ROTATION * w[p], &q::ek(&s.chi.get(p, b)), &mut v);
            for a in 0..2 {
                let wba = 0.5 * (m[b][a] - m[a][b]);
                q::axpy(-wba, &s.chi.get(p, a), &mut v);
            }
            dchi.set(p, b, v);
        }
    }
    LieVariation {
        dphi,
        dpsi,
        h,
        dchi,
    }
}

/// Pairing -1/2 integral h.T + integral <dchi, J> for given variations.
pub fn current_pairing(
    dom: &ConformalDomain,
    frame: &Frame,
    cur: &Currents,
    h: &[[f64; 3]],
    dchi: &GravitinoField,
) -> f64 {
    let cell = dom.cell_area();
    (0..dom.len())
        .map(|p| {
            let t = cur.t[p];
            let ht = h[p][0] * t[0] + 2.0 * h[p][1] * t[1] + h[p][2] * t[2];
            let jc: f64 = (0..2)
                .map(|b| q::dot(&dchi.get(p, b), &cur.j.get(p, b)))
                .sum();
            frame.sqrt_det[p] * cell * (-0.5 * ht + jc)
        })
        .sum()
}

/// Discrete divergence of the currents: the field F with
/// integral <F, X> dvol = -1/2 integral h(X).T + integral <delta_X chi, J>
/// for every vector field X, where h and delta chi are the Lie variations above.
pub fn current_divergence(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    s: &AdhgState,
) -> Result<Vec<[f64; 2]>> {
    let frame = Frame::conformal(dom);
    let cur = noether_currents(dom, &frame, chart, s)?;
    let len = dom.len();
    let gl = grad_log_lambda(dom);
    let (cx, cy) = twisted_grad(dom, s.chi.spin, &s.chi.values, 8);
    // L(X) = sum a_mu X^mu + b_{mu nu} d_nu X^mu, weighted by dvol
    let mut a = vec![[0.0; 2]; len];
    let mut b = vec![[[0.0; 2]; 2]; len];
    for p in 0..len {
        let dv = frame.sqrt_det[p] * dom.cell_area();
        let t = cur.t[p];
        let tm = [[t[0], t[1]], [t[1], t[2]]];
        let tr = t[0] + t[2];
        let mut kk = 0.0;
        let mut mm = [[0.0; 2]; 2];
        for beta in 0..2 {
            let jb = cur.j.get(p, beta);
            kk += q::dot(&q::ek(&s.chi.get(p, beta)), &jb);
            for alpha in 0..2 {
                mm[beta][alpha] = q::dot(&s.chi.get(p, alpha), &jb);
            }
            for c in 0..4 {
                let k = (p * 2 + beta) * 4 + c;
                a[p][0] += dv * cx[k] * jb[c];
                a[p][1] += dv * cy[k] * jb[c];
            }
        }
        for mu in 0..2 {
            a[p][mu] -= dv * gl[p][mu] * tr;
            for nu in 0..2 {
                b[p][mu][nu] -= dv * tm[mu][nu];
            }
        }
        // w = (d_1 X^0 - d_0 X^1) / 2
        b[p][0][1] += dv * 0.5 * SPIN_ROTATION * kk;
        b[p][1][0] -= dv * 0.5 * SPIN_ROTATION * kk;
        // -sum W_{beta alpha} M_{beta alpha}, W_{ba} = (d_a X^b - d_b X^a) / 2
        for beta in 0..2 {
            for alpha in 0..2 {
                b[p][beta][alpha] -= 0.5 * dv * mm[beta][alpha];
                b[p][alpha][beta] += 0.5 * dv * mm[beta][alpha];
            }
        }
    }
    let mut out = vec![[0.0; 2]; len];
    for mu in 0..2 {
        let bx: Vec<f64> = b.iter().map(|m| m[mu][0]).collect();
        let by: Vec<f64> = b.iter().map(|m| m[mu][1]).collect();
        let dbx = dom.d_x(&bx, 1);
        let dby = dom.d_y(&by, 1);
        for p in 0..len {
            let dv = frame.sqrt_det[p] * dom.cell_area();
            out[p][mu] = (a[p][mu] - dbx[p] - dby[p]) / dv;
        }
    }
    Ok(out)
}

/// Apply the super Weyl shift chi^alpha -> chi^alpha + e_alpha . s.
pub fn super_weyl(chi: &GravitinoField, s: &[Quat]) -> GravitinoField {
    let mut out = chi.clone();
    for p in 0..chi.len() {
        for a in 0..2 {
            out.set(p, a, q::add(&chi.get(p, a), &q::e(a, &s[p])));
        }
    }
    out
}

/// Rescaled conformal change lambda -> e^u lambda, psi -> e^{-u/2} psi, chi -> e^{-u/2} chi.
pub fn rescale(
    dom: &ConformalDomain,
    s: &AdhgState,
    u: &[f64],
) -> Result<(ConformalDomain, AdhgState)> {
    let lam: Vec<f64> = dom
        .lambda_sq()
        .iter()
        .zip(u)
        .map(|(l, u)| l * (2.0 * u).exp())
        .collect();
    let nd = dom.with_lambda_sq(lam)?;
    let mut out = s.clone();
    let d = s.phi.dim;
    for p in 0..dom.len() {
        let f = (-0.5 * u[p]).exp();
        for c in 0..d * 4 {
            out.psi.values[p * d * 4 + c] *= f;
        }
        for c in 0..8 {
            out.chi.values[p * 8 + c] *= f;
        }
    }
    Ok((nd, out))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub super_weyl: f64,
    pub rescaled_conformal: f64,
    pub q_part_of_j: f64,
    pub q_idempotence: f64,
    pub divergence: f64,
    pub trace: f64,
    /// First-order change of A under the matter part of a supersymmetry, see [`susy_defect`].
    pub susy: f64,
}

/// First-order change of the action under the matter part of a supersymmetry with constant
/// parameter q: delta phi^i = <q, psi^i>, delta psi^i = -(e_alpha(phi^i) - <psi^i, chi^alpha>) e_alpha . q.
/// It cancels for flat domains, flat targets and chi = 0; otherwise the gravitino and frame
/// variations needed for invariance are not included and the value is a diagnostic.
pub fn susy_defect(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    s: &AdhgState,
    qs: Quat,
) -> Result<f64> {
    let frame = Frame::conformal(dom);
    let d = s.phi.dim;
    let ephi = frame_derivatives(dom, &frame, chart, &s.phi);
    let mut dphi = vec![0.0; dom.len() * d];
    let mut dpsi = SpinorField::zeros(dom.len(), d, s.psi.spin);
    for p in 0..dom.len() {
        for i in 0..d {
            dphi[p * d + i] = q::dot(&qs, &s.psi.get(p, i));
            let mut v = q::ZERO;
            for a in 0..2 {
                let c = ephi[a][p * d + i] - q::dot(&s.psi.get(p, i), &s.chi.get(p, a));
                q::axpy(-c, &q::e(a, &qs), &mut v);
            }
            dpsi.set(p, i, v);
        }
    }
    let eps = 1e-6;
    let shifted = |t: f64| -> Result<f64> {
        let mut st = s.clone();
        for (x, v) in st.phi.values.iter_mut().zip(&dphi) {
            *x += t * v;
        }
        for (x, v) in st.psi.values.iter_mut().zip(&dpsi.values) {
            *x += t * v;
        }
        Ok(adhg_action(dom, &frame, chart, &st)?.total)
    };
    Ok((shifted(eps)? - shifted(-eps)?) / (2.0 * eps))
}

/// Symmetry defects for one state: super Weyl with parameter `weyl`, rescaled conformal with
/// factor `u`, the Q-part of J, idempotence of Q, the current divergence and the trace identity.
pub fn symmetry_defects(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    s: &AdhgState,
    weyl: &[Quat],
    u: &[f64],
    susy_q: Quat,
) -> Result<DefectReport> {
    let frame = Frame::conformal(dom);
    let a0 = adhg_action(dom, &frame, chart, s)?.total;
    let mut sw = s.clone();
    sw.chi = super_weyl(&s.chi, weyl);
    let a_sw = adhg_action(dom, &frame, chart, &sw)?.total;
    let (nd, ns) = rescale(dom, s, u)?;
    let a_rc = adhg_action(&nd, &Frame::conformal(&nd), chart, &ns)?.total;
    let cur = noether_currents(dom, &frame, chart, s)?;
    let qj = q_projection(&cur.j);
    let q_part = cur
        .j
        .values
        .iter()
        .zip(&qj.values)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let qc = q_projection(&s.chi);
    let qqc = q_projection(&qc);
    let idem = qc
        .values
        .iter()
        .zip(&qqc.values)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let div = current_divergence(dom, chart, s)?
        .iter()
        .fold(0.0f64, |m, v| m.max(v[0].abs()).max(v[1].abs()));
    let susy = susy_defect(dom, chart, s, susy_q)?.abs();
    Ok(DefectReport {
        super_weyl: (a_sw - a0).abs(),
        rescaled_conformal: (a_rc - a0).abs(),
        q_part_of_j: q_part,
        q_idempotence: idem,
        divergence: div,
        trace: trace_residual(dom, &frame, chart, s)?,
        susy,
    })
}

/// Constant on-shell configuration on a flat domain: affine phi into a flat torus, constant
/// chi with Q chi != 0 and psi^i = -2 sum_beta (Q chi)^beta d_beta phi^i / |Q chi|^2.
pub fn constant_solution(
    dom: &ConformalDomain,
    slope: [[f64; 2]; 2],
    chi: [Quat; 2],
) -> Result<AdhgState> {
    let [q1, q2] = q_pair(&chi[0], &chi[1]);
    let qq = q::dot(&q1, &q1) + q::dot(&q2, &q2);
    if !(qq > 0.0) {
        return Err(SigmaError::Untestable("Q chi vanishes".into()));
    }
    let phi = MapField::from_fn(dom, 2, |a, b| {
        let x = a + dom.tau().re * b;
        let y = dom.tau().im * b;
        vec![
            slope[0][0] * x + slope[0][1] * y,
            slope[1][0] * x + slope[1][1] * y,
        ]
    });
    let mut psi = SpinorField::zeros(dom.len(), 2, SpinStructure::PERIODIC);
    let mut ch = GravitinoField::zeros(dom.len(), SpinStructure::PERIODIC);
    for p in 0..dom.len() {
        for i in 0..2 {
            let mut v = q::ZERO;
            q::axpy(-2.0 * slope[i][0] / qq, &q1, &mut v);
            q::axpy(-2.0 * slope[i][1] / qq, &q2, &mut v);
            psi.set(p, i, v);
        }
        ch.set(p, 0, chi[0]);
        ch.set(p, 1, chi[1]);
    }
    Ok(AdhgState { phi, psi, chi: ch })
}

/// Smooth test state with all fields switched on. `small` keeps phi near the origin, for charts
/// without a period lattice; otherwise phi is a perturbed identity of the unit square torus.
pub fn sample_state(dom: &ConformalDomain, small: bool) -> AdhgState {
    let phi = MapField::from_fn(dom, 2, |a, b| {
        if small {
            vec![0.3 * (TAU * a).cos(), 0.2 * (TAU * b).sin()]
        } else {
            vec![a + 0.1 * (TAU * b).sin(), b + 0.05 * (TAU * a).cos()]
        }
    });
    let spin = SpinStructure::PERIODIC;
    let mut psi = SpinorField::zeros(dom.len(), 2, spin);
    let mut chi = GravitinoField::zeros(dom.len(), spin);
    for p in 0..dom.len() {
        let (a, b) = dom.node_ab(p);
        let th = TAU * (a + 2.0 * b);
        let ph = TAU * (2.0 * a - b);
        psi.set(p, 0, [0.3 * th.cos(), 0.2, -0.1 * th.sin(), 0.05]);
        psi.set(p, 1, [0.1, 0.2 * ph.sin(), 0.1, -0.2 * ph.cos()]);
        chi.set(p, 0, [0.2 * ph.cos(), 0.1, 0.3, -0.1 * th.sin()]);
        chi.set(p, 1, [0.1, -0.2, 0.1 * th.cos(), 0.2]);
    }
    AdhgState { phi, psi, chi }
}

/// Smooth conformal factor u used for rescaling checks.
pub fn sample_conformal_factor(dom: &ConformalDomain) -> Vec<f64> {
    (0..dom.len())
        .map(|p| {
            let (a, b) = dom.node_ab(p);
            0.2 * (TAU * a).cos() + 0.1 * (TAU * (a + b)).sin()
        })
        .collect()
}

/// Smooth super Weyl parameter.
pub fn sample_weyl(dom: &ConformalDomain) -> Vec<Quat> {
    (0..dom.len())
        .map(|p| {
            let (a, b) = dom.node_ab(p);
            [
                0.3 * (TAU * b).sin(),
                0.1,
                -0.2 * (TAU * (a - b)).cos(),
                0.2,
            ]
        })
        .collect()
}

/// Smooth vector field generating a diffeomorphism.
pub fn sample_vector_field(dom: &ConformalDomain) -> Vec<[f64; 2]> {
    (0..dom.len())
        .map(|p| {
            let (a, b) = dom.node_ab(p);
            [(TAU * b).sin(), 0.4 * (TAU * (a + b)).cos()]
        })
        .collect()
}

/// Flat-domain on-shell state: constant solution with integer slopes, moved by a super Weyl
/// shift and a rescaling, which keeps it on shell.
pub fn rescaled_constant_solution(n: usize) -> Result<(ConformalDomain, AdhgState)> {
    let dom = ConformalDomain::flat(n, num_complex::Complex64::i())?;
    let mut s = constant_solution(
        &dom,
        [[1.0, 1.0], [0.0, 1.0]],
        [[0.3, 0.1, -0.2, 0.5], [0.2, -0.4, 0.1, 0.3]],
    )?;
    s.chi = super_weyl(&s.chi, &sample_weyl(&dom));
    rescale(&dom, &s, &sample_conformal_factor(&dom))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    /// Central difference of the action along the variation.
    pub finite_difference: f64,
    /// The same derivative predicted from the currents.
    pub current: f64,
    pub relative: f64,
}

fn central<F: Fn(f64) -> Result<f64>>(f: F, eps: f64) -> Result<f64> {
    Ok((f(eps)? - f(-eps)?) / (2.0 * eps))
}

/// Derivative of the action along a metric variation, a gravitino variation and a
/// diffeomorphism, each compared with the prediction from T and J. For the diffeomorphism the
/// prediction is minus the matter part, so `relative` measures the invariance defect.
pub fn current_identities(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    s: &AdhgState,
) -> Result<Vec<IdentityCheck>> {
    let frame = Frame::conformal(dom);
    let cur = noether_currents(dom, &frame, chart, s)?;
    let lam = dom.lambda_sq();
    let eps = 1e-5;
    let zero_chi = GravitinoField::zeros(dom.len(), s.chi.spin);
    let check = |name: &str, fd: f64, pred: f64| IdentityCheck {
        name: name.into(),
        finite_difference: fd,
        current: pred,
        relative: (fd - pred).abs() / pred.abs().max(1e-300),
    };
    let mut out = vec![];

    let dg: Vec<[f64; 3]> = (0..dom.len())
        .map(|p| {
            let (a, b) = dom.node_ab(p);
            let th = TAU * (a - b);
            [th.cos(), 0.5 * th.sin(), 0.3 + 0.2 * (TAU * a).sin()]
        })
        .collect();
    let fd = central(
        |t| {
            let g: Vec<[f64; 3]> = (0..dom.len())
                .map(|p| [lam[p] + t * dg[p][0], t * dg[p][1], lam[p] + t * dg[p][2]])
                .collect();
            Ok(adhg_action(dom, &Frame::from_metric(&g)?, chart, s)?.total)
        },
        eps,
    )?;
    let h: Vec<[f64; 3]> = (0..dom.len())
        .map(|p| [dg[p][0] / lam[p], dg[p][1] / lam[p], dg[p][2] / lam[p]])
        .collect();
    out.push(check(
        "metric",
        fd,
        current_pairing(dom, &frame, &cur, &h, &zero_chi),
    ));

    let mut dchi = GravitinoField::zeros(dom.len(), s.chi.spin);
    for (k, v) in dchi.values.iter_mut().enumerate() {
        *v = ((k * 31) % 17) as f64 / 17.0 - 0.5;
    }
    let fd = central(
        |t| {
            let mut st = s.clone();
            for (x, v) in st.chi.values.iter_mut().zip(&dchi.values) {
                *x += t * v;
            }
            Ok(adhg_action(dom, &frame, chart, &st)?.total)
        },
        eps,
    )?;
    let no_h = vec![[0.0; 3]; dom.len()];
    out.push(check(
        "gravitino",
        fd,
        current_pairing(dom, &frame, &cur, &no_h, &dchi),
    ));

    let lv = lie_variation(dom, chart, s, &sample_vector_field(dom));
    let fd = central(
        |t| {
            let mut st = s.clone();
            for (a, v) in st.phi.values.iter_mut().zip(&lv.dphi) {
                *a += t * v;
            }
            st.phi.wrap(chart);
            for (a, v) in st.psi.values.iter_mut().zip(&lv.dpsi.values) {
                *a += t * v;
            }
            Ok(adhg_action(dom, &frame, chart, &st)?.total)
        },
        1e-6,
    )?;
    let geom = current_pairing(dom, &frame, &cur, &lv.h, &lv.dchi);
    out.push(check("diffeomorphism", fd, -geom));
    Ok(out)
}
