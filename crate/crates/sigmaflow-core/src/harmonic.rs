//! Dirichlet energy, tension field and harmonic map heat flow.
//!
//! Map derivatives use minimal-image differences in the target chart, so maps into tori may
//! wind. The discrete energy is `1/2 sum_cells g_ij(phi) (D_x phi^i D_x phi^j + D_y phi^i D_y phi^j)`,
//! which does not see lambda, and for flat targets the tension field is exactly minus its
//! L^2 gradient.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SigmaError};
use crate::grid::ConformalDomain;
use crate::target::{invert, TargetChart};

/// Map values in target coordinates, `dim` components per node.
#[derive(Clone, Debug, PartialEq)]
pub struct MapField {
    pub dim: usize,
    pub values: Vec<f64>,
}

impl MapField {
    pub fn new(dim: usize, values: Vec<f64>) -> Self {
        assert!(dim > 0 && values.len().is_multiple_of(dim));
        Self { dim, values }
    }

    pub fn from_fn(dom: &ConformalDomain, dim: usize, f: impl Fn(f64, f64) -> Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(dom.len() * dim);
        for p in 0..dom.len() {
            let (a, b) = dom.node_ab(p);
            let v = f(a, b);
            assert_eq!(v.len(), dim);
            values.extend(v);
        }
        Self { dim, values }
    }

    pub fn node(&self, p: usize) -> &[f64] {
        &self.values[p * self.dim..(p + 1) * self.dim]
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn wrap(&mut self, chart: &dyn TargetChart) {
        for v in self.values.chunks_mut(self.dim) {
            chart.wrap(v);
        }
    }
}

pub fn check_map(dom: &ConformalDomain, chart: &dyn TargetChart, phi: &MapField) -> Result<()> {
    if phi.dim != chart.dim() {
        return Err(SigmaError::DimensionMismatch {
            expected: chart.dim(),
            got: phi.dim,
        });
    }
    if phi.len() != dom.len() {
        return Err(SigmaError::DimensionMismatch {
            expected: dom.len(),
            got: phi.len(),
        });
    }
    Ok(())
}

/// First derivatives (D_x phi, D_y phi), each with `dim` components per node.
pub fn map_derivatives(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    phi: &MapField,
) -> (Vec<f64>, Vec<f64>) {
    let d = phi.dim;
    let half_n = 0.5 * dom.n() as f64;
    let mut da = vec![0.0; phi.values.len()];
    let mut db = vec![0.0; phi.values.len()];
    let (t1, t2) = (dom.tau().re, dom.tau().im);
    da.par_chunks_mut(d)
        .zip(db.par_chunks_mut(d))
        .enumerate()
        .for_each_init(
            || (vec![0.0; d], vec![0.0; d]),
            |(f, b), (p, (oa, ob))| {
                let nb = dom.neighbours(p);
                let y0 = phi.node(p);
                for (axis, out) in [(0usize, &mut *oa), (1usize, &mut *ob)] {
                    chart.delta(phi.node(nb[2 * axis].0), y0, f);
                    chart.delta(y0, phi.node(nb[2 * axis + 1].0), b);
                    for c in 0..d {
                        out[c] = (f[c] + b[c]) * half_n;
                    }
                }
            },
        );
    let dy = da.iter().zip(&db).map(|(a, b)| (b - t1 * a) / t2).collect();
    (da, dy)
}

/// Pointwise |d phi|^2 lambda^2 = g_ij (D_x phi^i D_x phi^j + D_y phi^i D_y phi^j).
pub fn conformal_energy_density(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    phi: &MapField,
) -> Vec<f64> {
    let d = phi.dim;
    let (dx, dy) = map_derivatives(dom, chart, phi);
    (0..dom.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; d * d],
            |g, p| {
                chart.metric_into(phi.node(p), g);
                let mut s = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        s += g[i * d + j]
                            * (dx[p * d + i] * dx[p * d + j] + dy[p * d + i] * dy[p * d + j]);
                    }
                }
                s
            },
        )
        .collect()
}

pub fn energy(dom: &ConformalDomain, chart: &dyn TargetChart, phi: &MapField) -> f64 {
    0.5 * dom.integrate_flat(&conformal_energy_density(dom, chart, phi))
}

/// Tension field tau(phi) = (Delta phi + Gamma(phi)(d phi, d phi)) / lambda^2, discretised as
/// g^{-1} (D(g D phi) - 1/2 dg(D phi, D phi)) / lambda^2. This is exactly minus the gradient of
/// `energy` in the L^2 metric, so its zeros are discrete critical points.
pub fn tension(dom: &ConformalDomain, chart: &dyn TargetChart, phi: &MapField) -> Vec<f64> {
    let d = phi.dim;
    let (dx, dy) = map_derivatives(dom, chart, phi);
    let lam = dom.lambda_sq();
    if chart.is_flat() {
        let dxx = dom.d_x(&dx, d);
        let dyy = dom.d_y(&dy, d);
        let mut out = vec![0.0; phi.values.len()];
        out.par_chunks_mut(d).enumerate().for_each(|(p, t)| {
            for i in 0..d {
                t[i] = (dxx[p * d + i] + dyy[p * d + i]) / lam[p];
            }
        });
        return out;
    }
    // lowered fluxes g_mj D phi^j and the metric-derivative term
    let mut fx = vec![0.0; phi.values.len()];
    let mut fy = vec![0.0; phi.values.len()];
    let mut src = vec![0.0; phi.values.len()];
    let mut ginv = vec![0.0; phi.values.len() * d];
    fx.par_chunks_mut(d)
        .zip(fy.par_chunks_mut(d))
        .zip(src.par_chunks_mut(d))
        .zip(ginv.par_chunks_mut(d * d))
        .enumerate()
        .for_each_init(
            || (vec![0.0; d * d], vec![0.0; d * d * d]),
            |(g, gam), (p, (((ox, oy), os), oi))| {
                chart.metric_into(phi.node(p), g);
                chart.christoffel_into(phi.node(p), gam);
                let ux = &dx[p * d..(p + 1) * d];
                let uy = &dy[p * d..(p + 1) * d];
                for m in 0..d {
                    for j in 0..d {
                        ox[m] += g[m * d + j] * ux[j];
                        oy[m] += g[m * d + j] * uy[j];
                    }
                    // d_m g_ij = g_il Gamma^l_mj + g_jl Gamma^l_mi, contracted twice with d phi
                    let mut s = 0.0;
                    for i in 0..d {
                        for j in 0..d {
                            let w = ux[i] * ux[j] + uy[i] * uy[j];
                            for l in 0..d {
                                s += w
                                    * (g[i * d + l] * gam[(l * d + m) * d + j]
                                        + g[j * d + l] * gam[(l * d + m) * d + i]);
                            }
                        }
                    }
                    os[m] = 0.5 * s;
                }
                oi.copy_from_slice(&invert(g, d));
            },
        );
    let dfx = dom.d_x(&fx, d);
    let dfy = dom.d_y(&fy, d);
    let mut out = vec![0.0; phi.values.len()];
    out.par_chunks_mut(d).enumerate().for_each(|(p, t)| {
        for i in 0..d {
            let mut v = 0.0;
            for m in 0..d {
                v += ginv[p * d * d + i * d + m]
                    * (dfx[p * d + m] + dfy[p * d + m] - src[p * d + m]);
            }
            t[i] = v / lam[p];
        }
    });
    out
}

/// Largest pointwise target norm |v|_g of a vector field along phi.
pub fn sup_norm(chart: &dyn TargetChart, phi: &MapField, v: &[f64]) -> f64 {
    let d = phi.dim;
    (0..phi.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; d * d],
            |g, p| {
                chart.metric_into(phi.node(p), g);
                let mut s = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        s += g[i * d + j] * v[p * d + i] * v[p * d + j];
                    }
                }
                s.max(0.0).sqrt()
            },
        )
        .reduce(|| 0.0, f64::max)
}

/// L^2 pairing of two vector fields along phi, with the area form lambda^2 dx dy.
pub fn l2_pairing(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    phi: &MapField,
    u: &[f64],
    v: &[f64],
) -> f64 {
    let d = phi.dim;
    let dens: Vec<f64> = (0..phi.len())
        .map(|p| {
            let mut g = vec![0.0; d * d];
            chart.metric_into(phi.node(p), &mut g);
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    s += g[i * d + j] * u[p * d + i] * v[p * d + j];
                }
            }
            s
        })
        .collect();
    dom.integrate(&dens)
}

/// sup |phi_{z zbar} + Gamma(phi_z, phi_zbar)|, written in divergence form as
/// g^{-1} ((d_z(g phi_zbar) + d_zbar(g phi_z)) / 2 - dg(phi_z, phi_zbar) / 2). This equals
/// lambda^2 |tau| / 4 pointwise, measured in the Euclidean norm of the chart coordinates.
pub fn el_residual(dom: &ConformalDomain, chart: &dyn TargetChart, phi: &MapField) -> f64 {
    let d = phi.dim;
    let n = dom.len();
    let (dx, dy) = map_derivatives(dom, chart, phi);
    let z = |p: usize, c: usize| 0.5 * Complex64::new(dx[p * d + c], -dy[p * d + c]);
    let zb = |p: usize, c: usize| 0.5 * Complex64::new(dx[p * d + c], dy[p * d + c]);
    // lowered g phi_zbar and g phi_z per component, then d_z and d_zbar of them
    let mut low_zb = vec![vec![Complex64::new(0.0, 0.0); n]; d];
    let mut low_z = low_zb.clone();
    let mut src = vec![0.0; n * d];
    let mut ginv = vec![0.0; n * d * d];
    let mut g = vec![0.0; d * d];
    let mut gam = vec![0.0; d * d * d];
    for p in 0..n {
        chart.metric_into(phi.node(p), &mut g);
        chart.christoffel_into(phi.node(p), &mut gam);
        for m in 0..d {
            for j in 0..d {
                low_zb[m][p] += g[m * d + j] * zb(p, j);
                low_z[m][p] += g[m * d + j] * z(p, j);
            }
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..d {
                for j in 0..d {
                    let mut dg = 0.0;
                    for l in 0..d {
                        dg += g[i * d + l] * gam[(l * d + m) * d + j]
                            + g[j * d + l] * gam[(l * d + m) * d + i];
                    }
                    s += dg * z(p, i) * zb(p, j);
                }
            }
            src[p * d + m] = 0.5 * s.re;
        }
        ginv[p * d * d..(p + 1) * d * d].copy_from_slice(&invert(&g, d));
    }
    let div: Vec<Vec<Complex64>> = (0..d)
        .map(|m| {
            let a = dom.d_z(&low_zb[m]);
            let b = dom.d_zbar(&low_z[m]);
            a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect()
        })
        .collect();
    (0..n)
        .map(|p| {
            let mut s = 0.0;
            for i in 0..d {
                let mut r = Complex64::new(0.0, 0.0);
                for m in 0..d {
                    r += ginv[p * d * d + i * d + m] * (div[m][p] - src[p * d + m]);
                }
                s += r.norm_sqr();
            }
            s.sqrt()
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowParams {
    /// Initial time step; the CFL default is used when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_max_steps() -> usize {
    200_000
}

fn default_tol() -> f64 {
    1e-8
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            dt: None,
            max_steps: default_max_steps(),
            tol: default_tol(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub steps: usize,
    pub dt_initial: f64,
    pub dt_final: f64,
    pub rejections: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub energy_trace: Vec<f64>,
}

/// Energy increase tolerated before a step is rejected.
pub const ENERGY_SLACK: f64 = 1e-10;
/// Consecutive rejections before the flow gives up.
pub const MAX_REJECTIONS: usize = 20;

/// One explicit Euler flow: `force` returns the descent direction and its sup norm,
/// `advance` builds the candidate state, `functional` returns the monitored quantity as
/// (main, coupled) parts whose increments are combined as d main + d coupled / 2.
pub(crate) fn euler_flow<S>(
    state: &mut S,
    dt0: f64,
    params: &FlowParams,
    mut force: impl FnMut(&S) -> (Vec<f64>, f64),
    mut advance: impl FnMut(&S, &[f64], f64) -> S,
    mut functional: impl FnMut(&S) -> (f64, f64),
    finite: impl Fn(&S) -> bool,
) -> Result<FlowReport> {
    let mut dt = dt0;
    let (mut e, mut c) = functional(state);
    let mut trace = vec![e + 0.5 * c];
    let (mut f, mut sup) = force(state);
    let mut steps = 0;
    let mut rejections = 0;
    let mut streak = 0;
    while sup >= params.tol && steps < params.max_steps {
        let cand = advance(state, &f, dt);
        if !finite(&cand) {
            return Err(SigmaError::NonFinite { step: steps + 1 });
        }
        let (e1, c1) = functional(&cand);
        let inc = (e1 - e) + 0.5 * (c1 - c);
        if !inc.is_finite() {
            return Err(SigmaError::NonFinite { step: steps + 1 });
        }
        if inc > ENERGY_SLACK {
            rejections += 1;
            streak += 1;
            if streak > MAX_REJECTIONS {
                return Err(SigmaError::StepRejected {
                    step: steps + 1,
                    count: streak,
                });
            }
            dt *= 0.5;
            continue;
        }
        streak = 0;
        *state = cand;
        e = e1;
        c = c1;
        trace.push(e + 0.5 * c);
        steps += 1;
        (f, sup) = force(state);
    }
    Ok(FlowReport {
        steps,
        dt_initial: dt0,
        dt_final: dt,
        rejections,
        converged: sup < params.tol,
        final_residual: sup,
        energy_trace: trace,
    })
}

pub(crate) fn euler_step(chart: &dyn TargetChart, phi: &MapField, f: &[f64], dt: f64) -> MapField {
    let mut next = phi.clone();
    for (v, g) in next.values.iter_mut().zip(f) {
        *v += dt * g;
    }
    next.wrap(chart);
    next
}

/// Explicit Euler heat flow d phi / dt = tau(phi) with energy-monitored step halving.
/// Stops once sup |tau|_g < tol; non-convergence within `max_steps` is reported, not raised.
pub fn heat_flow(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    phi0: &MapField,
    params: &FlowParams,
) -> Result<(MapField, FlowReport)> {
    check_map(dom, chart, phi0)?;
    let mut phi = phi0.clone();
    phi.wrap(chart);
    let dt0 = params.dt.unwrap_or_else(|| dom.default_dt());
    let report = euler_flow(
        &mut phi,
        dt0,
        params,
        |s| {
            let t = tension(dom, chart, s);
            let sup = sup_norm(chart, s, &t);
            (t, sup)
        },
        |s, f, dt| euler_step(chart, s, f, dt),
        |s| (energy(dom, chart, s), 0.0),
        |s| s.values.iter().all(|v| v.is_finite()),
    )?;
    Ok((phi, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{LambdaSpec, TrigMode};
    use crate::target::{FlatTorus, RoundSphere};
    use std::f64::consts::PI;

    fn bumpy(n: usize) -> ConformalDomain {
        ConformalDomain::new(
            n,
            Complex64::new(0.15, 1.1),
            LambdaSpec::Trig {
                c0: 1.0,
                modes: vec![TrigMode {
                    ka: 1,
                    kb: 1,
                    cos: 0.3,
                    sin: 0.1,
                }],
            },
        )
        .unwrap()
    }

    fn wavy(dom: &ConformalDomain) -> MapField {
        MapField::from_fn(dom, 2, |a, b| {
            vec![
                a + 0.1 * (2.0 * PI * b).sin(),
                b + 0.05 * (2.0 * PI * (a + b)).cos(),
            ]
        })
    }

    #[test]
    fn affine_map_energy_is_exact() {
        // z -> z on C/(Z + iZ) into the same torus: E = area = 1
        let dom = ConformalDomain::flat(16, Complex64::new(0.0, 1.0)).unwrap();
        let chart = FlatTorus::from_modulus(0.0, 1.0).unwrap();
        let phi = MapField::from_fn(&dom, 2, |a, b| vec![a, b]);
        assert!((energy(&dom, &chart, &phi) - 1.0).abs() < 1e-13);
        let t = tension(&dom, &chart, &phi);
        assert!(t.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn tension_is_minus_energy_gradient_for_flat_targets() {
        let dom = bumpy(16);
        let chart = FlatTorus::from_modulus(0.0, 1.0).unwrap();
        let phi = wavy(&dom);
        let v: Vec<f64> = (0..phi.values.len())
            .map(|k| ((k * 7919) % 13) as f64 / 13.0 - 0.5)
            .collect();
        let eps = 1e-6;
        let shifted = |s: f64| {
            let mut m = phi.clone();
            for (x, dv) in m.values.iter_mut().zip(&v) {
                *x += s * dv;
            }
            energy(&dom, &chart, &m)
        };
        let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
        let t = tension(&dom, &chart, &phi);
        let pair = l2_pairing(&dom, &chart, &phi, &t, &v);
        assert!(
            (fd + pair).abs() < 1e-7 * pair.abs().max(1.0),
            "{fd} {pair}"
        );
    }

    #[test]
    fn el_residual_is_a_quarter_of_scaled_tension() {
        let dom = bumpy(16);
        let chart = RoundSphere::new(1.0).unwrap();
        let phi = MapField::from_fn(&dom, 2, |a, b| {
            vec![0.3 * (2.0 * PI * a).cos(), 0.2 * (2.0 * PI * b).sin()]
        });
        let t = tension(&dom, &chart, &phi);
        let r = el_residual(&dom, &chart, &phi);
        let expect = (0..dom.len())
            .map(|p| 0.25 * dom.lambda_sq()[p] * (t[2 * p].powi(2) + t[2 * p + 1].powi(2)).sqrt())
            .fold(0.0, f64::max);
        assert!((r - expect).abs() < 1e-12 * expect.max(1.0));
    }

    #[test]
    fn flow_lowers_energy_and_converges() {
        let dom = bumpy(16);
        let chart = FlatTorus::from_modulus(0.0, 1.0).unwrap();
        let (phi, rep) = heat_flow(
            &dom,
            &chart,
            &wavy(&dom),
            &FlowParams {
                tol: 1e-8,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(rep.converged);
        assert!(rep
            .energy_trace
            .windows(2)
            .all(|w| w[1] <= w[0] + ENERGY_SLACK));
        assert!(el_residual(&dom, &chart, &phi) < 1e-8);
    }

    #[test]
    fn unstable_dt_is_rejected_and_recovers() {
        let dom = ConformalDomain::flat(16, Complex64::new(0.0, 1.0)).unwrap();
        let chart = FlatTorus::from_modulus(0.0, 1.0).unwrap();
        let (_, rep) = heat_flow(
            &dom,
            &chart,
            &wavy(&dom),
            &FlowParams {
                dt: Some(0.5),
                max_steps: 50,
                tol: 1e-14,
            },
        )
        .unwrap();
        assert!(rep.rejections > 0 && rep.dt_final < 0.5);
    }
}
