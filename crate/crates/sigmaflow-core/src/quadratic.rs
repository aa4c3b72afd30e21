//! Hopf differential, the H and L energy densities, the Bochner identities they satisfy for
//! harmonic maps, degree from the Jacobian, and the Riemann-Hurwitz bound.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SigmaError};
use crate::grid::ConformalDomain;
use crate::harmonic::{check_map, map_derivatives, MapField};
use crate::target::TargetChart;

/// Densities below this are excluded from log-based identities.
pub const DENSITY_FLOOR: f64 = 1e-6;
/// Distance from an integer above which a computed degree is flagged.
pub const DEGREE_SLACK: f64 = 0.05;

fn complex_derivs(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    phi: &MapField,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let (dx, dy) = map_derivatives(dom, chart, phi);
    let z = dx
        .iter()
        .zip(&dy)
        .map(|(x, y)| 0.5 * Complex64::new(*x, -*y))
        .collect();
    let zb = dx
        .iter()
        .zip(&dy)
        .map(|(x, y)| 0.5 * Complex64::new(*x, *y))
        .collect();
    (z, zb)
}

/// T = g_ij(phi) phi_z^i phi_z^j, the coefficient of dz^2 in phi^* g.
pub fn hopf_differential(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    phi: &MapField,
) -> Vec<Complex64> {
    let d = phi.dim;
    let (z, _) = complex_derivs(dom, chart, phi);
    let mut g = vec![0.0; d * d];
    (0..dom.len())
        .map(|p| {
            chart.metric_into(phi.node(p), &mut g);
            let mut t = Complex64::new(0.0, 0.0);
            for i in 0..d {
                for j in 0..d {
                    t += g[i * d + j] * z[p * d + i] * z[p * d + j];
                }
            }
            t
        })
        .collect()
}

/// sup |d_zbar T|.
pub fn holomorphy_residual(dom: &ConformalDomain, t: &[Complex64]) -> f64 {
    dom.d_zbar(t).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HlDensities {
    pub h: Vec<f64>,
    pub l: Vec<f64>,
}

fn conformal_target(chart: &dyn TargetChart) -> Result<()> {
    if chart.dim() != 2 || chart.conformal_factor(&[0.5, 0.5]).is_none() {
        return Err(SigmaError::InvalidTarget(format!(
            "{} is not a conformal surface chart",
            chart.name()
        )));
    }
    Ok(())
}

/// H = rho^2 |w_z|^2 / lambda^2 and L = rho^2 |w_zbar|^2 / lambda^2 with w = phi^1 + i phi^2.
pub fn hl_densities(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    phi: &MapField,
) -> Result<HlDensities> {
    check_map(dom, chart, phi)?;
    conformal_target(chart)?;
    let (z, zb) = complex_derivs(dom, chart, phi);
    let i = Complex64::i();
    let mut h = Vec::with_capacity(dom.len());
    let mut l = Vec::with_capacity(dom.len());
    for p in 0..dom.len() {
        let rho = chart.conformal_factor(phi.node(p)).expect("conformal") / dom.lambda_sq()[p];
        h.push(rho * (z[2 * p] + i * z[2 * p + 1]).norm_sqr());
        l.push(rho * (zb[2 * p] + i * zb[2 * p + 1]).norm_sqr());
    }
    Ok(HlDensities { h, l })
}

/// Coefficients of phi^* g in the basis dz^2, dz dzbar, dzbar^2, assembled from the real
/// pullback tensor, and the largest deviation from (T, lambda^2 (H + L), conj T).
#[derive(Clone, Debug)]
pub struct PullbackDecomposition {
    pub dz2: Vec<Complex64>,
    pub dzdzbar: Vec<f64>,
    pub dzbar2: Vec<Complex64>,
    pub residual: f64,
}

pub fn pullback_decomposition(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    phi: &MapField,
) -> Result<PullbackDecomposition> {
    let hl = hl_densities(dom, chart, phi)?;
    let t = hopf_differential(dom, chart, phi);
    let (dx, dy) = map_derivatives(dom, chart, phi);
    let d = phi.dim;
    let mut g = vec![0.0; d * d];
    let mut out = PullbackDecomposition {
        dz2: vec![],
        dzdzbar: vec![],
        dzbar2: vec![],
        residual: 0.0,
    };
    for p in 0..dom.len() {
        chart.metric_into(phi.node(p), &mut g);
        let (mut gxx, mut gxy, mut gyy) = (0.0, 0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                let gij = g[i * d + j];
                gxx += gij * dx[p * d + i] * dx[p * d + j];
                gxy += gij * dx[p * d + i] * dy[p * d + j];
                gyy += gij * dy[p * d + i] * dy[p * d + j];
            }
        }
        // with dx = (dz + dzbar) / 2 and dy = (dz - dzbar) / 2i
        let a = Complex64::new(0.25 * (gxx - gyy), -0.5 * gxy);
        let m = 0.5 * (gxx + gyy);
        let mid = dom.lambda_sq()[p] * (hl.h[p] + hl.l[p]);
        let r = (a - t[p])
            .norm()
            .max((m - mid).abs())
            .max((a.conj() - t[p].conj()).norm());
        out.residual = out.residual.max(r);
        out.dz2.push(a);
        out.dzdzbar.push(m);
        out.dzbar2.push(a.conj());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BochnerReport {
    /// sup |Delta log H - 2 K1 + 2 K2 (H - L)| over unmasked nodes; None when untestable.
    pub r_h: Option<f64>,
    /// sup |Delta log L - 2 K1 - 2 K2 (H - L)| over unmasked nodes; None when untestable.
    pub r_l: Option<f64>,
    pub masked_h: f64,
    pub masked_l: f64,
}

/// Bochner identities for a harmonic map between surfaces, with the Laplacian taken as
/// div grad. `k1` is the domain curvature; the target curvature is read from the chart.
/// Nodes whose wide-stencil neighbourhood meets a density below the floor, or that are
/// excluded by `mask`, are skipped.
pub fn bochner_residuals(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    phi: &MapField,
    k1: &[f64],
    mask: Option<&[bool]>,
) -> Result<BochnerReport> {
    let hl = hl_densities(dom, chart, phi)?;
    let k2: Vec<f64> = (0..dom.len())
        .map(|p| {
            chart
                .gauss_curvature(phi.node(p))
                .ok_or_else(|| SigmaError::InvalidTarget("no target curvature".into()))
        })
        .collect::<Result<_>>()?;
    let excluded = |p: usize| mask.map(|m| m[p]).unwrap_or(false);
    let one = |dens: &[f64], sign: f64| -> (Option<f64>, f64) {
        let n = dom.n();
        let low: Vec<bool> = dens.iter().map(|v| !(*v >= DENSITY_FLOOR)).collect();
        let logd: Vec<f64> = dens
            .iter()
            .map(|v| if *v >= DENSITY_FLOOR { v.ln() } else { 0.0 })
            .collect();
        let lap = dom.laplace_beltrami(&logd);
        let mut r: Option<f64> = None;
        let mut masked = 0usize;
        for p in 0..dom.len() {
            let (i, j) = (p % n, p / n);
            let mut bad = excluded(p);
            'nb: for dj in 0..5 {
                for di in 0..5 {
                    let q = dom.idx(i + n + di - 2, j + n + dj - 2);
                    if low[q] {
                        bad = true;
                        break 'nb;
                    }
                }
            }
            if bad {
                masked += 1;
                continue;
            }
            let v = (lap[p] - 2.0 * k1[p] + sign * 2.0 * k2[p] * (hl.h[p] - hl.l[p])).abs();
            r = Some(r.map_or(v, |m: f64| m.max(v)));
        }
        (r, masked as f64 / dom.len() as f64)
    };
    let (r_h, masked_h) = one(&hl.h, 1.0);
    let (r_l, masked_l) = one(&hl.l, -1.0);
    Ok(BochnerReport {
        r_h,
        r_l,
        masked_h,
        masked_l,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    /// Integral of (H - L) lambda^2.
    pub jacobian_integral: f64,
    /// Integral of (H + L) lambda^2.
    pub energy: f64,
    pub target_area: f64,
    pub ratio: f64,
    pub degree: i64,
    pub flagged: bool,
}

pub fn degree(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    phi: &MapField,
) -> Result<DegreeReport> {
    let hl = hl_densities(dom, chart, phi)?;
    let area = chart
        .area()
        .ok_or_else(|| SigmaError::InvalidTarget(format!("{} has no finite area", chart.name())))?;
    let diff: Vec<f64> = hl.h.iter().zip(&hl.l).map(|(h, l)| h - l).collect();
    let sum: Vec<f64> = hl.h.iter().zip(&hl.l).map(|(h, l)| h + l).collect();
    let j = dom.integrate(&diff);
    let ratio = j / area;
    let deg = ratio.round();
    Ok(DegreeReport {
        jacobian_integral: j,
        energy: dom.integrate(&sum),
        target_area: area,
        ratio,
        degree: deg as i64,
        flagged: (ratio - deg).abs() > DEGREE_SLACK,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiemannHurwitzReport {
    pub chi_domain: i64,
    pub chi_target: i64,
    /// |m| chi(target) - v_H
    pub formula_rhs: i64,
    pub formula_holds: bool,
    /// chi(domain) <= |m| chi(target), needed for a holomorphic or antiholomorphic map.
    pub bound_holds: bool,
}

/// Riemann-Hurwitz bookkeeping for a map of degree m between closed surfaces of genus p
/// and q whose (anti)holomorphic branching order is v_h.
pub fn riemann_hurwitz_check(p: u32, q: u32, m: i64, v_h: i64) -> RiemannHurwitzReport {
    let chi_domain = 2 - 2 * p as i64;
    let chi_target = 2 - 2 * q as i64;
    let rhs = m.abs() * chi_target - v_h;
    RiemannHurwitzReport {
        chi_domain,
        chi_target,
        formula_rhs: rhs,
        formula_holds: chi_domain == rhs,
        bound_holds: chi_domain <= m.abs() * chi_target,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::{FlatTorus, HyperbolicPlane, RoundSphere};
    use std::f64::consts::PI;

    fn square(n: usize) -> ConformalDomain {
        ConformalDomain::flat(n, Complex64::new(0.0, 1.0)).unwrap()
    }

    #[test]
    fn identity_has_zero_hopf_differential() {
        let dom = square(16);
        let chart = FlatTorus::from_modulus(0.0, 1.0).unwrap();
        let phi = MapField::from_fn(&dom, 2, |a, b| vec![a, b]);
        let t = hopf_differential(&dom, &chart, &phi);
        assert!(t.iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn degree_of_doubling_map() {
        let dom = square(16);
        let chart = FlatTorus::from_modulus(0.0, 1.0).unwrap();
        let phi = MapField::from_fn(&dom, 2, |a, b| vec![2.0 * a, 2.0 * b]);
        let d = degree(&dom, &chart, &phi).unwrap();
        assert_eq!(d.degree, 4);
        assert!(!d.flagged);
        assert!((d.ratio - 4.0).abs() < 1e-10);
        // orientation reversing
        let phi = MapField::from_fn(&dom, 2, |a, b| vec![a, -b]);
        assert_eq!(degree(&dom, &chart, &phi).unwrap().degree, -1);
    }

    #[test]
    fn riemann_hurwitz_torus_onto_genus_two_fails() {
        let r = riemann_hurwitz_check(1, 2, 1, 0);
        assert!(!r.bound_holds);
        assert!(!r.formula_holds);
        let r = riemann_hurwitz_check(2, 1, 1, 2);
        assert!(r.bound_holds && r.formula_holds);
        let r = riemann_hurwitz_check(1, 1, 3, 0);
        assert!(r.formula_holds && r.bound_holds);
    }

    #[test]
    fn pullback_splits_into_hopf_and_energy_parts() {
        let dom = square(16);
        let chart = RoundSphere::new(1.0).unwrap();
        let phi = MapField::from_fn(&dom, 2, |a, b| {
            vec![0.5 * (2.0 * PI * a).sin(), 0.4 * (2.0 * PI * (a + b)).cos()]
        });
        let pd = pullback_decomposition(&dom, &chart, &phi).unwrap();
        assert!(pd.residual < 1e-10);
    }

    #[test]
    fn translation_into_half_plane_satisfies_bochner_with_k2() {
        // z -> z + 2i on an interior patch: H = 1 / (y + 2)^2, L = 0, K2 = -1.
        for n in [32, 64] {
            let dom = square(n);
            let chart = HyperbolicPlane::new();
            let phi = MapField::from_fn(&dom, 2, |a, b| vec![a, b + 2.0]);
            let mask: Vec<bool> = (0..dom.len())
                .map(|p| {
                    let (i, j) = (p % n, p / n);
                    i < 3 || i >= n - 3 || j < 3 || j >= n - 3
                })
                .collect();
            let r =
                bochner_residuals(&dom, &chart, &phi, &vec![0.0; dom.len()], Some(&mask)).unwrap();
            assert!(r.r_l.is_none());
            assert!(r.r_h.unwrap() < 5e-3, "{r:?}");
        }
    }
}
