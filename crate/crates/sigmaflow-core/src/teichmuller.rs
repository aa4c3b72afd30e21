//! Energy of harmonic maps between flat tori as a function of the target modulus, and the
//! Weil-Petersson pairing of holomorphic quadratic differentials on the domain.
//!
//! The identity class map C/(Z + tau Z) -> C/(Z + sigma Z) is represented by the affine map
//! phi = alpha z + beta zbar with alpha = (sigma - conj tau) / (2i Im tau) and
//! beta = (tau - sigma) / (2i Im tau), which is already discretely harmonic. Its energy into
//! the Euclidean target is (|sigma - conj tau|^2 + |sigma - tau|^2) / (4 Im tau). Scaling the
//! target to unit area divides this by Im sigma and gives cosh of the hyperbolic distance
//! between tau and sigma, which is minimal exactly at sigma = tau.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SigmaError};
use crate::grid::ConformalDomain;
use crate::harmonic::{
    energy, heat_flow, map_derivatives, sup_norm, tension, FlowParams, MapField,
};
use crate::quadratic::hopf_differential;
use crate::target::{FlatTorus, TargetChart};

pub fn affine_coefficients(tau: Complex64, sigma: Complex64) -> (Complex64, Complex64) {
    let den = Complex64::new(0.0, 2.0 * tau.im);
    ((sigma - tau.conj()) / den, (tau - sigma) / den)
}

/// Energy of the affine harmonic map into the Euclidean torus C/(Z + sigma Z).
pub fn affine_energy(tau: Complex64, sigma: Complex64) -> f64 {
    ((sigma - tau.conj()).norm_sqr() + (sigma - tau).norm_sqr()) / (4.0 * tau.im)
}

/// Same map into the unit-area rescaling of the target.
pub fn affine_energy_unit_area(tau: Complex64, sigma: Complex64) -> f64 {
    affine_energy(tau, sigma) / sigma.im
}

/// phi(a + tau b) = a + sigma b as a point of R^2.
pub fn affine_seed(dom: &ConformalDomain, sigma: Complex64) -> MapField {
    MapField::from_fn(dom, 2, |a, b| vec![a + sigma.re * b, sigma.im * b])
}

pub fn target_torus(sigma: Complex64, unit_area: bool) -> Result<FlatTorus> {
    if unit_area {
        FlatTorus::unit_area(sigma.re, sigma.im)
    } else {
        FlatTorus::from_modulus(sigma.re, sigma.im)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub sigma: [f64; 2],
    pub energy: f64,
    pub closed_form: f64,
    pub converged: bool,
    pub steps: usize,
    pub residual: f64,
}

/// Harmonic energy in the identity class, found by heat flow from the affine seed.
pub fn harmonic_energy(
    dom: &ConformalDomain,
    sigma: Complex64,
    params: &FlowParams,
    unit_area: bool,
) -> Result<ProfilePoint> {
    if !(sigma.im > 0.0) {
        return Err(SigmaError::InvalidModulus(sigma.im));
    }
    let chart = target_torus(sigma, unit_area)?;
    let (phi, rep) = heat_flow(dom, &chart, &affine_seed(dom, sigma), params)?;
    let closed = if unit_area {
        affine_energy_unit_area(dom.tau(), sigma)
    } else {
        affine_energy(dom.tau(), sigma)
    };
    Ok(ProfilePoint {
        sigma: [sigma.re, sigma.im],
        energy: energy(dom, &chart, &phi),
        closed_form: closed,
        converged: rep.converged,
        steps: rep.steps,
        residual: rep.final_residual,
    })
}

pub fn harmonic_energy_profile(
    dom: &ConformalDomain,
    sigmas: &[Complex64],
    params: &FlowParams,
    unit_area: bool,
) -> Result<Vec<ProfilePoint>> {
    sigmas
        .par_iter()
        .map(|s| harmonic_energy(dom, *s, params, unit_area))
        .collect()
}

/// Index of the smallest energy in a profile.
pub fn argmin(profile: &[ProfilePoint]) -> Option<usize> {
    profile
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.energy.total_cmp(&b.1.energy))
        .map(|(k, _)| k)
}

fn unit_energy(dom: &ConformalDomain, sigma: Complex64, params: &FlowParams) -> Result<f64> {
    Ok(harmonic_energy(dom, sigma, params, true)?.energy)
}

/// Central-difference gradient of the unit-area energy in (Re sigma, Im sigma).
pub fn energy_gradient_target(
    dom: &ConformalDomain,
    sigma: Complex64,
    h: f64,
    params: &FlowParams,
) -> Result<[f64; 2]> {
    let e = |ds: Complex64| unit_energy(dom, sigma + ds, params);
    Ok([
        (e(Complex64::new(h, 0.0))? - e(Complex64::new(-h, 0.0))?) / (2.0 * h),
        (e(Complex64::new(0.0, h))? - e(Complex64::new(0.0, -h))?) / (2.0 * h),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessianReport {
    pub matrix: [[f64; 2]; 2],
    pub asymmetry: f64,
    pub eigenvalues: [f64; 2],
    pub condition: f64,
}

fn fd_hessian(
    dom: &ConformalDomain,
    sigma: Complex64,
    h: f64,
    params: &FlowParams,
) -> Result<[[f64; 2]; 2]> {
    let e = |x: f64, y: f64| unit_energy(dom, sigma + Complex64::new(x, y), params);
    let e0 = e(0.0, 0.0)?;
    let h11 = (e(h, 0.0)? - 2.0 * e0 + e(-h, 0.0)?) / (h * h);
    let h22 = (e(0.0, h)? - 2.0 * e0 + e(0.0, -h)?) / (h * h);
    let h12 = (e(h, h)? - e(h, -h)? - e(-h, h)? + e(-h, -h)?) / (4.0 * h * h);
    let h21 = (e(h, h)? - e(-h, h)? - e(h, -h)? + e(-h, -h)?) / (4.0 * h * h);
    Ok([[h11, h12], [h21, h22]])
}

/// Hessian of the unit-area energy in (Re sigma, Im sigma), central differences with one
/// Richardson extrapolation step.
pub fn energy_hessian_target(
    dom: &ConformalDomain,
    sigma: Complex64,
    h: f64,
    params: &FlowParams,
) -> Result<HessianReport> {
    let coarse = fd_hessian(dom, sigma, h, params)?;
    let fine = fd_hessian(dom, sigma, 0.5 * h, params)?;
    let mut m = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            m[a][b] = (4.0 * fine[a][b] - coarse[a][b]) / 3.0;
        }
    }
    let asymmetry = (m[0][1] - m[1][0]).abs();
    let tr = m[0][0] + m[1][1];
    let off = 0.5 * (m[0][1] + m[1][0]);
    let disc = ((m[0][0] - m[1][1]).powi(2) / 4.0 + off * off).sqrt();
    let ev = [0.5 * tr - disc, 0.5 * tr + disc];
    Ok(HessianReport {
        matrix: m,
        asymmetry,
        eigenvalues: ev,
        condition: ev[1].abs() / ev[0].abs(),
    })
}

/// Holomorphic quadratic differential q dz^2 representing the target deformation delta sigma
/// at sigma = tau, normalised so that the pairing below reproduces the energy Hessian.
pub fn moduli_direction_qd(tau: Complex64, dsigma: Complex64) -> Complex64 {
    dsigma / (2.0 * tau.im.powi(3)).sqrt()
}

/// Weil-Petersson pairing 2 Re integral q1 conj(q2) lambda^{-2} dx dy.
pub fn wp_pairing(dom: &ConformalDomain, q1: &[Complex64], q2: &[Complex64]) -> f64 {
    let dens: Vec<f64> = q1
        .iter()
        .zip(q2)
        .zip(dom.lambda_sq())
        .map(|((a, b), l)| 2.0 * (a * b.conj()).re / l)
        .collect();
    dom.integrate_flat(&dens)
}

pub fn wp_pairing_constant(dom: &ConformalDomain, q1: Complex64, q2: Complex64) -> f64 {
    wp_pairing(dom, &vec![q1; dom.len()], &vec![q2; dom.len()])
}

/// Second variation of the energy in the domain along Beltrami directions Q1, Q2.
pub fn domain_second_variation(dom: &ConformalDomain, q1: &[Complex64], q2: &[Complex64]) -> f64 {
    wp_pairing(dom, q1, q2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainVariation {
    /// -2 Re integral T mu_zbar dx dy
    pub beltrami_form: f64,
    /// -2 Re integral T conj(Q) lambda^{-2} dx dy with Q = lambda^2 conj(mu_zbar)
    pub pairing_form: f64,
    pub tension_sup: f64,
    /// Set when the map is far from harmonic, so the forms need not agree with the
    /// derivative of the harmonic energy.
    pub warning: bool,
}

/// First variation of the energy under the domain deformation generated by the vector
/// field mu, computed from the Hopf differential in two equivalent ways.
pub fn domain_variation_derivative(
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
    phi: &MapField,
    mu: &[Complex64],
) -> Result<DomainVariation> {
    if mu.len() != dom.len() {
        return Err(SigmaError::DimensionMismatch {
            expected: dom.len(),
            got: mu.len(),
        });
    }
    let t = hopf_differential(dom, chart, phi);
    let mu_zb = dom.d_zbar(mu);
    let lam = dom.lambda_sq();
    let f1: Vec<f64> = t
        .iter()
        .zip(&mu_zb)
        .map(|(t, m)| -2.0 * (t * m).re)
        .collect();
    let f2: Vec<f64> = (0..dom.len())
        .map(|p| {
            let q = lam[p] * mu_zb[p].conj();
            -2.0 * (t[p] * q.conj()).re / lam[p]
        })
        .collect();
    let ts = sup_norm(chart, phi, &tension(dom, chart, phi));
    let (dx, _) = map_derivatives(dom, chart, phi);
    let scale = dx.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    Ok(DomainVariation {
        beltrami_form: dom.integrate_flat(&f1),
        pairing_form: dom.integrate_flat(&f2),
        tension_sup: ts,
        warning: ts > 1e-3 * scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> FlowParams {
        FlowParams {
            tol: 1e-9,
            ..Default::default()
        }
    }

    #[test]
    fn closed_form_values() {
        let i = Complex64::i();
        assert!((affine_energy(i, 2.0 * i) - 2.5).abs() < 1e-15);
        assert!((affine_energy(i, i) - 1.0).abs() < 1e-15);
        assert!((affine_energy_unit_area(i, 2.0 * i) - 1.25).abs() < 1e-15);
        let (a, b) = affine_coefficients(i, i);
        assert!((a - 1.0).norm() < 1e-15 && b.norm() < 1e-15);
    }

    #[test]
    fn unit_area_energy_is_cosh_of_distance() {
        let tau = Complex64::new(0.2, 0.9);
        let sigma = Complex64::new(-0.3, 1.7);
        let d = 1.0 + (sigma - tau).norm_sqr() / (2.0 * tau.im * sigma.im);
        assert!((affine_energy_unit_area(tau, sigma) - d).abs() < 1e-14);
    }

    #[test]
    fn discrete_energy_matches_closed_form() {
        let dom = ConformalDomain::flat(16, Complex64::new(0.25, 1.1)).unwrap();
        let s = Complex64::new(-0.4, 0.7);
        let p = harmonic_energy(&dom, s, &params(), false).unwrap();
        assert!(p.converged);
        assert!((p.energy - p.closed_form).abs() < 1e-12);
    }

    #[test]
    fn wp_of_unit_constant_on_square_torus() {
        let dom = ConformalDomain::flat(16, Complex64::i()).unwrap();
        let one = Complex64::new(1.0, 0.0);
        assert!((wp_pairing_constant(&dom, one, one) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn two_variation_forms_agree() {
        let dom = ConformalDomain::flat(16, Complex64::new(0.1, 1.0)).unwrap();
        let chart = target_torus(Complex64::new(0.0, 1.5), false).unwrap();
        let phi = affine_seed(&dom, Complex64::new(0.0, 1.5));
        let mu: Vec<Complex64> = (0..dom.len())
            .map(|p| {
                let (a, b) = dom.node_ab(p);
                let th = 2.0 * std::f64::consts::PI * (a + b);
                Complex64::new(th.sin(), 0.3 * th.cos())
            })
            .collect();
        let v = domain_variation_derivative(&dom, &chart, &phi, &mu).unwrap();
        assert!(!v.warning);
        assert!((v.beltrami_form - v.pairing_form).abs() < 1e-10);
    }
}
