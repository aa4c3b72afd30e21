//! Superfunctions on C^{1|1}: Grassmann elements with polynomial coefficients in z, where
//! generator 0 is the odd coordinate theta and generators 1.. are odd parameters.

use num_traits::{One, Zero};

use crate::error::{Result, SuperError};
use crate::grassmann::Grassmann;
use crate::poly::Poly;
use crate::scalar::{fmt_cq, Cq};

pub type SuperFn = Grassmann<Poly>;

pub const THETA: usize = 0;

/// Number of generators for `params` odd parameters.
pub fn generators(params: usize) -> usize {
    params + 1
}

pub fn theta(params: usize) -> SuperFn {
    SuperFn::generator(generators(params), THETA).expect("theta exists")
}

/// Odd parameter e_k, k = 1..=params.
pub fn param(params: usize, k: usize) -> Result<SuperFn> {
    if k == 0 || k > params {
        return Err(SuperError::GeneratorRange {
            index: k,
            n: params,
        });
    }
    SuperFn::generator(generators(params), k)
}

pub fn even(params: usize, p: Poly) -> SuperFn {
    SuperFn::scalar(generators(params), p)
}

pub fn z(params: usize) -> SuperFn {
    even(params, Poly::z())
}

pub fn constant(params: usize, c: Cq) -> SuperFn {
    even(params, Poly::constant(c))
}

pub fn d_z(f: &SuperFn) -> SuperFn {
    f.map_coeffs(Poly::deriv)
}

pub fn d_theta(f: &SuperFn) -> SuperFn {
    f.d_generator(THETA).expect("theta exists")
}

/// D = d/dtheta + theta d/dz.
pub fn d_op(f: &SuperFn) -> SuperFn {
    let th = SuperFn::generator(f.generators().max(1), THETA).expect("theta exists");
    &d_theta(f) + &(&th * &d_z(f))
}

pub fn display(f: &SuperFn) -> String {
    f.display_with(
        |i| {
            if i == THETA {
                "th".into()
            } else {
                format!("e{i}")
            }
        },
        |p| {
            if p.degree() == Some(0) {
                fmt_cq(&p.coeffs()[0])
            } else {
                format!("({p})")
            }
        },
    )
}

/// (z, theta) -> (z', theta') with z' even and theta' odd.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperCoordinateChange {
    pub z_new: SuperFn,
    pub theta_new: SuperFn,
}

impl SuperCoordinateChange {
    pub fn new(z_new: SuperFn, theta_new: SuperFn) -> Result<Self> {
        if !z_new.is_even() {
            return Err(SuperError::Parity {
                expected: "even",
                got: display(&z_new),
            });
        }
        if !theta_new.is_odd() {
            return Err(SuperError::Parity {
                expected: "odd",
                got: display(&theta_new),
            });
        }
        Ok(Self { z_new, theta_new })
    }

    /// z' = f(z), theta' = theta g(z).
    pub fn even(params: usize, f: Poly, g: Poly) -> Self {
        Self {
            z_new: even(params, f),
            theta_new: &theta(params) * &even(params, g),
        }
    }

    /// D = (D theta') D' + (D z' - theta' D theta') d/dz'; the change is superconformal when the
    /// second coefficient vanishes. Returns it.
    pub fn defect(&self) -> SuperFn {
        let dz = d_op(&self.z_new);
        let dth = d_op(&self.theta_new);
        &dz - &(&self.theta_new * &dth)
    }

    /// The factor D theta' with D = (D theta') D' for superconformal changes.
    pub fn scale(&self) -> SuperFn {
        d_op(&self.theta_new)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuperconformalReport {
    pub superconformal: bool,
    pub defect: SuperFn,
}

pub fn superconformal_check(c: &SuperCoordinateChange) -> SuperconformalReport {
    let defect = c.defect();
    SuperconformalReport {
        superconformal: defect.is_zero(),
        defect,
    }
}

/// f' - g^2 for the even change z' = f, theta' = theta g.
pub fn even_defect(f: &Poly, g: &Poly) -> Poly {
    &f.deriv() - &(g * g)
}

/// Pull back F(z', theta') along z' = f(z), theta' = theta g(z).
pub fn pullback_even(func: &SuperFn, f: &Poly, g: &Poly) -> SuperFn {
    let n = func.generators();
    let mut out = SuperFn::zero(n);
    for (mask, c) in func.terms() {
        let mut coeff = c.compose(f);
        if mask & (1 << THETA) != 0 {
            coeff = &coeff * g;
        }
        out = &out + &SuperFn::monomial(n, mask, coeff).expect("mask in range");
    }
    out
}

/// Polynomial c as a superfunction coefficient helper.
pub fn poly_const(c: Cq) -> Poly {
    if c.is_zero() {
        Poly::zero()
    } else {
        Poly::constant(c)
    }
}

pub fn one(params: usize) -> SuperFn {
    SuperFn::scalar(generators(params), Poly::one())
}
