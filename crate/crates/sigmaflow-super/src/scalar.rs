//! Exact complex rationals and the coefficient ring bound.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;
pub type Cq = Complex<Q>;

/// Commutative coefficient ring of a Grassmann algebra.
pub trait Coeff:
    Clone
    + PartialEq
    + Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
}

impl<T> Coeff for T where
    T: Clone
        + PartialEq
        + Debug
        + Zero
        + One
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Neg<Output = T>
{
}

pub fn rat(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Cq {
    Cq::new(rat(v, 1), Q::zero())
}

pub fn real(q: Q) -> Cq {
    Cq::new(q, Q::zero())
}

pub fn imag_unit() -> Cq {
    Cq::new(Q::zero(), Q::one())
}

pub fn fmt_q(q: &Q) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn fmt_cq(c: &Cq) -> String {
    match (c.re.is_zero(), c.im.is_zero()) {
        (_, true) => fmt_q(&c.re),
        (true, false) => format!("{}i", fmt_q(&c.im)),
        (false, false) => {
            let sign = if c.im.is_negative() { "-" } else { "+" };
            format!("({}{}{}i)", fmt_q(&c.re), sign, fmt_q(&c.im.abs()))
        }
    }
}
