//! Polynomials in z with exact complex rational coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::scalar::{fmt_cq, int, Cq};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    /// Coefficients by ascending power, no trailing zeros.
    coeffs: Vec<Cq>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Cq>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn constant(c: Cq) -> Self {
        Self::new(vec![c])
    }

    pub fn z() -> Self {
        Self::new(vec![Cq::zero(), Cq::one()])
    }

    pub fn monomial(c: Cq, k: usize) -> Self {
        let mut v = vec![Cq::zero(); k + 1];
        v[k] = c;
        Self::new(v)
    }

    pub fn coeffs(&self) -> &[Cq] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn deriv(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c.clone() * int(k as i64))
                .collect(),
        )
    }

    /// self(other(z)) by Horner.
    pub fn compose(&self, other: &Poly) -> Self {
        let mut acc = Poly::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * other) + &Poly::constant(c.clone());
        }
        acc
    }

    pub fn eval(&self, z: &Cq) -> Cq {
        let mut acc = Cq::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * z.clone() + c.clone();
        }
        acc
    }
}

impl Zero for Poly {
    fn zero() -> Self {
        Self { coeffs: vec![] }
    }
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl One for Poly {
    fn one() -> Self {
        Self::constant(Cq::one())
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new(
            (0..n)
                .map(|k| {
                    let a = self.coeffs.get(k).cloned().unwrap_or_else(Cq::zero);
                    let b = o.coeffs.get(k).cloned().unwrap_or_else(Cq::zero);
                    a + b
                })
                .collect(),
        )
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        self + &(-o)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut v = vec![Cq::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                v[i + j] = v[i + j].clone() + a.clone() * b.clone();
            }
        }
        Poly::new(v)
    }
}

macro_rules! by_value {
    ($tr:ident, $f:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $f(self, o: Poly) -> Poly {
                (&self).$f(&o)
            }
        }
    };
}
by_value!(Add, add);
by_value!(Sub, sub);
by_value!(Mul, mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let cs = fmt_cq(c);
            match k {
                0 => write!(f, "{cs}")?,
                _ => {
                    if !c.is_one() {
                        write!(f, "{cs} ")?;
                    }
                    if k == 1 {
                        write!(f, "z")?
                    } else {
                        write!(f, "z^{k}")?
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, real};

    #[test]
    fn derivative_and_composition() {
        // p = z^3/3, p' = z^2, p(z + 1) at z = 1 is 8/3
        let p = Poly::monomial(real(rat(1, 3)), 3);
        assert_eq!(p.deriv(), Poly::monomial(int(1), 2));
        let shifted = p.compose(&(&Poly::z() + &Poly::one()));
        assert_eq!(shifted.eval(&int(1)), real(rat(8, 3)));
        assert_eq!(format!("{}", &Poly::z() * &Poly::z()), "z^2");
    }
}
