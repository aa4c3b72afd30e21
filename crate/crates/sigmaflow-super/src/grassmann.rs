//! Grassmann algebra on n generators g_0, ..., g_{n-1} with coefficients in a commutative ring.
//!
//! A monomial is stored as a bitmask and stands for the ascending product g_{i1} g_{i2} ...
//! with i1 < i2 < .... Products reorder with Koszul signs, so g_i g_j = -g_j g_i and g_i^2 = 0
//! hold structurally. Elements of algebras with different n combine in the larger one.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Result, SuperError};
use crate::scalar::Coeff;

/// Generator count limit imposed by the u32 monomial masks.
pub const MAX_GENERATORS: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct Grassmann<C: Coeff> {
    n: usize,
    terms: BTreeMap<u32, C>,
}

/// Sign of g_a g_b relative to the ascending monomial a | b; zero if they share a generator.
pub fn koszul_sign(a: u32, b: u32) -> i32 {
    if a & b != 0 {
        return 0;
    }
    // count pairs (i in a, j in b) with i > j
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        swaps += (a >> j >> 1).count_ones();
    }
    if swaps.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

impl<C: Coeff> Grassmann<C> {
    pub fn zero(n: usize) -> Self {
        assert!(n <= MAX_GENERATORS, "at most {MAX_GENERATORS} generators");
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(n: usize, c: C) -> Self {
        let mut s = Self::zero(n);
        s.push(0, c);
        s
    }

    pub fn one(n: usize) -> Self {
        Self::scalar(n, C::one())
    }

    pub fn generator(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(SuperError::GeneratorRange { index, n });
        }
        let mut s = Self::zero(n);
        s.push(1 << index, C::one());
        Ok(s)
    }

    /// The term c * (ascending product of the generators in `mask`).
    pub fn monomial(n: usize, mask: u32, c: C) -> Result<Self> {
        if n < MAX_GENERATORS && mask >> n != 0 {
            return Err(SuperError::GeneratorRange {
                index: 31 - mask.leading_zeros() as usize,
                n,
            });
        }
        let mut s = Self::zero(n);
        s.push(mask, c);
        Ok(s)
    }

    fn push(&mut self, mask: u32, c: C) {
        if c.is_zero() {
            return;
        }
        let v = match self.terms.remove(&mask) {
            Some(old) => old + c,
            None => c,
        };
        if !v.is_zero() {
            self.terms.insert(mask, v);
        }
    }

    pub fn generators(&self) -> usize {
        self.n
    }

    /// Same element viewed in the algebra on `n` generators.
    pub fn embed(&self, n: usize) -> Result<Self> {
        if let Some(m) = self
            .terms
            .keys()
            .copied()
            .max_by_key(|m| 32 - m.leading_zeros())
        {
            let top = 32 - m.leading_zeros() as usize;
            if top > n {
                return Err(SuperError::GeneratorRange { index: top - 1, n });
            }
        }
        Ok(Self {
            n,
            terms: self.terms.clone(),
        })
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &C)> {
        self.terms.iter().map(|(m, c)| (*m, c))
    }

    pub fn coeff(&self, mask: u32) -> C {
        self.terms.get(&mask).cloned().unwrap_or_else(C::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_even(&self) -> bool {
        self.terms.keys().all(|m| m.count_ones() % 2 == 0)
    }

    pub fn is_odd(&self) -> bool {
        self.terms.keys().all(|m| m.count_ones() % 2 == 1)
    }

    /// Some(0) for even, Some(1) for odd, None for mixed elements; zero counts as even.
    pub fn parity(&self) -> Option<u8> {
        if self.is_even() {
            Some(0)
        } else if self.is_odd() {
            Some(1)
        } else {
            None
        }
    }

    /// Projection onto the even (0) or odd (1) part.
    pub fn part(&self, parity: u8) -> Self {
        let mut s = Self::zero(self.n);
        for (m, c) in &self.terms {
            if m.count_ones() % 2 == parity as u32 {
                s.push(*m, c.clone());
            }
        }
        s
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut s = Self::zero(self.n);
        for (m, v) in &self.terms {
            s.push(*m, v.clone() * c.clone());
        }
        s
    }

    pub fn map_coeffs(&self, f: impl Fn(&C) -> C) -> Self {
        let mut s = Self::zero(self.n);
        for (m, v) in &self.terms {
            s.push(*m, f(v));
        }
        s
    }

    /// Left derivative d/dg_i: moves g_i to the front, then removes it.
    pub fn d_generator(&self, i: usize) -> Result<Self> {
        if i >= self.n {
            return Err(SuperError::GeneratorRange {
                index: i,
                n: self.n,
            });
        }
        let bit = 1u32 << i;
        let mut s = Self::zero(self.n);
        for (m, v) in &self.terms {
            if m & bit != 0 {
                let before = (m & (bit - 1)).count_ones();
                let c = if before.is_multiple_of(2) {
                    v.clone()
                } else {
                    -v.clone()
                };
                s.push(m & !bit, c);
            }
        }
        Ok(s)
    }

    pub fn add_ref(&self, o: &Self) -> Self {
        let mut s = Self {
            n: self.n.max(o.n),
            terms: self.terms.clone(),
        };
        for (m, v) in &o.terms {
            s.push(*m, v.clone());
        }
        s
    }

    pub fn mul_ref(&self, o: &Self) -> Self {
        let mut s = Self::zero(self.n.max(o.n));
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                match koszul_sign(*a, *b) {
                    0 => {}
                    1 => s.push(a | b, x.clone() * y.clone()),
                    _ => s.push(a | b, -(x.clone() * y.clone())),
                }
            }
        }
        s
    }

    pub fn neg_ref(&self) -> Self {
        self.map_coeffs(|c| -c.clone())
    }

    /// Render with generator names chosen by the caller.
    pub fn display_with(
        &self,
        name: impl Fn(usize) -> String,
        coeff: impl Fn(&C) -> String,
    ) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let gens: Vec<String> = (0..32).filter(|i| m >> i & 1 == 1).map(&name).collect();
                let cs = coeff(c);
                if gens.is_empty() {
                    cs
                } else if c.is_one() {
                    gens.join(" ")
                } else {
                    format!("{cs} {}", gens.join(" "))
                }
            })
            .collect();
        parts.join(" + ")
    }
}

impl<C: Coeff> Add for &Grassmann<C> {
    type Output = Grassmann<C>;
    fn add(self, o: &Grassmann<C>) -> Grassmann<C> {
        self.add_ref(o)
    }
}

impl<C: Coeff> Sub for &Grassmann<C> {
    type Output = Grassmann<C>;
    fn sub(self, o: &Grassmann<C>) -> Grassmann<C> {
        self.add_ref(&o.neg_ref())
    }
}

impl<C: Coeff> Mul for &Grassmann<C> {
    type Output = Grassmann<C>;
    fn mul(self, o: &Grassmann<C>) -> Grassmann<C> {
        self.mul_ref(o)
    }
}

impl<C: Coeff> Neg for &Grassmann<C> {
    type Output = Grassmann<C>;
    fn neg(self) -> Grassmann<C> {
        self.neg_ref()
    }
}

impl<C: Coeff> Add for Grassmann<C> {
    type Output = Grassmann<C>;
    fn add(self, o: Grassmann<C>) -> Grassmann<C> {
        self.add_ref(&o)
    }
}

impl<C: Coeff> Sub for Grassmann<C> {
    type Output = Grassmann<C>;
    fn sub(self, o: Grassmann<C>) -> Grassmann<C> {
        &self - &o
    }
}

impl<C: Coeff> Mul for Grassmann<C> {
    type Output = Grassmann<C>;
    fn mul(self, o: Grassmann<C>) -> Grassmann<C> {
        self.mul_ref(&o)
    }
}

impl<C: Coeff> Neg for Grassmann<C> {
    type Output = Grassmann<C>;
    fn neg(self) -> Grassmann<C> {
        self.neg_ref()
    }
}

impl<C: Coeff + fmt::Debug> fmt::Display for Grassmann<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}",
            self.display_with(|i| format!("g{i}"), |c| format!("{c:?}"))
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, Cq};

    type G = Grassmann<Cq>;

    fn g(n: usize, i: usize) -> G {
        G::generator(n, i).unwrap()
    }

    #[test]
    fn generators_anticommute_and_square_to_zero() {
        let (a, b) = (g(2, 0), g(2, 1));
        assert!((&a * &a).is_zero());
        assert_eq!(&a * &b, G::monomial(2, 0b11, int(1)).unwrap());
        assert_eq!(&b * &a, G::monomial(2, 0b11, int(-1)).unwrap());
    }

    #[test]
    fn product_of_one_plus_generators() {
        let one = G::one(2);
        let p = &(&one + &g(2, 0)) * &(&one + &g(2, 1));
        let expect = &(&(&one + &g(2, 0)) + &g(2, 1)) + &(&g(2, 0) * &g(2, 1));
        assert_eq!(p, expect);
    }

    #[test]
    fn left_derivative_signs() {
        let m = &g(3, 0) * &g(3, 2);
        assert_eq!(m.d_generator(0).unwrap(), g(3, 2));
        assert_eq!(m.d_generator(2).unwrap(), -&g(3, 0));
        assert!(m.d_generator(1).unwrap().is_zero());
        assert!(m.d_generator(3).is_err());
    }

    #[test]
    fn mixed_sizes_embed() {
        let p = &g(2, 1) * &g(4, 3);
        assert_eq!(p.generators(), 4);
        assert!(g(4, 3).embed(2).is_err());
    }
}
