//! Berezin integration: the coefficient of g_{ik} ... g_{i1} for the listed odd variables
//! g_{i1}, ..., g_{ik}, i.e. the top monomial written in descending order.

use crate::error::Result;
use crate::grassmann::Grassmann;
use crate::scalar::Coeff;

/// Integrate out the odd variables `vars` (listed as eta^1, ..., eta^k); the result is the
/// coefficient of eta^k ... eta^1 as an element in the remaining generators.
pub fn berezin<C: Coeff>(f: &Grassmann<C>, vars: &[usize]) -> Result<Grassmann<C>> {
    let mut out = f.clone();
    for &v in vars.iter().rev() {
        out = out.d_generator(v)?;
    }
    Ok(out)
}

/// Integral over all generators of the algebra.
pub fn berezin_all<C: Coeff>(f: &Grassmann<C>) -> Result<C> {
    let vars: Vec<usize> = (0..f.generators()).collect();
    Ok(berezin(f, &vars)?.coeff(0))
}

/// Sign relating the descending top monomial to the ascending storage order.
pub fn top_sign(n: usize) -> i32 {
    if (n * n.saturating_sub(1) / 2).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, Cq};

    type G = Grassmann<Cq>;

    #[test]
    fn descending_top_monomial_integrates_to_one() {
        let e1 = G::generator(2, 0).unwrap();
        let e2 = G::generator(2, 1).unwrap();
        assert_eq!(berezin_all(&(&e2 * &e1)).unwrap(), int(1));
        assert_eq!(berezin_all(&(&e1 * &e2)).unwrap(), int(-1));
        assert_eq!(berezin_all(&e1).unwrap(), int(0));
    }

    #[test]
    fn ascending_top_sign() {
        for n in 0..7 {
            let full = G::monomial(n, ((1u64 << n) - 1) as u32, int(1)).unwrap();
            assert_eq!(
                berezin_all(&full).unwrap(),
                int(top_sign(n) as i64),
                "n = {n}"
            );
        }
    }

    #[test]
    fn partial_integration_keeps_parameters() {
        // eta^2 eta^1 b with b = g_2 a parameter
        let b = G::generator(3, 2).unwrap();
        let f = &(&G::generator(3, 1).unwrap() * &G::generator(3, 0).unwrap()) * &b;
        assert_eq!(berezin(&f, &[0, 1]).unwrap(), b);
    }
}
