use proptest::prelude::*;
use sigmaflow_super::berezin::{berezin, berezin_all};
use sigmaflow_super::scalar::{int, rat, real, Cq};
use sigmaflow_super::superfn::{self, d_op, d_z, SuperFn};
use sigmaflow_super::{Grassmann, Poly};

type G = Grassmann<Cq>;

fn element(n: usize) -> impl Strategy<Value = G> {
    prop::collection::vec((0u32..(1 << n), -4i64..=4, 1i64..=3), 0..8).prop_map(move |terms| {
        terms.into_iter().fold(G::zero(n), |acc, (m, a, b)| {
            &acc + &G::monomial(n, m, real(rat(a, b))).unwrap()
        })
    })
}

fn superfunction(params: usize) -> impl Strategy<Value = SuperFn> {
    let n = superfn::generators(params);
    prop::collection::vec(
        (0u32..(1 << n), prop::collection::vec(-3i64..=3, 0..4)),
        0..6,
    )
    .prop_map(move |terms| {
        terms.into_iter().fold(SuperFn::zero(n), |acc, (m, cs)| {
            let p = Poly::new(cs.into_iter().map(int).collect());
            &acc + &SuperFn::monomial(n, m, p).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn product_is_associative(a in element(4), b in element(4), c in element(4)) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
    }

    #[test]
    fn product_is_graded_commutative(a in element(4), b in element(4)) {
        for pa in 0..2u8 {
            for pb in 0..2u8 {
                let (x, y) = (a.part(pa), b.part(pb));
                let s = if pa == 1 && pb == 1 { -1 } else { 1 };
                prop_assert_eq!(&x * &y, (&y * &x).scale(&int(s)));
            }
        }
    }

    #[test]
    fn product_distributes(a in element(4), b in element(4), c in element(4)) {
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
    }

    #[test]
    fn d_squares_to_d_z(f in superfunction(2)) {
        prop_assert_eq!(d_op(&d_op(&f)), d_z(&f));
    }

    #[test]
    fn d_obeys_graded_leibniz(f in superfunction(2), g in superfunction(2)) {
        for pf in 0..2u8 {
            let x = f.part(pf);
            let sign = Poly::constant(if pf == 1 { int(-1) } else { int(1) });
            let lhs = d_op(&(&x * &g));
            let rhs = &(&d_op(&x) * &g) + &(&x * &d_op(&g)).scale(&sign);
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn berezin_is_linear(a in element(4), b in element(4), k in -5i64..=5) {
        let lhs = berezin_all(&(&a + &b.scale(&int(k)))).unwrap();
        let rhs = berezin_all(&a).unwrap() + berezin_all(&b).unwrap() * int(k);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn berezin_kills_elements_without_top_monomial(a in element(4)) {
        let full = 0b1111u32;
        let stripped = &a - &G::monomial(4, full, a.coeff(full)).unwrap();
        prop_assert_eq!(berezin_all(&stripped).unwrap(), int(0));
        prop_assert!(berezin(&stripped, &[0, 1, 2, 3]).unwrap().is_zero());
    }
}
