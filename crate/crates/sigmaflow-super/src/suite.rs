//! Exact identity checks, run by `sigmaflow super-check`.

use crate::berezin::{berezin_all, top_sign};
use crate::poly::Poly;
use crate::scalar::{int, rat, real, Cq};
use crate::superfield::{
    component_action, constant_aux_action, sample_components, GridSuperfield, G,
};
use crate::superfn::{
    self, d_op, d_z, pullback_even, superconformal_check, SuperCoordinateChange, SuperFn,
};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, failures: Vec<String>, total: usize) -> Check {
    Check {
        name,
        passed: failures.is_empty(),
        detail: match failures.first() {
            None => format!("{total} cases exact"),
            Some(f) => format!("{} of {total} failed, first: {f}", failures.len()),
        },
    }
}

/// z^k times the basis monomial `mask` on C^{1|params}.
fn basis(params: usize, max_power: usize) -> Vec<SuperFn> {
    let n = superfn::generators(params);
    let mut out = vec![];
    for mask in 0..(1u32 << n) {
        for k in 0..=max_power {
            out.push(SuperFn::monomial(n, mask, Poly::monomial(int(1), k)).expect("in range"));
        }
    }
    out
}

pub fn d_squared(params: usize) -> Check {
    let b = basis(params, 3);
    let fails = b
        .iter()
        .filter(|f| d_op(&d_op(f)) != d_z(f))
        .map(superfn::display)
        .collect();
    check("D^2 = d/dz", fails, b.len())
}

pub fn leibniz(params: usize) -> Check {
    let b = basis(params.min(2), 2);
    let mut fails = vec![];
    for x in &b {
        let sign = if x.is_odd() { int(-1) } else { int(1) };
        for y in &b {
            let lhs = d_op(&(x * y));
            let rhs = &(&d_op(x) * y) + &(x * &d_op(y)).scale(&Poly::constant(sign.clone()));
            if lhs != rhs {
                fails.push(format!("{} * {}", superfn::display(x), superfn::display(y)));
            }
        }
    }
    check("Leibniz rule for D", fails, b.len() * b.len())
}

pub fn graded_algebra(params: usize) -> Check {
    let n = params.max(1);
    let basis: Vec<G> = (0..(1u32 << n))
        .map(|m| G::monomial(n, m, int(1)).expect("in range"))
        .collect();
    let mut fails = vec![];
    let mut total = 0;
    for a in &basis {
        for b in &basis {
            total += 1;
            let s = if a.is_odd() && b.is_odd() { -1 } else { 1 };
            if a * b != (b * a).scale(&int(s)) {
                fails.push(format!("{a:?} {b:?} commute"));
            }
            for c in &basis {
                total += 1;
                if &(a * b) * c != a * &(b * c) {
                    fails.push(format!("{a:?} {b:?} {c:?} associate"));
                }
            }
        }
    }
    check("graded commutativity and associativity", fails, total)
}

pub fn berezin_conventions(params: usize) -> Check {
    let mut fails = vec![];
    let e = |n: usize, i: usize| G::generator(n, i).expect("in range");
    if berezin_all(&(&e(2, 1) * &e(2, 0))).ok() != Some(int(1)) {
        fails.push("eta^2 eta^1 -> 1".to_string());
    }
    if berezin_all(&(&e(2, 0) * &e(2, 1))).ok() != Some(int(-1)) {
        fails.push("eta^1 eta^2 -> -1".to_string());
    }
    let n = params.max(2);
    let full = (1u32 << n) - 1;
    for mask in 0..=full {
        let m = G::monomial(n, mask, int(1)).expect("in range");
        let want = if mask == full {
            int(top_sign(n) as i64)
        } else {
            int(0)
        };
        if berezin_all(&m).ok() != Some(want) {
            fails.push(format!("monomial {mask:b}"));
        }
    }
    // linearity
    let a = &G::monomial(n, full, real(rat(3, 2))).expect("in range") + &e(n, 0);
    let b = G::monomial(n, full, int(-5)).expect("in range");
    let lhs = berezin_all(&(&a + &b.scale(&int(2)))).expect("ok");
    let rhs = berezin_all(&a).expect("ok") + berezin_all(&b).expect("ok") * int(2);
    if lhs != rhs {
        fails.push("linearity".into());
    }
    check("Berezin sign and linearity", fails, (full as usize) + 4)
}

pub fn superconformal(params: usize) -> Check {
    let p = params.max(1);
    let mut fails = vec![];
    let cases: Vec<(&str, SuperCoordinateChange, bool)> = vec![
        (
            "(z, 1)",
            SuperCoordinateChange::even(p, Poly::z(), Poly::constant(int(1))),
            true,
        ),
        (
            "(z^3/3, z)",
            SuperCoordinateChange::even(p, Poly::monomial(real(rat(1, 3)), 3), Poly::z()),
            true,
        ),
        (
            "(z, 2)",
            SuperCoordinateChange::even(p, Poly::z(), Poly::constant(int(2))),
            false,
        ),
        (
            "supertranslation",
            SuperCoordinateChange::new(
                &superfn::z(p) + &(&superfn::theta(p) * &superfn::param(p, 1).expect("e1")),
                &superfn::theta(p) + &superfn::param(p, 1).expect("e1"),
            )
            .expect("parities"),
            true,
        ),
    ];
    for (name, c, expect) in &cases {
        let r = superconformal_check(c);
        if r.superconformal != *expect {
            fails.push(format!("{name}: defect {}", superfn::display(&r.defect)));
        }
    }
    let d = superconformal_check(&cases[2].1).defect;
    if d != &superfn::theta(p) * &superfn::constant(p, int(-3)) {
        fails.push(format!("(z, 2) defect {}", superfn::display(&d)));
    }
    check("superconformal condition f' = g^2", fails, cases.len() + 1)
}

/// D(F o c) = g (D'F) o c for the even change c with f' = g^2.
pub fn d_transforms(params: usize) -> Check {
    let p = params.min(1);
    let f = Poly::monomial(real(rat(1, 3)), 3);
    let g = Poly::z();
    let b = basis(p, 2);
    let gs = superfn::even(p, g.clone());
    let fails = b
        .iter()
        .filter(|func| {
            let lhs = d_op(&pullback_even(func, &f, &g));
            let rhs = &gs * &pullback_even(&d_op(func), &f, &g);
            lhs != rhs
        })
        .map(superfn::display)
        .collect();
    check("D = g D' under superconformal change", fails, b.len())
}

pub fn superfield_action() -> Check {
    let n = 4;
    let mut fails = vec![];
    let combos = [
        (true, false, false),
        (false, true, false),
        (false, false, true),
        (true, true, true),
    ];
    for (a, b, f) in combos {
        let c = sample_components(n, a, b, f);
        let lhs = GridSuperfield::from_components(n, 2, &c).and_then(|s| s.berezin_action_flat());
        let rhs = component_action(n, &c).total;
        let mut shifted = G::zero(4);
        for (m, v) in rhs.terms() {
            shifted = &shifted + &G::monomial(4, m << 2, v.clone()).expect("in range");
        }
        match lhs {
            Ok(l) if l == shifted => {}
            Ok(l) => fails.push(format!("phi {a} psi {b} F {f}: {l:?} vs {shifted:?}")),
            Err(e) => fails.push(e.to_string()),
        }
    }
    let aux: Vec<(i64, Option<Cq>)> = (-2..=2)
        .map(|t| (t, constant_aux_action(3, int(t)).ok().map(|g| g.coeff(0))))
        .collect();
    for (t, v) in &aux {
        if v.as_ref() != Some(&int(t * t)) {
            fails.push(format!("constant F = {t}"));
        }
    }
    check(
        "Berezin action equals component action",
        fails,
        combos.len() + aux.len(),
    )
}

pub fn identity_suite(params: usize) -> Vec<Check> {
    vec![
        graded_algebra(params),
        berezin_conventions(params),
        d_squared(params),
        leibniz(params),
        superconformal(params),
        d_transforms(params),
        superfield_action(),
    ]
}

/// Checks for one user expression: D^2 f = f_z and the Leibniz rule against theta.
pub fn expression_checks(f: &SuperFn) -> Vec<Check> {
    let params = f.generators().saturating_sub(1);
    let d2 = check(
        "D^2 = d/dz on expression",
        if d_op(&d_op(f)) == d_z(f) {
            vec![]
        } else {
            vec![superfn::display(f)]
        },
        1,
    );
    let th = superfn::theta(params);
    let mut fails = vec![];
    for part in [f.part(0), f.part(1)] {
        let sign = if part.is_odd() { int(-1) } else { int(1) };
        let lhs = d_op(&(&part * &th));
        let rhs = &(&d_op(&part) * &th) + &(&part * &d_op(&th)).scale(&Poly::constant(sign));
        if lhs != rhs {
            fails.push(superfn::display(&part));
        }
    }
    vec![d2, check("Leibniz rule on expression", fails, 2)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_suite_passes() {
        for c in identity_suite(4) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn expression_checks_pass() {
        let f = crate::expr::parse("(+ (* th e1 z) (* 1/2 z z) e2)", 2).unwrap();
        assert!(expression_checks(&f).iter().all(|c| c.passed));
    }
}
