//! Quaternions as the real spinor fiber of a surface.
//!
//! The spinor module is H with Clifford multiplication e1 = left multiplication by i and
//! e2 = left multiplication by j. Both are orthogonal and square to -1, so the Euclidean dot
//! product is a compatible real inner product and e1 e2 acts as left multiplication by k.

pub type Quat = [f64; 4];

pub const ZERO: Quat = [0.0; 4];

#[inline]
pub fn mul(a: &Quat, b: &Quat) -> Quat {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

/// i * s
#[inline]
pub fn e1(s: &Quat) -> Quat {
    [-s[1], s[0], -s[3], s[2]]
}

/// j * s
#[inline]
pub fn e2(s: &Quat) -> Quat {
    [-s[2], s[3], s[0], -s[1]]
}

/// k * s = e1 e2 s
#[inline]
pub fn ek(s: &Quat) -> Quat {
    [-s[3], -s[2], s[1], s[0]]
}

/// Clifford multiplication by the frame vector with components v.
#[inline]
pub fn clifford(v: [f64; 2], s: &Quat) -> Quat {
    let a = e1(s);
    let b = e2(s);
    [
        v[0] * a[0] + v[1] * b[0],
        v[0] * a[1] + v[1] * b[1],
        v[0] * a[2] + v[1] * b[2],
        v[0] * a[3] + v[1] * b[3],
    ]
}

/// Multiplication by the frame vector e_alpha, alpha in {0, 1}.
#[inline]
pub fn e(alpha: usize, s: &Quat) -> Quat {
    if alpha == 0 {
        e1(s)
    } else {
        e2(s)
    }
}

#[inline]
pub fn dot(a: &Quat, b: &Quat) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

#[inline]
pub fn add(a: &Quat, b: &Quat) -> Quat {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

#[inline]
pub fn sub(a: &Quat, b: &Quat) -> Quat {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

#[inline]
pub fn scale(c: f64, a: &Quat) -> Quat {
    [c * a[0], c * a[1], c * a[2], c * a[3]]
}

#[inline]
pub fn axpy(c: f64, a: &Quat, acc: &mut Quat) {
    for k in 0..4 {
        acc[k] += c * a[k];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const I: Quat = [0.0, 1.0, 0.0, 0.0];
    const J: Quat = [0.0, 0.0, 1.0, 0.0];
    const K: Quat = [0.0, 0.0, 0.0, 1.0];

    #[test]
    fn left_multiplications_match_hamilton_product() {
        let s = [0.3, -1.2, 0.7, 2.0];
        assert_eq!(e1(&s), mul(&I, &s));
        assert_eq!(e2(&s), mul(&J, &s));
        assert_eq!(ek(&s), mul(&K, &s));
        assert_eq!(e1(&e2(&s)), ek(&s));
    }

    #[test]
    fn clifford_relations() {
        let s = [0.3, -1.2, 0.7, 2.0];
        assert_eq!(e1(&e1(&s)), scale(-1.0, &s));
        assert_eq!(e2(&e2(&s)), scale(-1.0, &s));
        assert_eq!(add(&e1(&e2(&s)), &e2(&e1(&s))), ZERO);
        // skew-adjoint
        let t = [1.0, 0.5, -0.25, 0.125];
        assert!((dot(&e1(&s), &t) + dot(&s, &e1(&t))).abs() < 1e-15);
        assert!((dot(&e2(&s), &t) + dot(&s, &e2(&t))).abs() < 1e-15);
        assert_eq!(dot(&s, &e1(&s)), 0.0);
    }
}
