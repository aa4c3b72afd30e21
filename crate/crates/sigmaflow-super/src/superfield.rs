//! Scalar superfields on the flat square torus R^{2|2}, sampled on an n x n grid.
//!
//! Generators 0 and 1 are the odd coordinates eta^1, eta^2; generators 2.. are odd parameters.
//! A superfield Phi = phi + eta^mu psi_mu + eta^1 eta^2 F has even phi, F and odd psi_mu whose
//! values are Grassmann elements in the parameters. With gamma^1 = sigma_x, gamma^2 = sigma_z,
//!
//! `D_mu = d/deta^mu + i (gamma^alpha eta)_mu d_alpha`,  `L = -1/2 eps^{mu nu} D_mu Phi D_nu Phi`,
//!
//! and the Berezin integral of L over eta is |d phi|^2 + F^2 + i psi_mu gamma^alpha_{mu nu} d_alpha psi_nu.
//! Derivatives are central differences, the cell area is 1/n^2, all arithmetic is exact.

use crate::berezin::berezin;
use crate::error::{Result, SuperError};
use crate::grassmann::Grassmann;
use crate::scalar::{imag_unit, int, rat, real, Cq};

pub type G = Grassmann<Cq>;

pub const ETA: [usize; 2] = [0, 1];

/// gamma^alpha_{mu nu} for alpha = x, y.
pub const GAMMA: [[[i64; 2]; 2]; 2] = [[[0, 1], [1, 0]], [[1, 0], [0, -1]]];

#[derive(Clone, Debug, PartialEq)]
pub struct Components {
    pub phi: Vec<G>,
    pub psi: [Vec<G>; 2],
    pub f: Vec<G>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSuperfield {
    n: usize,
    params: usize,
    nodes: Vec<G>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentAction {
    pub dirichlet: G,
    pub aux: G,
    pub dirac: G,
    pub total: G,
}

fn parity_check(v: &G, odd: bool) -> Result<()> {
    let ok = if odd { v.is_odd() } else { v.is_even() };
    if ok {
        Ok(())
    } else {
        Err(SuperError::Parity {
            expected: if odd { "odd" } else { "even" },
            got: format!("{v:?}"),
        })
    }
}

impl GridSuperfield {
    /// Assemble Phi from components in the parameter algebra on `params` generators, which are
    /// shifted past eta^1, eta^2.
    pub fn from_components(n: usize, params: usize, c: &Components) -> Result<Self> {
        if n < 3 {
            return Err(SuperError::Unsupported(format!("grid size {n} below 3")));
        }
        let len = n * n;
        for v in [&c.phi, &c.psi[0], &c.psi[1], &c.f] {
            if v.len() != len {
                return Err(SuperError::Unsupported(format!(
                    "component with {} nodes on a {n} x {n} grid",
                    v.len()
                )));
            }
        }
        let total = params + 2;
        let lift = |v: &G| -> Result<G> {
            let v = v.embed(params)?;
            let mut out = G::zero(total);
            for (m, c) in v.terms() {
                out = &out + &G::monomial(total, m << 2, c.clone())?;
            }
            Ok(out)
        };
        let e1 = G::generator(total, ETA[0])?;
        let e2 = G::generator(total, ETA[1])?;
        let e12 = &e1 * &e2;
        let mut nodes = Vec::with_capacity(len);
        for p in 0..len {
            parity_check(&c.phi[p], false)?;
            parity_check(&c.f[p], false)?;
            parity_check(&c.psi[0][p], true)?;
            parity_check(&c.psi[1][p], true)?;
            let v = &(&(&lift(&c.phi[p])? + &(&e1 * &lift(&c.psi[0][p])?))
                + &(&e2 * &lift(&c.psi[1][p])?))
                + &(&e12 * &lift(&c.f[p])?);
            nodes.push(v);
        }
        Ok(Self { n, params, nodes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn node(&self, p: usize) -> &G {
        &self.nodes[p]
    }

    /// Components read back from the superfield, in the full generator set.
    pub fn expand(&self) -> Components {
        let mut c = Components {
            phi: vec![],
            psi: [vec![], vec![]],
            f: vec![],
        };
        for v in &self.nodes {
            let no_eta = |g: &G| {
                let mut out = G::zero(g.generators());
                for (m, k) in g.terms() {
                    if m & 0b11 == 0 {
                        out = &out + &G::monomial(g.generators(), m, k.clone()).expect("in range");
                    }
                }
                out
            };
            c.phi.push(no_eta(v));
            c.psi[0].push(no_eta(&v.d_generator(ETA[0]).expect("eta")));
            c.psi[1].push(no_eta(&v.d_generator(ETA[1]).expect("eta")));
            // Phi = ... + eta^1 eta^2 F, so F = d/deta^2 d/deta^1 Phi
            let f = v
                .d_generator(ETA[0])
                .and_then(|x| x.d_generator(ETA[1]))
                .expect("eta");
            c.f.push(no_eta(&f));
        }
        c
    }

    fn cell(&self) -> Cq {
        real(rat(1, (self.n * self.n) as i64))
    }

    /// Berezin integral over eta of the superfield Lagrangian, summed over the grid.
    pub fn berezin_action_flat(&self) -> Result<G> {
        let n = self.n;
        let total = self.params + 2;
        let dx = central(n, &self.nodes, 0);
        let dy = central(n, &self.nodes, 1);
        let eta = [G::generator(total, ETA[0])?, G::generator(total, ETA[1])?];
        let i = G::scalar(total, imag_unit());
        let mut acc = G::zero(total);
        for p in 0..n * n {
            let d = [&dx[p], &dy[p]];
            let mut dphi = Vec::with_capacity(2);
            for mu in 0..2 {
                let mut v = self.nodes[p].d_generator(ETA[mu])?;
                for (alpha, da) in d.iter().enumerate() {
                    let mut ge = G::zero(total);
                    for (nu, e) in eta.iter().enumerate() {
                        ge = &ge + &e.scale(&int(GAMMA[alpha][mu][nu]));
                    }
                    v = &v + &(&(&i * &ge) * *da);
                }
                dphi.push(v);
            }
            let lag = (&(&dphi[0] * &dphi[1]) - &(&dphi[1] * &dphi[0])).scale(&real(rat(-1, 2)));
            acc = &acc + &berezin(&lag, &ETA)?;
        }
        Ok(acc.scale(&self.cell()))
    }
}

fn central(n: usize, f: &[G], axis: usize) -> Vec<G> {
    let h = real(rat(n as i64, 2));
    (0..n * n)
        .map(|p| {
            let (i, j) = (p % n, p / n);
            let (fw, bw) = if axis == 0 {
                (j * n + (i + 1) % n, j * n + (i + n - 1) % n)
            } else {
                (((j + 1) % n) * n + i, ((j + n - 1) % n) * n + i)
            };
            (&f[fw] - &f[bw]).scale(&h)
        })
        .collect()
}

/// |d phi|^2 + F^2 + i psi_mu gamma^alpha_{mu nu} d_alpha psi_nu summed over the grid, assembled
/// directly from the components.
pub fn component_action(n: usize, c: &Components) -> ComponentAction {
    let gens = c
        .phi
        .iter()
        .chain(&c.f)
        .chain(&c.psi[0])
        .chain(&c.psi[1])
        .map(G::generators)
        .max()
        .unwrap_or(0);
    let cell = real(rat(1, (n * n) as i64));
    let px = central(n, &c.phi, 0);
    let py = central(n, &c.phi, 1);
    let dpsi = [
        [central(n, &c.psi[0], 0), central(n, &c.psi[0], 1)],
        [central(n, &c.psi[1], 0), central(n, &c.psi[1], 1)],
    ];
    let mut dir = G::zero(gens);
    let mut aux = G::zero(gens);
    let mut dirac = G::zero(gens);
    for p in 0..n * n {
        dir = &dir + &(&(&px[p] * &px[p]) + &(&py[p] * &py[p]));
        aux = &aux + &(&c.f[p] * &c.f[p]);
        for mu in 0..2 {
            for nu in 0..2 {
                for (alpha, gam) in GAMMA.iter().enumerate() {
                    if gam[mu][nu] != 0 {
                        let t = &c.psi[mu][p] * &dpsi[nu][alpha][p];
                        dirac = &dirac + &t.scale(&int(gam[mu][nu]));
                    }
                }
            }
        }
    }
    let dirichlet = dir.scale(&cell);
    let aux = aux.scale(&cell);
    let dirac = dirac.scale(&(imag_unit() * cell));
    let total = &(&dirichlet + &aux) + &dirac;
    ComponentAction {
        dirichlet,
        aux,
        dirac,
        total,
    }
}

/// Example data: integer-valued phi, a two-parameter spinor and an auxiliary field.
pub fn sample_components(n: usize, with_phi: bool, with_psi: bool, with_f: bool) -> Components {
    let params = 2;
    let b = [
        G::generator(params, 0).unwrap(),
        G::generator(params, 1).unwrap(),
    ];
    let len = n * n;
    let mut c = Components {
        phi: vec![G::zero(params); len],
        psi: [vec![G::zero(params); len], vec![G::zero(params); len]],
        f: vec![G::zero(params); len],
    };
    for p in 0..len {
        let (i, j) = ((p % n) as i64, (p / n) as i64);
        if with_phi {
            c.phi[p] = G::scalar(params, real(rat((i * i + 2 * j) % 7, 3)));
        }
        if with_psi {
            let s1 = real(rat((i + 3 * j) % 5, 2));
            let s2 = real(rat((2 * i * j + 1) % 3, 1));
            c.psi[0][p] = &b[0].scale(&s1) + &b[1].scale(&s2);
            c.psi[1][p] = &b[0].scale(&s2) + &b[1].scale(&(s1 * int(-1)));
        }
        if with_f {
            c.f[p] = G::scalar(params, real(rat(i - j, 2)));
        }
    }
    c
}

/// Action of Phi = phi_const + eta^1 eta^2 t, which is t^2 for the unit torus.
pub fn constant_aux_action(n: usize, t: Cq) -> Result<G> {
    let params = 0;
    let len = n * n;
    let c = Components {
        phi: vec![G::one(params); len],
        psi: [vec![G::zero(params); len], vec![G::zero(params); len]],
        f: vec![G::scalar(params, t); len],
    };
    GridSuperfield::from_components(n, params, &c)?.berezin_action_flat()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expansion_round_trips() {
        let c = sample_components(4, true, true, true);
        let s = GridSuperfield::from_components(4, 2, &c).unwrap();
        // components come back in the full algebra, parameters shifted by two
        let back = s.expand();
        for p in 0..16 {
            assert_eq!(back.phi[p].coeff(0), c.phi[p].coeff(0));
            assert_eq!(back.f[p].coeff(0), c.f[p].coeff(0));
            for mu in 0..2 {
                for k in 0..2u32 {
                    assert_eq!(
                        back.psi[mu][p].coeff(1 << (k + 2)),
                        c.psi[mu][p].coeff(1 << k)
                    );
                }
            }
        }
    }

    #[test]
    fn berezin_action_matches_components() {
        for (a, b, f) in [
            (true, false, false),
            (false, true, false),
            (false, false, true),
            (true, true, true),
        ] {
            let c = sample_components(4, a, b, f);
            let s = GridSuperfield::from_components(4, 2, &c).unwrap();
            let lhs = s.berezin_action_flat().unwrap();
            let rhs = component_action(4, &c).total;
            // rhs lives on the parameters only; shift into the superfield algebra
            let mut shifted = G::zero(4);
            for (m, v) in rhs.terms() {
                shifted = &shifted + &G::monomial(4, m << 2, v.clone()).unwrap();
            }
            assert_eq!(lhs, shifted, "{a} {b} {f}");
        }
    }

    #[test]
    fn auxiliary_field_contributes_its_square() {
        for t in [-2, 0, 3] {
            let a = constant_aux_action(3, int(t)).unwrap();
            assert_eq!(a, G::scalar(2, int(t * t)));
        }
    }

    #[test]
    fn parity_is_enforced() {
        let mut c = sample_components(3, true, true, false);
        c.phi[0] = G::generator(2, 0).unwrap();
        assert!(GridSuperfield::from_components(3, 2, &c).is_err());
    }
}
