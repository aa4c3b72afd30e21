//! Discrete geometry of maps from flat tori with a conformal factor into Riemannian targets:
//! harmonic maps and their heat flow, Hopf differentials, Teichmuller energy profiles,
//! twisted Dirac operators and the gravitino-coupled action with its symmetry checks.

// Index loops mirror the component formulas; `!(x > 0)` deliberately rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod dirac;
pub mod error;
pub mod gravitino;
pub mod grid;
pub mod harmonic;
pub mod io;
pub mod quadratic;
pub mod quaternion;
pub mod target;
pub mod teichmuller;

pub use error::{Result, SigmaError};
