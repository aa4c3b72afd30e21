//! Exact symbolic supergeometry: Grassmann algebras with rational complex coefficients,
//! superfunctions on C^{1|1} with the operator D = d/dtheta + theta d/dz, superconformal
//! coordinate changes, Berezin integration and the component expansion of the flat
//! superfield action on a grid.

pub mod berezin;
pub mod error;
pub mod expr;
pub mod grassmann;
pub mod poly;
pub mod scalar;
pub mod suite;
pub mod superfield;
pub mod superfn;

pub use error::{Result, SuperError};
pub use grassmann::Grassmann;
pub use poly::Poly;
pub use scalar::{Coeff, Cq, Q};
