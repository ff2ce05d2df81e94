//! Numerical checks for matrix-valued phase-space symbols.
//!
//! Principal type, quasi-symmetrizers, the approximation property, sublevel
//! exponents and semiclassical scaling of model operators.

pub mod banded;
pub mod error;
pub mod finite_type;
pub mod fit;
pub mod linalg;
pub mod principal;
pub mod quasisym;
pub mod semiclassical;
pub mod sparse;
pub mod spectral;
pub mod sublevel;
pub mod symbol;
pub mod symmetrizer;

pub use error::{Error, Result};
pub use linalg::{CMat, C64};
pub use symbol::{HypersurfaceChart, MatrixSymbol, PhasePoint, TangentDirection};
