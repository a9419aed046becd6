//! poisson-forge: an exact-arithmetic kernel for local Poisson geometry.
//!
//! The kernel works with truncated formal power series (jets) over the
//! rationals and implements Schouten calculus, Weinstein splitting,
//! Vorobiev coupling data, Moser-path equivariant normalization, formal
//! linearization for semisimple linear parts, and the division-property
//! algorithm for low-dimensional Lie algebras. Everything is exact: no
//! floating point appears anywhere, and every value carries the truncation
//! order through which it is certified.

pub mod error;
pub mod cli;
pub mod coupling;
pub mod equivariant;
pub mod jetcore;
pub mod liealg;
pub mod linalg;
pub mod poisson;
pub mod report;
pub mod schema;
pub mod splitting;

pub use error::{Error, Result};
pub use jetcore::{
    space, DifferentialFormField, Jet, JetMap, Mono, OrderBound, PolyVectorField, Rat, Scalar,
    Space, TPoly,
};
