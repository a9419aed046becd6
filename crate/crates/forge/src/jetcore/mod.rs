//! Exact truncated power-series algebra and the exterior/Schouten calculus
//! that every other module consumes.

pub mod jet;
pub mod map;
pub mod scalar;
pub mod tensor;

pub use jet::{same_space, space, Jet, Mono, OrderBound, Space};
pub use map::JetMap;
pub use scalar::{parse_rat, rat, rat_int, render_rat, Rat, Scalar, TPoly};
pub use tensor::{
    increasing_tuples, volume_form, DifferentialFormField, PolyVectorField, Skew,
};
