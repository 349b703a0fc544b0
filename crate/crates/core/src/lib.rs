//! Illumination of 1-symmetric convex bodies.
//!
//! Bodies are unit balls of norms invariant under coordinate permutations
//! and sign changes. Polyhedral ones are handled in exact rational
//! arithmetic; `ℓp` balls use floats with an explicit tolerance.

pub mod bodies;
pub mod certify;
pub mod combinatorics;
pub mod directions;
pub mod error;
pub mod randomized;
pub mod rational;
pub mod subdiff;

pub use bodies::{parse_body, BodySpec, Scalar, SymBody};
pub use directions::{gen_direction_set, DirectionLabel, DirectionSet, Strategy};
pub use error::{Error, Result};
pub use rational::Q;
