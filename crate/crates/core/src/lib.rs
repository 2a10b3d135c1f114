//! Combinatorial lines, equal-slices measures and density-increment
//! machinery over the grid `[k]^n`.

pub mod cube;
pub mod error;
pub mod extremal;
pub mod harness;
pub mod increment;
pub mod measures;
pub mod rational;
pub mod sperner;

pub use cube::{CubeSet, CubeShape, LinePattern, Point, SearchOptions, Subspace};
pub use error::{Error, Result};
pub use rational::{ExactProb, Rational};
