//! Exact simulation and generating-function asymptotics for two-dimensional
//! nearest-neighbor quantum random walks.
//!
//! The crate has two independent pipelines that cross-validate each other:
//!
//! * [`simulate`] evolves the walk exactly on the lattice and is the ground
//!   truth for every asymptotic claim.
//! * [`genfun`], [`variety`] and [`asymptotics`] work on the spacetime
//!   generating function `F(x,y,z) = (I - z M U)^{-1}`: its pole variety
//!   intersected with the unit torus, the logarithmic Gauss map and
//!   Gauss-Kronecker curvature of that surface, and the stationary-phase
//!   amplitude formula built from them. The projected Gauss-map image is the
//!   feasible velocity region; curvature enters pointwise amplitudes as
//!   `|K|^{-1/2}`.
//!
//! [`model`] defines the coin families, [`render`] writes the CSV/PGM
//! artifacts, and [`tolerances`] collects every numerical threshold in one
//! overridable record.

// Index loops read better than iterator chains in the fixed-size matrix
// arithmetic that dominates this crate.
#![allow(clippy::needless_range_loop)]

pub mod asymptotics;
pub mod genfun;
pub mod model;
pub mod render;
pub mod roots;
pub mod simulate;
pub mod tolerances;
pub mod variety;

pub use model::{CoinModel, Family, ModelDescriptor, ModelError};
pub use simulate::WaveField;
pub use tolerances::Tolerances;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
