//! Finite-stage computation of conditional mean dimension and its relatives
//! for `Z^d` actions on cubical grid models.
//!
//! Layers, bottom up:
//!
//! * [`group`]: lattice elements, windows, invariance defects, Følner boxes, tiles.
//! * [`tiling`]: ε-disjointness certificates (max-flow) and greedy quasi-tilings.
//! * [`covers`]: cell complexes, open covers, `ord`, joins, and the exact
//!   branch-and-bound for `D(U|Y)` at a fixed grid resolution.
//! * [`systems`]: window models of shifts, products, skew products and kernels.
//! * [`estimators`]: per-stage invariants and convergence traces.
//! * [`harness`]: experiment files, proof-replay checks, reports and audit.

pub mod covers;
pub mod error;
pub mod estimators;
pub mod group;
pub mod harness;
pub mod rational;
pub mod systems;
pub mod tiling;

pub use error::{Error, Result};
pub use rational::Rational;
