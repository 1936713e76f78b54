//! Quantum channel capacity toolkit built on relative-entropy geometry.
//!
//! The crate computes Holevo and coherent-information capacities of
//! finite-dimensional channels, realises them as radii of smallest enclosing
//! relative-entropy balls, clusters channel outputs with Bregman coresets,
//! and sweeps convex channel combinations for superactivation.

pub mod capacity;
pub mod channels;
pub mod coreset;
pub mod ball;
pub mod error;
pub mod linalg;
pub mod optim;
pub mod qstate;
pub mod random;
pub mod superactivation;

pub use error::{Error, Result};
