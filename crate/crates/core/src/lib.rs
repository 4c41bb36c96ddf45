//! Exact jet-space machinery for classifying multigerms of parametrized curves
//! up to right-left equivalence.
//!
//! The crate is organised bottom-up:
//!
//! - [`jet`]: truncated univariate power series over the rationals;
//! - [`linalg`]: sparse exact echelon forms, kernels and subspace intersections;
//! - [`germs`]: components, multigerms, pullbacks, stabilization and A-changes;
//! - [`tangent`]: tangent spaces to orbits of the right-left group and its filtrations;
//! - [`transversal`]: complete transversals and one-level jet reduction;
//! - [`mather`]: orbit membership checks for affine families of jets;
//! - [`semigroup`]: invariant semigroups, invariant pairs and determinacy bounds;
//! - [`catalog`]: the table of stably simple normal forms as data;
//! - [`classify`]: end-to-end recognition and non-simplicity evidence;
//! - [`verify`]: whole-table round trips and fingerprint distinctness.

pub mod catalog;
pub mod classify;
pub mod error;
pub mod family;
pub mod germs;
pub mod jet;
pub mod linalg;
pub mod mather;
pub mod sampling;
pub mod semigroup;
pub mod tangent;
pub mod transversal;
pub mod verify;

pub use error::{Error, Result};
pub use germs::{ComponentGerm, Monomial, Multigerm};
pub use jet::{Jet, Order, Rational};
