//! Solver for the semilinear heat equation `u' - Lap(u) + |u|^rho u = 0`
//! on a periodic 3-D box.
//!
//! The solution is constructed window by window: on each time window the
//! integral form of the equation is a contraction on a ball of fields, so
//! fixed-point iteration converges there, and chaining windows extends
//! the solution to any horizon. Alongside the solution the library
//! evaluates, at runtime, the estimates that make this construction work:
//! the energy balance, the a-priori bounds it implies, sup-norm
//! boundedness, and the quantities entering the boundedness argument.

// parameter guards are written `!(x > 0.0)` on purpose: the negation
// also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod continuation;
pub mod diagnostics;
pub mod error;
pub mod fd;
pub mod grid;
pub mod picard;
pub mod report;
pub mod run;
pub mod semigroup;
pub mod spectral;

pub use continuation::{BlowupDiagnosis, BlowupReason};
pub use error::{Error, Result};
pub use grid::{GridSpec, RealField};
pub use spectral::SpectralField;
