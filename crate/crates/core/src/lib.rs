//! Surrogate-assisted reliability-based design optimization.
//!
//! The crate is organised around the pieces of a nested (double-loop) RBDO
//! solver whose inner reliability analyses run on kriging emulators rather
//! than on the expensive limit-state functions themselves:
//!
//! * [`probability`] holds design-parameterised marginal laws, the
//!   isoprobabilistic transform and the augmented-space confidence box.
//! * [`kriging`] fits Gaussian-process emulators by maximum likelihood and
//!   predicts their mean and variance.
//! * [`refine`] enriches a design of experiments inside the margin of
//!   uncertainty of an emulator until three bracketing failure probabilities
//!   agree.
//! * [`reliability`] estimates failure probabilities and their design
//!   sensitivities with subset simulation.
//! * [`optimizer`] is the Polak-He feasible-direction method with a
//!   warm-started Armijo line search.
//! * [`rbdo`] wires these together, and [`models`] carries the pressure-hull
//!   application and analytic benchmarks.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line front end and thread pools live in the companion `rbdo-cli` crate.

#![no_std]
#![warn(missing_debug_implementations)]
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::needless_range_loop
)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod doe;
pub mod error;
pub mod exec;
pub mod kriging;
pub mod linalg;
pub mod models;
pub mod optimizer;
pub mod probability;
pub mod rbdo;
pub mod refine;
pub mod reliability;
pub mod rng;

pub use error::{Error, Result};
pub use exec::{Executor, LimitState, Serial};
pub use linalg::Matrix;
