//! Phase retrieval from magnitude-only measurements.
//!
//! The crate provides two perturbed amplitude losses (`pam1`, `pam2`) together
//! with the classical baselines, plain gradient descent from a random start,
//! spectral initialization, a population-level "landscape laboratory" built on
//! deterministic quadrature, and an experiment harness driven by the `pamret`
//! binary.
//!
//! ```
//! use pamret::signal_models::{sample_gaussian_real, Signal};
//! use pamret::objectives::{EvalContext, LossModel, loss};
//!
//! let x = Signal::Real(vec![1.0, -2.0, 0.5]);
//! let ens = sample_gaussian_real(3, 24, 7).unwrap().observe(&x).unwrap();
//! let ctx = EvalContext::new(LossModel::Pam2 { beta: 1.0 }, &ens).unwrap();
//! assert!(loss(&ctx, &x).unwrap() < 1e-24);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod error;
pub mod harness;
pub mod landscape;
pub mod objectives;
pub mod rng;
pub mod signal_models;
pub mod solvers;

pub use error::{Error, Result};
