//! Binary search gradient optimization (BSG, also known as BiGrad).
//!
//! BSG keeps a per-coordinate search interval `[n, p]` whose endpoints are
//! assumed to carry a negative and a positive loss derivative respectively.
//! Every step asks a first-order inner optimizer (Adam by default) for an
//! update value `u`, moves the endpoint selected by the gradient sign to
//! `x - u`, re-seeds the opposite endpoint when the interval has collapsed,
//! and places the parameter at the interval midpoint.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`] and [`rng`]: a dense `f64` tensor and a seeded counter-based RNG.
//! - [`optim`]: inner optimizers (Adam, SGD, momentum, RMSProp) that return `u`
//!   instead of writing parameters.
//! - [`bsg`]: the BSG update, the bisection oracle and transcript tooling.
//! - [`models`]: logistic regression (softmax and sigmoid) and a two-hidden-layer
//!   ReLU MLP with analytic gradients, plus a finite-difference checker.
//! - [`data`]: IDX and sparse text loaders and synthetic problem generators.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bsg;
pub mod data;
mod error;
pub mod models;
pub mod optim;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use rng::RngState;
pub use tensor::Tensor;
