//! Mean-square dynamics, cutoff time scales and mixing times for multivariate
//! geometric Brownian motion
//!
//! ```text
//! dX_t = A X_t dt + B X_t ∘ dW_t,   X_0 = x
//! ```
//!
//! with commuting or first-order non-commuting coefficient matrices, together
//! with a Monte Carlo oracle for `E|X_t|²`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commutative;
pub mod config;
pub mod cubic;
pub mod error;
pub mod hypotheses;
pub mod linalg;
pub mod mixing;
pub mod noncommutative;
pub mod schedule;
pub mod simulate;
pub mod spectral;
pub mod system;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use system::GbmSystem;
