//! Stochastic-gradient robust design optimization of an FFD-parameterized
//! airfoil under Reynolds-number and model-form uncertainty.
//!
//! The pipeline per optimizer iteration: draw `n` uncertain inputs
//! ([`uncertainty`]), evaluate lift and drag with gradients on the deformed
//! shape ([`geometry`], [`aero`]), form the mean-plus-variance penalized
//! estimate ([`estimators`]) and take an AdaGrad or SGD step
//! ([`optimizers`]). [`harness`] wraps campaigns, the post-hoc
//! parameter-space study and table assembly behind a CLI.

pub mod aero;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod harness;
pub mod optimizers;
pub mod uncertainty;

pub use error::{Error, Result};
