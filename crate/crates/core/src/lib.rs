//! Robustness laboratory for quantum classifiers.
//!
//! Simulates quantum feature embeddings and variational classifiers, runs
//! classical and quantum adversarial attacks, and evaluates closed-form
//! Rademacher-complexity generalization bounds next to Monte-Carlo estimates
//! of the quantities they bound.

pub mod attacks;
pub mod bounds;
pub mod embeddings;
pub mod error;
pub mod experiments;
pub mod qmath;
pub mod model;
pub mod random;
pub mod selftest;
pub mod sim;
pub mod stats;
pub mod tolerances;

pub use error::{Error, Result};
