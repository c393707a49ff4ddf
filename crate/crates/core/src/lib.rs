//! Differential forms with values in a vector bundle, graded
//! integrability forms of almost-complex structures, and the functionals
//! and flows built from them on sampled charts.

pub mod calculus;
pub mod cli;
pub mod error;
pub mod exterior;
pub mod fixtures;
pub mod geometry;
pub mod integration;
pub mod oracle;
pub mod variational;

pub use error::{Error, Result};
