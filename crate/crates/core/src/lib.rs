//! Computational toolkit for level-raising censuses of a fixed mod-p
//! residual Galois representation.

pub mod arith;
pub mod census;
pub mod config;
pub mod error;
pub mod frobenius;
pub mod gl2_density;
pub mod levels;
pub mod local_cohomology;
pub mod omega;
pub mod report;
pub mod stability;

pub use error::{Error, Result};
