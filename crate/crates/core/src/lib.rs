//! Gaussian-Hermite moment invariants for multi-channel functions such as
//! color images and vector fields.

pub mod cli;
pub mod error;
pub mod field;
pub mod harness;
pub mod invgen;
pub mod inveval;
pub mod moments;

pub use error::{Error, Result};
