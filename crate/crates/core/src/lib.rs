//! Euler-characteristic obstructions to maximum-likelihood degrees of
//! very affine varieties, computed numerically by homotopy continuation.

pub mod critsys;
pub mod error;
pub mod job;
pub mod linalg;
pub mod mldeg;
pub mod obstruction;
pub mod parse;
pub mod poly;
pub mod report;
pub mod rng;
pub mod tracker;

pub use error::{Error, Result};
