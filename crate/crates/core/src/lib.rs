//! Persistent sampling and sequential Monte Carlo samplers for tempered
//! posteriors, with the targets and estimators used to compare them.

pub mod ensemble;
pub mod error;
pub mod estimators;
pub mod kernels;
pub mod numeric;
pub mod rng;
pub mod samplers;
pub mod targets;

pub use error::{Error, Result};
