//! Numerical laboratory for Poisson and cluster-Poisson approximations of the
//! number of level exceedances by stationary Gaussian sequences.
//!
//! - [`tail`]: Gaussian tails, level normalizations, thinning gaps, the
//!   comparison bound for dependent sequences and its condition checks.
//! - [`sim`]: stationary Gaussian paths by circulant embedding.
//! - [`process`]: exceedance counting, cluster thinning and decomposition,
//!   Poisson reference samplers.
//! - [`distance`]: exact and empirical L1 variation distances.
//! - [`harness`]: reproducible experiments with CSV output.

// Reference constants are quoted with every digit the oracle produced.
#![allow(clippy::excessive_precision)]

pub mod distance;
pub mod error;
pub mod harness;
pub mod model;
pub mod numeric;
pub mod process;
pub mod sim;
pub mod tail;

pub use error::{Error, Result};
pub use model::{covariance_values, CovarianceModel};
