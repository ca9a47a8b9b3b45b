//! Gaussian tail functions, level normalizations, thinning gaps and the
//! comparison bound for dependent sequences.

mod berman;
mod level;

pub use berman::{berman_bound, berman_bound_for_model, condition_report, rho_tail, BoundReport};
pub use level::{
    cluster_gap, cluster_gap_from_tail, level_asymptotic, level_exact, ClusterScale, LevelMode, LevelSchedule,
    Normalization,
};

use libm::erfc;

use crate::error::{invalid, Result};
use crate::numeric::LN_SQRT_2PI;

/// `sqrt(2 / (pi e))`, the leading constant of the Binomial-Poisson L1 distance
/// in units of the success probability.
pub const PROKHOROV_LAMBDA1: f64 = 0.483_941_449_038_286_7;

/// Standard normal upper tail `p(u) = 1 - Phi(u)`.
pub fn gauss_upper_tail(u: f64) -> Result<f64> {
    if !u.is_finite() {
        return Err(invalid(format!("tail argument must be finite, got {u}")));
    }
    Ok(0.5 * erfc(u * std::f64::consts::FRAC_1_SQRT_2))
}

/// Mills-ratio surrogate `Psi(u) = exp(-u^2/2) / (sqrt(2 pi) u)`, `u > 0`.
pub fn mills_tail(u: f64) -> Result<f64> {
    Ok(ln_mills_tail(u)?.exp())
}

pub(crate) fn ln_mills_tail(u: f64) -> Result<f64> {
    if !(u.is_finite() && u > 0.0) {
        return Err(invalid(format!("mills_tail needs a finite u > 0, got {u}")));
    }
    Ok(-0.5 * u * u - u.ln() - LN_SQRT_2PI)
}

/// Leading term `lambda1 * p(u)` of the Binomial-Poisson distance at level `u`.
///
/// Only the leading term is returned; the `O(min(1, (np)^(-1/2)))` correction
/// has no explicit constant and is reported separately by the experiments.
pub fn prokhorov_leading(u: f64) -> Result<f64> {
    if !(u.is_finite() && u > 0.0) {
        return Err(invalid(format!("prokhorov_leading needs a finite u > 0, got {u}")));
    }
    Ok(PROKHOROV_LAMBDA1 * gauss_upper_tail(u)?)
}
