//! Parametric covariance models for zero-mean unit-variance stationary
//! Gaussian sequences.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Covariance function `r(k)` of a stationary sequence, with `r(0) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceModel {
    /// `r(k) = 0` for `k >= 1`.
    Independent,
    /// `r(k) = rho0^k`.
    Geometric { rho0: f64 },
    /// `r(k) = c (1 + k)^(-beta)`.
    PowerDecay { c: f64, beta: f64 },
    /// `r(1..=m)` listed explicitly.
    Table {
        values: Vec<f64>,
        #[serde(default)]
        zero_beyond: bool,
    },
}

impl CovarianceModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            CovarianceModel::Independent => Ok(()),
            CovarianceModel::Geometric { rho0 } => {
                if rho0.is_finite() && rho0.abs() < 1.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("geometric rho0 must lie in (-1, 1), got {rho0}")))
                }
            }
            CovarianceModel::PowerDecay { c, beta } => {
                if !(c.is_finite() && c.abs() < 1.0) {
                    Err(invalid(format!("power_decay c must lie in (-1, 1), got {c}")))
                } else if !(beta.is_finite() && *beta > 0.0) {
                    Err(invalid(format!("power_decay beta must be positive, got {beta}")))
                } else {
                    Ok(())
                }
            }
            CovarianceModel::Table { values, .. } => {
                for (i, v) in values.iter().enumerate() {
                    if !v.is_finite() || v.abs() >= 1.0 {
                        return Err(Error::CorrelationOutOfRange { lag: i as u64 + 1, value: *v });
                    }
                }
                Ok(())
            }
        }
    }

    /// `r(k)`; lag 0 is always 1.
    pub fn covariance(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        Ok(match self {
            CovarianceModel::Independent => 0.0,
            CovarianceModel::Geometric { rho0 } => {
                if k > i32::MAX as u64 {
                    0.0
                } else {
                    rho0.powi(k as i32)
                }
            }
            CovarianceModel::PowerDecay { c, beta } => c * (1.0 + k as f64).powf(-beta),
            CovarianceModel::Table { values, zero_beyond } => match values.get(k as usize - 1) {
                Some(v) => *v,
                None if *zero_beyond => 0.0,
                None => return Err(Error::TableOverrun { lag: k, len: values.len() }),
            },
        })
    }

    /// Whether `r(k)` is defined for every lag.
    pub fn defined_everywhere(&self) -> bool {
        !matches!(self, CovarianceModel::Table { zero_beyond: false, .. })
    }

    pub fn is_independent(&self) -> bool {
        match self {
            CovarianceModel::Independent => true,
            CovarianceModel::Table { values, zero_beyond: true } => values.iter().all(|v| *v == 0.0),
            _ => false,
        }
    }
}

/// Materializes `r(0..m)`.
pub fn covariance_values(model: &CovarianceModel, m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(invalid("covariance_values needs m >= 1"));
    }
    model.validate()?;
    (0..m as u64).map(|k| model.covariance(k)).collect()
}
