use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{covariance_values, CovarianceModel};
use crate::numeric::CompensatedSum;

/// Comparison bound between a dependent Gaussian vector and its independent
/// counterpart on threshold events:
///
/// `(1/pi) sum_{k=1}^{n} (n-k) |r(k)| / sqrt(1 - r(k)^2) exp(-u^2 / (1 + r(k)))`.
///
/// `lags[k - 1]` holds `r(k)`; at least `n - 1` lags are required. The `k = n`
/// term vanishes.
pub fn berman_bound(lags: &[f64], n: u64, u: f64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("berman_bound needs n >= 1"));
    }
    if !u.is_finite() {
        return Err(invalid(format!("level must be finite, got {u}")));
    }
    let terms = (n - 1) as usize;
    if lags.len() < terms {
        return Err(invalid(format!("berman_bound needs {terms} lags, got {}", lags.len())));
    }
    let u2 = u * u;
    let mut acc = CompensatedSum::new();
    for (i, &r) in lags[..terms].iter().enumerate() {
        let k = i as u64 + 1;
        if r.is_nan() || r.abs() >= 1.0 {
            return Err(Error::CorrelationOutOfRange { lag: k, value: r });
        }
        if r == 0.0 {
            continue;
        }
        let one_minus_r2 = (1.0 - r) * (1.0 + r);
        acc.add((n - k) as f64 * r.abs() / one_minus_r2.sqrt() * (-u2 / (1.0 + r)).exp());
    }
    Ok(acc.value() / std::f64::consts::PI)
}

pub fn berman_bound_for_model(model: &CovarianceModel, n: u64, u: f64) -> Result<f64> {
    if n <= 1 {
        return berman_bound(&[], n, u);
    }
    let r = covariance_values(model, n as usize)?;
    berman_bound(&r[1..], n, u)
}

/// `rho(k) = sup_{l >= k} |r(l)|`.
///
/// Built-in parametric models are monotone in `|r|` from lag 1 on. Tables
/// take the maximum over stored lags `>= k`; a lag past the end is 0 with
/// `zero_beyond` and an error otherwise.
pub fn rho_tail(model: &CovarianceModel, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(invalid("rho_tail is defined for k >= 1"));
    }
    model.validate()?;
    match model {
        CovarianceModel::Independent => Ok(0.0),
        CovarianceModel::Geometric { .. } | CovarianceModel::PowerDecay { .. } => Ok(model.covariance(k)?.abs()),
        CovarianceModel::Table { values, zero_beyond } => {
            if k as usize > values.len() {
                return if *zero_beyond { Ok(0.0) } else { Err(Error::TableOverrun { lag: k, len: values.len() }) };
            }
            Ok(values[k as usize - 1..].iter().fold(0.0f64, |m, v| m.max(v.abs())))
        }
    }
}

/// Finite-window diagnostics for the conditions under which the comparison
/// bound vanishes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: u64,
    pub u: f64,
    pub berman_sum: f64,
    pub rho1: f64,
    pub gamma: f64,
    /// `max |r(k)| ln k` over `k in [k0, k_max]`.
    pub log_cond_value: f64,
    /// `max |r(k)| k^(1 - rho(1))` over `k in [k0, k_max]`.
    pub power_cond_value: f64,
    pub k0: u64,
    pub k_max: u64,
    /// `sqrt(1 - rho(1))`, the level-ratio threshold of the lemma statement.
    pub threshold_stated: f64,
    /// `sqrt((1 + rho(1)) / 2)`, the threshold the proof's exponent count needs.
    pub threshold_proof: f64,
    /// `u / sqrt(2 ln n)`.
    pub level_ratio: f64,
    pub above_stated: bool,
    pub above_proof: bool,
    /// `rho(1) >= 1/2`, where the remark that the lower bound forces
    /// `sup |r(k)| < 1/2` is in tension with both thresholds.
    pub sup_half_tension: bool,
}

pub fn condition_report(model: &CovarianceModel, n: u64, u: f64, k_max: u64) -> Result<BoundReport> {
    if k_max < 2 {
        return Err(invalid(format!("condition_report needs k_max >= 2, got {k_max}")));
    }
    if n < 2 {
        return Err(invalid(format!("condition_report needs n >= 2, got {n}")));
    }
    let rho1 = rho_tail(model, 1)?;
    let gamma = 1.0 - rho1;
    let k0 = k_max.div_ceil(2);
    let mut log_cond_value = 0.0f64;
    let mut power_cond_value = 0.0f64;
    for k in k0..=k_max {
        let r = model.covariance(k)?.abs();
        log_cond_value = log_cond_value.max(r * (k as f64).ln());
        power_cond_value = power_cond_value.max(r * (k as f64).powf(gamma));
    }
    let threshold_stated = gamma.sqrt();
    let threshold_proof = (0.5 * (1.0 + rho1)).sqrt();
    let level_ratio = u / (2.0 * (n as f64).ln()).sqrt();
    let berman_sum = berman_bound_for_model(model, n, u)?;
    Ok(BoundReport {
        n,
        u,
        berman_sum,
        rho1,
        gamma,
        log_cond_value,
        power_cond_value,
        k0,
        k_max,
        threshold_stated,
        threshold_proof,
        level_ratio,
        above_stated: level_ratio > threshold_stated,
        above_proof: level_ratio > threshold_proof,
        sup_half_tension: rho1 >= 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_correlation_gives_zero() {
        assert_eq!(berman_bound(&[0.0; 99], 100, 3.0).unwrap(), 0.0);
        assert_eq!(berman_bound(&[], 1, 3.0).unwrap(), 0.0);
        assert_eq!(berman_bound_for_model(&CovarianceModel::Independent, 1000, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn single_term() {
        for (rho, u) in [(0.3, 2.0), (0.9, 1.0), (0.01, 4.0)] {
            let want = rho / (1.0f64 - rho * rho).sqrt() * (-u * u / (1.0 + rho)).exp() / std::f64::consts::PI;
            let got = berman_bound(&[rho], 2, u).unwrap();
            assert!((got - want).abs() <= 1e-15 * want);
        }
    }

    #[test]
    fn names_offending_lag() {
        let err = berman_bound(&[0.5, 0.2, 1.0], 4, 2.0).unwrap_err();
        assert!(matches!(err, Error::CorrelationOutOfRange { lag: 3, .. }));
        assert!(berman_bound(&[0.5, -1.0], 3, 2.0).is_err());
        // lags beyond n - 1 are not inspected
        assert!(berman_bound(&[0.5, 1.5], 2, 2.0).is_ok());
    }

    #[test]
    fn needs_enough_lags() {
        assert!(berman_bound(&[0.1], 5, 2.0).is_err());
    }

    #[test]
    fn decreasing_along_power_scale() {
        use crate::tail::{level_exact, LevelSchedule, Normalization};
        let model = CovarianceModel::PowerDecay { c: 0.2, beta: 1.0 };
        let mut last = f64::INFINITY;
        for n in [1_000u64, 10_000, 100_000] {
            let u = level_exact(&LevelSchedule::power(n, 1.0, 0.9, 1.0), Normalization::Psi).unwrap();
            let b = berman_bound_for_model(&model, n, u).unwrap();
            assert!(b < last, "n = {n}: {b} !< {last}");
            last = b;
        }
    }

    #[test]
    fn rho_tail_examples() {
        assert_eq!(rho_tail(&CovarianceModel::Independent, 1).unwrap(), 0.0);
        assert_eq!(rho_tail(&CovarianceModel::Geometric { rho0: 0.5 }, 2).unwrap(), 0.25);
        let t = CovarianceModel::Table { values: vec![0.9, 0.2, 0.4], zero_beyond: false };
        assert_eq!(rho_tail(&t, 2).unwrap(), 0.4);
        assert_eq!(rho_tail(&t, 1).unwrap(), 0.9);
        assert!(matches!(rho_tail(&t, 4), Err(Error::TableOverrun { .. })));
        let tz = CovarianceModel::Table { values: vec![0.9, 0.2, 0.4], zero_beyond: true };
        assert_eq!(rho_tail(&tz, 4).unwrap(), 0.0);
        assert_eq!(rho_tail(&CovarianceModel::PowerDecay { c: -0.4, beta: 1.0 }, 1).unwrap(), 0.2);
    }

    #[test]
    fn geometric_envelope_with_half_ratio() {
        // 0.5 * 2^-k at k = 2, written as a table
        let values: Vec<f64> = (1..=20).map(|k| 0.5 * 0.5f64.powi(k)).collect();
        let t = CovarianceModel::Table { values, zero_beyond: true };
        assert_eq!(rho_tail(&t, 2).unwrap(), 0.125);
    }

    #[test]
    fn independent_report() {
        let r = condition_report(&CovarianceModel::Independent, 1000, 3.0, 100).unwrap();
        assert_eq!(r.log_cond_value, 0.0);
        assert_eq!(r.power_cond_value, 0.0);
        assert_eq!(r.threshold_stated, 1.0);
        assert!((r.threshold_proof - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(r.berman_sum, 0.0);
        assert_eq!(r.k0, 50);
    }

    #[test]
    fn thresholds_coincide_at_one_third() {
        let r = condition_report(&CovarianceModel::Geometric { rho0: 1.0 / 3.0 }, 100, 3.0, 10).unwrap();
        let want = (2.0f64 / 3.0).sqrt();
        assert!((r.threshold_stated - want).abs() < 1e-15);
        assert!((r.threshold_proof - want).abs() < 1e-15);
    }

    #[test]
    fn thresholds_split_at_one_half() {
        let r = condition_report(&CovarianceModel::Geometric { rho0: 0.5 }, 100, 3.0, 10).unwrap();
        assert!((r.threshold_stated - 0.707_106_781_186_547_5).abs() < 1e-15);
        assert!((r.threshold_proof - 0.866_025_403_784_438_6).abs() < 1e-15);
        assert!(r.sup_half_tension);
        assert!((r.level_ratio - 3.0 / (2.0 * 100f64.ln()).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn condition_window_proxies() {
        let m = CovarianceModel::PowerDecay { c: 0.3, beta: 2.0 };
        let r = condition_report(&m, 100, 3.0, 10).unwrap();
        let want_log = (5..=10).map(|k| 0.3 * (1.0 + k as f64).powi(-2) * (k as f64).ln()).fold(0.0, f64::max);
        assert!((r.log_cond_value - want_log).abs() < 1e-15);
        assert!(condition_report(&m, 100, 3.0, 1).is_err());
    }

    proptest! {
        #[test]
        // For r < 0 the exponential factor shrinks as |r| grows, so the
        // monotonicity is only termwise for nonnegative correlations.
        fn monotone_in_each_correlation(
            lags in proptest::collection::vec(0.0f64..0.95, 1..40),
            idx in 0usize..40,
            bump in 0.0f64..0.04,
            u in 0.5f64..4.0,
        ) {
            let n = lags.len() as u64 + 1;
            let base = berman_bound(&lags, n, u).unwrap();
            prop_assert!(base >= 0.0);
            let i = idx % lags.len();
            let mut bigger = lags.clone();
            bigger[i] += bump;
            let bumped = berman_bound(&bigger, n, u).unwrap();
            prop_assert!(bumped >= base * (1.0 - 1e-12), "{} < {}", bumped, base);
        }

        #[test]
        fn scaling_to_zero_vanishes(lags in proptest::collection::vec(-0.95f64..0.95, 1..40), u in 0.0f64..5.0) {
            let zeros: Vec<f64> = lags.iter().map(|r| r * 0.0).collect();
            prop_assert_eq!(berman_bound(&zeros, zeros.len() as u64 + 1, u).unwrap(), 0.0);
        }
    }
}
