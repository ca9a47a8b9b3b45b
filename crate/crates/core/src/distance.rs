//! L1 variation distances between count laws.
//!
//! Distances here are the plain L1 sum `sum_k |a(k) - b(k)|`, twice the usual
//! total-variation distance, and always lie in `[0, 2]`.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::numeric::{deviance, stirling_error, CompensatedSum, LN_SQRT_2PI};

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(format!("probability must lie in [0, 1], got {p}")))
    }
}

/// `ln P(Binomial(n, p) = k)` by the saddle-point (Loader) expansion.
pub fn ln_binomial_pmf(n: u64, p: f64, k: u64) -> Result<f64> {
    check_probability(p)?;
    if k > n {
        return Err(invalid(format!("binomial support is 0..={n}, got k = {k}")));
    }
    Ok(ln_binomial_unchecked(n, p, k))
}

fn ln_binomial_unchecked(n: u64, p: f64, k: u64) -> f64 {
    let q = 1.0 - p;
    if p == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if k == 0 {
        return nf * (-p).ln_1p();
    }
    if k == n {
        return nf * p.ln();
    }
    let kf = k as f64;
    let rest = (n - k) as f64;
    let lc = stirling_error(nf) - stirling_error(kf) - stirling_error(rest) - deviance(kf, nf * p) - deviance(rest, nf * q);
    lc + 0.5 * (nf / (kf * rest)).ln() - LN_SQRT_2PI
}

pub fn binomial_pmf(n: u64, p: f64, k: u64) -> Result<f64> {
    Ok(ln_binomial_pmf(n, p, k)?.exp())
}

/// `ln P(Poisson(mean) = k)` by the saddle-point expansion.
pub fn ln_poisson_pmf(mean: f64, k: u64) -> Result<f64> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(invalid(format!("Poisson mean must be finite and nonnegative, got {mean}")));
    }
    Ok(ln_poisson_unchecked(mean, k))
}

fn ln_poisson_unchecked(mean: f64, k: u64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if k == 0 {
        return -mean;
    }
    let kf = k as f64;
    -stirling_error(kf) - deviance(kf, mean) - 0.5 * kf.ln() - LN_SQRT_2PI
}

pub fn poisson_pmf(mean: f64, k: u64) -> Result<f64> {
    Ok(ln_poisson_pmf(mean, k)?.exp())
}

/// Chernoff bound on `P(Poisson(mean) >= k)` for `k >= mean`, or on
/// `P(Poisson(mean) <= k)` for `k <= mean`.
fn poisson_tail_bound(mean: f64, k: f64) -> f64 {
    (-deviance(k, mean)).exp()
}

/// Chernoff bound `exp(-n KL(k/n || p))` on the binomial tail beyond `k`.
fn binomial_tail_bound(n: u64, p: f64, k: f64) -> f64 {
    let nf = n as f64;
    (-(deviance(k, nf * p) + deviance(nf - k, nf * (1.0 - p)))).exp()
}

const TAIL_BOUND_TARGET: f64 = 1e-17;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BinomialPoissonDistance {
    /// `sum_k |Bin(n,p)(k) - Poi(np)(k)|` over all `k >= 0`.
    pub l1: f64,
    /// The same sum cut at `k = n`, i.e. without the Poisson mass above `n`.
    pub l1_truncated: f64,
    /// `P(Poisson(np) > n)`.
    pub poisson_mass_above_n: f64,
    /// Bound on the probability mass left outside the summation window.
    pub error_bound: f64,
    pub window_lo: u64,
    pub window_hi: u64,
}

/// L1 distance between Binomial(n, p) and Poisson(np).
pub fn variation_distance_binomial_poisson(n: u64, p: f64) -> Result<f64> {
    Ok(binomial_poisson_distance(n, p)?.l1)
}

/// [`variation_distance_binomial_poisson`] with the truncated sum, the Poisson
/// overflow mass and the window error bound.
///
/// The sum runs over a window of about 12 standard deviations around `np`,
/// widened until Chernoff bounds on the mass outside fall below `1e-17`.
pub fn binomial_poisson_distance(n: u64, p: f64) -> Result<BinomialPoissonDistance> {
    check_probability(p)?;
    if n == 0 {
        return Err(invalid("binomial_poisson_distance needs n >= 1"));
    }
    let nf = n as f64;
    let mean = nf * p;
    if mean == 0.0 {
        return Ok(BinomialPoissonDistance {
            l1: 0.0,
            l1_truncated: 0.0,
            poisson_mass_above_n: 0.0,
            error_bound: 0.0,
            window_lo: 0,
            window_hi: 0,
        });
    }
    let sd = mean.max(1.0).sqrt();

    let mut lo = (mean - 12.0 * sd - 10.0).floor().max(0.0);
    let mut step = sd.max(1.0);
    let lower_mass = |k: f64| {
        let b = if k <= mean && k >= 0.0 { binomial_tail_bound(n, p, k) } else { 1.0 };
        poisson_tail_bound(mean, k) + b
    };
    while lo > 0.0 && lower_mass(lo - 1.0) > TAIL_BOUND_TARGET {
        lo = (lo - step).max(0.0);
        step *= 2.0;
    }
    let mut hi = (mean + 12.0 * sd + 10.0).ceil();
    let mut step = sd.max(1.0);
    let upper_mass = |k: f64| {
        let b = if k <= nf { binomial_tail_bound(n, p, k) } else { 0.0 };
        poisson_tail_bound(mean, k) + b
    };
    while upper_mass(hi + 1.0) > TAIL_BOUND_TARGET {
        hi += step;
        step *= 2.0;
    }

    let mut error_bound = 0.0;
    if lo > 0.0 {
        error_bound += lower_mass(lo - 1.0);
    }
    error_bound += upper_mass(hi + 1.0);

    let lo = lo as u64;
    let hi = hi as u64;
    let mut inside = CompensatedSum::new();
    let mut above = CompensatedSum::new();
    for k in lo..=hi {
        let pois = ln_poisson_unchecked(mean, k).exp();
        if k <= n {
            let bin = ln_binomial_unchecked(n, p, k).exp();
            inside.add((bin - pois).abs());
        } else {
            above.add(pois);
        }
    }
    let poisson_mass_above_n = above.value();
    let l1_truncated = inside.value();
    Ok(BinomialPoissonDistance {
        l1: l1_truncated + poisson_mass_above_n,
        l1_truncated,
        poisson_mass_above_n,
        error_bound,
        window_lo: lo,
        window_hi: hi,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Origin {
    ExactBinomial { n: u64, p: f64 },
    ExactPoisson { mean: f64 },
    Empirical { replications: u64 },
}

/// Probability mass function on `0..=support_max` plus the mass above it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountDistribution {
    pub pmf: Vec<f64>,
    pub tail_mass: f64,
    pub origin: Origin,
}

impl CountDistribution {
    pub fn support_max(&self) -> usize {
        self.pmf.len().saturating_sub(1)
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        CompensatedSum::from_iter(self.pmf.iter().copied().chain([self.tail_mass])).value()
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// Binomial(n, p) over its full support.
    pub fn binomial(n: u64, p: f64) -> Result<Self> {
        check_probability(p)?;
        if n > 100_000_000 {
            return Err(invalid(format!("full binomial table for n = {n} is too large")));
        }
        let pmf = (0..=n).map(|k| ln_binomial_unchecked(n, p, k).exp()).collect();
        Ok(CountDistribution { pmf, tail_mass: 0.0, origin: Origin::ExactBinomial { n, p } })
    }

    /// Poisson(mean) on `0..=support_max`, the rest summed into `tail_mass`.
    pub fn poisson(mean: f64, support_max: usize) -> Result<Self> {
        ln_poisson_pmf(mean, 0)?;
        let pmf: Vec<f64> = (0..=support_max as u64).map(|k| ln_poisson_unchecked(mean, k).exp()).collect();
        let mut tail = CompensatedSum::new();
        let mut k = support_max as u64 + 1;
        loop {
            let t = ln_poisson_unchecked(mean, k).exp();
            tail.add(t);
            if k as f64 > mean && (t == 0.0 || t < 1e-20 * tail.value()) {
                break;
            }
            k += 1;
        }
        Ok(CountDistribution { pmf, tail_mass: tail.value(), origin: Origin::ExactPoisson { mean } })
    }

    /// Poisson(mean) on a support wide enough that the tail mass is negligible
    /// (below `1e-16`) and covering at least `0..=min_support`.
    pub fn poisson_covering(mean: f64, min_support: usize) -> Result<Self> {
        ln_poisson_pmf(mean, 0)?;
        let mut hi = (mean + 12.0 * mean.max(1.0).sqrt() + 10.0).ceil() as usize;
        while poisson_tail_bound(mean, hi as f64 + 1.0) > 1e-16 {
            hi += 10 + hi / 4;
        }
        Self::poisson(mean, hi.max(min_support))
    }
}

/// Normalized histogram of observed counts.
pub fn empirical_distribution(counts: &[u64]) -> Result<CountDistribution> {
    if counts.is_empty() {
        return Err(invalid("empirical_distribution needs at least one count"));
    }
    let max = *counts.iter().max().expect("nonempty") as usize;
    let mut hist = vec![0u64; max + 1];
    for &c in counts {
        hist[c as usize] += 1;
    }
    Ok(from_histogram(&hist))
}

/// Normalizes an absolute-frequency histogram (trailing zeros are trimmed).
pub fn from_histogram(hist: &[u64]) -> CountDistribution {
    let reps: u64 = hist.iter().sum();
    let last = hist.iter().rposition(|&h| h > 0).unwrap_or(0);
    let pmf = hist[..=last].iter().map(|&h| if reps == 0 { 0.0 } else { h as f64 / reps as f64 }).collect();
    CountDistribution { pmf, tail_mass: 0.0, origin: Origin::Empirical { replications: reps } }
}

/// `sum_k |a(k) - b(k)|` over the union of supports plus `|tail_a - tail_b|`.
pub fn variation_distance(a: &CountDistribution, b: &CountDistribution) -> f64 {
    let len = a.pmf.len().max(b.pmf.len());
    let mut acc: CompensatedSum = (0..len).map(|k| (a.prob(k) - b.prob(k)).abs()).collect();
    acc.add((a.tail_mass - b.tail_mass).abs());
    acc.value().clamp(0.0, 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn binomial_small_cases() {
        assert!((binomial_pmf(1, 0.3, 1).unwrap() - 0.3).abs() < 1e-16);
        assert!(rel(binomial_pmf(10, 0.5, 5).unwrap(), 252.0 / 1024.0) < 1e-14);
        assert!(binomial_pmf(3, 0.5, 4).is_err());
        assert!(binomial_pmf(3, 1.5, 1).is_err());
        assert_eq!(binomial_pmf(5, 0.0, 0).unwrap(), 1.0);
        assert_eq!(binomial_pmf(5, 1.0, 5).unwrap(), 1.0);
        assert_eq!(binomial_pmf(5, 1.0, 4).unwrap(), 0.0);
    }

    #[test]
    fn binomial_normalizes() {
        let total = compensated_total((0..=100).map(|k| binomial_pmf(100, 0.01, k).unwrap()));
        assert!((total - 1.0).abs() < 1e-12);
    }

    fn compensated_total(it: impl Iterator<Item = f64>) -> f64 {
        it.collect::<CompensatedSum>().value()
    }

    // 60-digit log-gamma evaluations
    #[test]
    fn binomial_large_n_reference() {
        let cases = [
            (1_000_000_000_000u64, 1e-9, 1000u64, 0.012_614_611_355_028_805_397),
            (1_000_000_000_000, 1e-9, 950, 0.003_629_619_063_491_641_028_6),
            (10_000_000_000, 1e-6, 10_000, 0.003_989_391_553_659_101_119_2),
            (10_000_000_000, 1e-6, 10_300, 0.000_045_647_428_474_781_718_188),
            (1000, 0.3, 280, 0.010_700_779_097_633_626_017),
            (100, 0.01, 0, 0.366_032_341_273_229_504_93),
            (1_000_000, 0.5, 500_000, 0.000_797_884_361_331_750_089_09),
        ];
        for (n, p, k, want) in cases {
            let got = binomial_pmf(n, p, k).unwrap();
            assert!(rel(got, want) <= 1e-10, "n={n} p={p} k={k}: {got:e} vs {want:e} ({:e})", rel(got, want));
        }
    }

    #[test]
    fn poisson_reference() {
        assert_eq!(poisson_pmf(0.0, 0).unwrap(), 1.0);
        assert_eq!(poisson_pmf(0.0, 3).unwrap(), 0.0);
        assert!(poisson_pmf(-1.0, 0).is_err());
        let cases = [
            (1.0, 0u64, 0.367_879_441_171_442_321_6),
            (1.0, 2, 0.183_939_720_585_721_160_8),
            (1e8, 100_000_000, 0.000_039_894_228_006_898_077_774),
            (1e8, 100_010_000, 0.000_024_196_265_916_438_021_567),
            (3.5, 7, 0.038_549_174_937_633_998_411),
            (1000.0, 900, 0.000_075_169_543_521_259_522_29),
            (1e-3, 3, 1.665_000_833_055_624_986_1e-10),
        ];
        for (m, k, want) in cases {
            let got = poisson_pmf(m, k).unwrap();
            assert!(rel(got, want) <= 1e-10, "mean={m} k={k}: {got:e} vs {want:e}");
        }
    }

    #[test]
    fn degenerate_distances() {
        assert_eq!(variation_distance_binomial_poisson(100, 0.0).unwrap(), 0.0);
        let d = variation_distance_binomial_poisson(1, 1.0).unwrap();
        assert!((d - 1.264_241_117_657_115_356_8).abs() < 1e-12, "{d}");
        assert!(variation_distance_binomial_poisson(10, -0.1).is_err());
        assert!(variation_distance_binomial_poisson(10, 1.1).is_err());
    }

    #[test]
    fn truncated_part_omits_poisson_overflow() {
        let d = binomial_poisson_distance(1, 1.0).unwrap();
        let e1 = (-1.0f64).exp();
        assert!((d.l1_truncated - (e1 + (1.0 - e1))).abs() < 1e-15);
        assert!((d.poisson_mass_above_n - (1.0 - 2.0 * e1)).abs() < 1e-15);
    }

    // mpmath windowed sums at p = 1e-6
    #[test]
    fn large_n_matches_high_precision_sum() {
        let cases = [
            (10_000_000u64, 4.889_617_765_355_32e-7),
            (100_000_000, 4.846_151_835_998_21e-7),
            (1_000_000_000, 4.839_412_531_132_73e-7),
            (10_000_000_000, 4.839_484_125_613_31e-7),
        ];
        for (n, want) in cases {
            let d = binomial_poisson_distance(n, 1e-6).unwrap();
            assert!(rel(d.l1, want) < 1e-6, "n={n}: {:e} vs {want:e}", d.l1);
            assert!(d.error_bound < 1e-15);
        }
    }

    #[test]
    fn ratio_is_bounded_by_one() {
        for (n, p) in [(100u64, 0.01), (1000, 0.05), (10_000, 0.001), (50, 0.5), (1_000_000, 1e-4)] {
            let d = variation_distance_binomial_poisson(n, p).unwrap();
            assert!(d / p <= 1.0, "n={n} p={p}: {}", d / p);
        }
    }

    #[test]
    fn empirical_histograms() {
        let d = empirical_distribution(&[0, 0, 1, 1]).unwrap();
        assert_eq!(d.pmf, vec![0.5, 0.5]);
        assert_eq!(d.origin, Origin::Empirical { replications: 4 });
        let point = empirical_distribution(&[3, 3, 3]).unwrap();
        assert_eq!(point.pmf, vec![0.0, 0.0, 0.0, 1.0]);
        assert!(empirical_distribution(&[]).is_err());
    }

    #[test]
    fn distance_extremes() {
        let a = empirical_distribution(&[0, 1, 1, 2]).unwrap();
        assert_eq!(variation_distance(&a, &a), 0.0);
        let x = empirical_distribution(&[0]).unwrap();
        let y = empirical_distribution(&[5]).unwrap();
        assert_eq!(variation_distance(&x, &y), 2.0);
    }

    #[test]
    fn poisson_tables_normalize() {
        for mean in [0.0, 0.3, 4.0, 900.0] {
            let d = CountDistribution::poisson(mean, 5).unwrap();
            assert!((d.total_mass() - 1.0).abs() <= 1e-12, "mean {mean}: {}", d.total_mass());
            let c = CountDistribution::poisson_covering(mean, 0).unwrap();
            assert!(c.tail_mass < 1e-15);
            assert!((c.total_mass() - 1.0).abs() <= 1e-12);
        }
        let b = CountDistribution::binomial(200, 0.3).unwrap();
        assert!((b.total_mass() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn table_distance_matches_windowed() {
        let (n, p) = (400u64, 0.02);
        let b = CountDistribution::binomial(n, p).unwrap();
        let q = CountDistribution::poisson(n as f64 * p, n as usize).unwrap();
        let direct = variation_distance(&b, &q);
        let windowed = variation_distance_binomial_poisson(n, p).unwrap();
        assert!((direct - windowed).abs() < 1e-13);
    }

    fn arb_distribution() -> impl Strategy<Value = CountDistribution> {
        (proptest::collection::vec(0.0f64..1.0, 1..12), 0.0f64..0.3).prop_map(|(w, tail)| {
            let s: f64 = w.iter().sum::<f64>() + 1e-9;
            let pmf = w.iter().map(|x| (1.0 - tail) * x / s).collect();
            CountDistribution { pmf, tail_mass: tail, origin: Origin::Empirical { replications: 1 } }
        })
    }

    proptest! {
        #[test]
        fn metric_properties(a in arb_distribution(), b in arb_distribution(), c in arb_distribution()) {
            let ab = variation_distance(&a, &b);
            prop_assert!((0.0..=2.0).contains(&ab));
            prop_assert_eq!(ab, variation_distance(&b, &a));
            prop_assert!(ab <= variation_distance(&a, &c) + variation_distance(&c, &b) + 1e-12);
        }
    }
}
