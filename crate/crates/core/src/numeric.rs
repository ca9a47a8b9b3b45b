//! Small numerical kernels shared by the probability code: compensated
//! summation and the saddle-point pieces used for log-space pmfs.

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// `ln(sqrt(2 pi))`
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// ln(k!) - ((k + 1/2) ln k - k + ln sqrt(2 pi)) for k = 1..=15.
const STIRLING_ERROR_TABLE: [f64; 15] = [
    0.081_061_466_795_327_258_22,
    0.041_340_695_955_409_294_09,
    0.027_677_925_684_998_339_15,
    0.020_790_672_103_765_093_11,
    0.016_644_691_189_821_192_16,
    0.013_876_128_823_070_747_99,
    0.011_896_709_945_891_770_1,
    0.010_411_265_261_972_096_5,
    0.009_255_462_182_712_732_918,
    0.008_330_563_433_362_871_256,
    0.007_573_675_487_951_840_795,
    0.006_942_840_107_209_529_866,
    0.006_408_994_188_004_207_068,
    0.005_951_370_112_758_847_736,
    0.005_554_733_551_962_801_371,
];

/// Error of Stirling's formula for `ln(k!)`, for `k >= 1`.
pub fn stirling_error(k: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;

    if k <= 15.0 && k.fract() == 0.0 && k >= 1.0 {
        return STIRLING_ERROR_TABLE[k as usize - 1];
    }
    let kk = k * k;
    if k > 500.0 {
        (S0 - S1 / kk) / k
    } else if k > 80.0 {
        (S0 - (S1 - S2 / kk) / kk) / k
    } else if k > 35.0 {
        (S0 - (S1 - (S2 - S3 / kk) / kk) / kk) / k
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / kk) / kk) / kk) / kk) / k
    }
}

/// Deviance term `x ln(x / m) + m - x`, evaluated without cancellation when
/// `x` is close to `m`.
pub fn deviance(x: f64, m: f64) -> f64 {
    if x == 0.0 {
        return m;
    }
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut terms = vec![1.0e16];
        terms.extend(std::iter::repeat_n(1.0, 1000));
        terms.push(-1.0e16);
        assert_eq!(compensated_sum(terms), 1000.0);
    }

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (1..=100).map(|i| 1.0 / i as f64).collect();
        let whole = compensated_sum(xs.iter().copied());
        let mut a: CompensatedSum = xs[..37].iter().copied().collect();
        let b: CompensatedSum = xs[37..].iter().copied().collect();
        a.merge(&b);
        assert!((a.value() - whole).abs() < 1e-15);
    }

    #[test]
    fn stirling_error_is_continuous_across_branches() {
        // direct evaluation from ln_gamma at a point where it is still accurate
        let direct = |k: f64| {
            statrs::function::gamma::ln_gamma(k + 1.0) - ((k + 0.5) * k.ln() - k + LN_SQRT_2PI)
        };
        for k in [16.0, 20.0, 36.0, 50.0, 81.0, 200.0] {
            assert!((stirling_error(k) - direct(k)).abs() < 1e-13, "k = {k}");
        }
    }

    #[test]
    fn deviance_branches_agree() {
        for (x, m) in [(10.0f64, 10.5f64), (1e4, 1.0001e4), (3.0, 7.0), (1e10, 1e10 + 5.0)] {
            let naive = x * (x / m).ln() + m - x;
            let d = deviance(x, m);
            assert!(d >= 0.0);
            assert!((d - naive).abs() <= 1e-6 * (1.0 + naive.abs()), "{x} {m}: {d} vs {naive}");
        }
        assert_eq!(deviance(0.0, 2.5), 2.5);
        assert_eq!(deviance(4.0, 4.0), 0.0);
    }
}
