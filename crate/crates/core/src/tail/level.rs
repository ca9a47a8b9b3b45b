use serde::{Deserialize, Serialize};

use super::{gauss_upper_tail, ln_mills_tail};
use crate::error::{domain, invalid, Error, Result};

/// How the level `u` is tied to the sequence length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelMode {
    /// `n Psi(u) = lambda`.
    Natural,
    /// `n^a Psi(u) = c`, a medium level for `a < 1`.
    Power { a: f64, c: f64 },
    /// A fixed level.
    Explicit { u: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSchedule {
    pub n: u64,
    pub lambda: f64,
    pub mode: LevelMode,
}

/// Which tail function enters the normalization equation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Mills-ratio surrogate `Psi(u)`.
    #[default]
    Psi,
    /// Exact tail `p(u) = 1 - Phi(u)`.
    Tail,
}

impl LevelSchedule {
    pub fn natural(n: u64, lambda: f64) -> Self {
        LevelSchedule { n, lambda, mode: LevelMode::Natural }
    }

    pub fn power(n: u64, lambda: f64, a: f64, c: f64) -> Self {
        LevelSchedule { n, lambda, mode: LevelMode::Power { a, c } }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid(format!("level schedule needs n >= 2, got {}", self.n)));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        match self.mode {
            LevelMode::Natural => Ok(()),
            LevelMode::Power { a, c } => {
                if !(a > 0.0 && a <= 1.0) {
                    Err(invalid(format!("power scale needs 0 < a <= 1, got {a}")))
                } else if !(c.is_finite() && c > 0.0) {
                    Err(invalid(format!("power scale needs c > 0, got {c}")))
                } else {
                    Ok(())
                }
            }
            LevelMode::Explicit { u } => {
                if u.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("explicit level must be finite"))
                }
            }
        }
    }

    /// `(ln of the length scale, target intensity)`: `(ln n, lambda)` or `(a ln n, c)`.
    fn scale_and_target(&self) -> Option<(f64, f64)> {
        let ln_n = (self.n as f64).ln();
        match self.mode {
            LevelMode::Natural => Some((ln_n, self.lambda)),
            LevelMode::Power { a, c } => Some((a * ln_n, c)),
            LevelMode::Explicit { .. } => None,
        }
    }
}

/// Solves the level equation `n Psi(u) = lambda` (or `n^a Psi(u) = c`, or the
/// same with the exact tail) for `u > 0`.
pub fn level_exact(schedule: &LevelSchedule, normalization: Normalization) -> Result<f64> {
    schedule.validate()?;
    let Some((ln_scale, target)) = schedule.scale_and_target() else {
        let LevelMode::Explicit { u } = schedule.mode else { unreachable!() };
        return Ok(u);
    };
    let ln_target = target.ln();

    // log-residual ln(scale * F(u) / target), strictly decreasing in u
    let residual = |u: f64| -> f64 {
        match normalization {
            Normalization::Psi => ln_scale + ln_mills_tail(u).unwrap_or(f64::INFINITY) - ln_target,
            Normalization::Tail => {
                let p = gauss_upper_tail(u).unwrap_or(0.0);
                ln_scale + p.ln() - ln_target
            }
        }
    };

    let mut lo;
    match normalization {
        Normalization::Psi => {
            lo = 1.0;
            let mut tries = 0;
            while residual(lo) <= 0.0 {
                lo *= 0.5;
                tries += 1;
                if tries > 1000 || lo == 0.0 {
                    return Err(domain("level bracket underflow"));
                }
            }
        }
        Normalization::Tail => {
            let max_lambda = 0.5 * ln_scale.exp();
            if residual(0.0) <= 0.0 {
                return Err(Error::NoLevelRoot { lambda: target, max_lambda });
            }
            lo = 0.0;
        }
    }
    let mut hi = lo.max(1.0);
    while residual(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(domain("level bracket overflow"));
        }
    }

    let mut f_lo = residual(lo);
    let mut f_hi = residual(hi);

    // bisection down to a narrow bracket
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        let f_mid = residual(mid);
        if f_mid > 0.0 {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }

    // secant refinement, safeguarded by the bracket
    let (mut best, mut f_best) = if f_lo.abs() < f_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
    for _ in 0..100 {
        if f_best == 0.0 || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let mut x = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = residual(x);
        if fx.abs() < f_best.abs() {
            best = x;
            f_best = fx;
        }
        if fx > 0.0 {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
        if fx.abs() <= 1e-15 {
            break;
        }
    }
    Ok(best)
}

/// Two-term asymptotic solution of the natural (or power-scale) normalization.
pub fn level_asymptotic(schedule: &LevelSchedule) -> Result<f64> {
    schedule.validate()?;
    if schedule.n < 16 {
        return Err(domain(format!("expansion needs log log n > 0; n = {} < 16", schedule.n)));
    }
    let ln_n = (schedule.n as f64).ln();
    let ln_ln_n = ln_n.ln();
    let half_pi = std::f64::consts::FRAC_PI_2;
    Ok(match schedule.mode {
        LevelMode::Natural => {
            let s = (2.0 * ln_n).sqrt();
            s - (0.5 * ln_ln_n + (schedule.lambda * half_pi.sqrt()).ln()) / s
        }
        LevelMode::Power { a, c } => {
            let s = (2.0 * a * ln_n).sqrt();
            s - (0.5 * ln_ln_n + (c * (a * half_pi).sqrt()).ln()) / s
        }
        LevelMode::Explicit { u } => u,
    })
}

/// Thinning gap and the derived quantities of the cluster scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClusterScale {
    /// Gap `l` in index units.
    pub l: u64,
    /// `n (1-p)^l p` at the chosen integer `l`.
    pub achieved_lambda: f64,
    /// `l / ln(np)`.
    pub n1: f64,
    /// `(1-p)^l p`.
    pub p_ul: f64,
    /// Tail probability at the level.
    pub p: f64,
    /// `np <= lambda`: thinning is not needed and `l = 0`.
    pub no_thinning: bool,
}

impl ClusterScale {
    /// `|n1 p - 1|`, the distance from the inner natural normalization.
    pub fn inner_normalization_gap(&self) -> f64 {
        (self.n1 * self.p - 1.0).abs()
    }
}

/// Smallest integer gap `l` with `n (1-p)^l p` nearest to `lambda`.
pub fn cluster_gap(n: u64, u: f64, lambda: f64) -> Result<ClusterScale> {
    let p = gauss_upper_tail(u)?;
    cluster_gap_from_tail(n, p, lambda)
}

/// [`cluster_gap`] with the tail probability given directly.
pub fn cluster_gap_from_tail(n: u64, p: f64, lambda: f64) -> Result<ClusterScale> {
    if n == 0 {
        return Err(invalid("cluster_gap needs n >= 1"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("tail probability must lie in (0, 1), got {p}")));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    let np = n as f64 * p;
    let ln_q = (-p).ln_1p();
    if np <= lambda {
        return Ok(ClusterScale { l: 0, achieved_lambda: np, n1: 0.0, p_ul: p, p, no_thinning: true });
    }
    let l_real = (np / lambda).ln() / -ln_q;
    let l_round = round_half_down(l_real).max(0.0);
    if l_round >= 2f64.powi(63) {
        return Err(domain(format!("thinning gap {l_real:e} does not fit in 64 bits")));
    }
    let l = l_round as u64;
    let p_ul = (l as f64 * ln_q).exp() * p;
    Ok(ClusterScale { l, achieved_lambda: n as f64 * p_ul, n1: l as f64 / np.ln(), p_ul, p, no_thinning: false })
}

/// Nearest integer, ties toward the smaller value.
fn round_half_down(x: f64) -> f64 {
    (x - 0.5).ceil()
}
