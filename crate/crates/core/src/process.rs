//! Exceedance point processes of a sampled path: counting, thinning to
//! cluster centers, cluster decomposition, and reference Poisson samplers.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::sim::{StreamKey, StreamRng};

/// Half-open index window `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexWindow {
    pub start: i64,
    pub end: i64,
}

impl IndexWindow {
    pub fn new(start: i64, end: i64) -> Self {
        IndexWindow { start, end }
    }

    pub fn full(len: usize) -> Self {
        IndexWindow { start: 0, end: len as i64 }
    }

    pub fn len(&self) -> usize {
        (self.end - self.start).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, len: usize) -> Result<(usize, usize)> {
        if self.start < 0 || self.start > self.end || self.end > len as i64 {
            return Err(Error::WindowOutOfRange { start: self.start, end: self.end, len });
        }
        Ok((self.start as usize, self.end as usize))
    }
}

pub fn exceedance_count(values: &[f64], u: f64, window: IndexWindow) -> Result<usize> {
    let (start, end) = window.check(values.len())?;
    Ok(values[start..end].iter().filter(|&&x| x > u).count())
}

pub fn exceedance_indices(values: &[f64], u: f64, window: IndexWindow) -> Result<Vec<usize>> {
    let (start, end) = window.check(values.len())?;
    Ok((start..end).filter(|&k| values[k] > u).collect())
}

/// Exceedances in the window not preceded by another exceedance within the
/// previous `l` indices. Look-back may reach before the window into the path;
/// positions before the path start count as non-exceedances.
pub fn thin_cluster_centers(values: &[f64], u: f64, l: u64, window: IndexWindow) -> Result<Vec<usize>> {
    let (start, end) = window.check(values.len())?;
    let lookback = usize::try_from(l).unwrap_or(usize::MAX);
    let mut last: Option<usize> = None;
    let mut centers = Vec::new();
    for (k, &x) in values.iter().enumerate().take(end).skip(start.saturating_sub(lookback)) {
        if x > u {
            if k >= start && last.is_none_or(|j| k - j > lookback) {
                centers.push(k);
            }
            last = Some(k);
        }
    }
    Ok(centers)
}

/// Number of centers at interior positions `k >= window.start + l`, whose
/// look-back lies entirely inside the window.
pub fn interior_center_count(centers: &[usize], l: u64, window: IndexWindow) -> usize {
    let first_interior = (window.start as u64).saturating_add(l);
    centers.iter().filter(|&&k| k as u64 >= first_interior).count()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ClusterDecomposition {
    pub centers: Vec<usize>,
    /// Exceedances in `[y_k, y_{k+1})`; the last cluster runs to the window end.
    pub cluster_counts: Vec<usize>,
    /// Exceedances before the first center.
    pub head_count: usize,
    pub total: usize,
}

impl ClusterDecomposition {
    pub fn identity_holds(&self) -> bool {
        self.head_count + self.cluster_counts.iter().sum::<usize>() == self.total
    }
}

pub fn decompose(values: &[f64], u: f64, l: u64, window: IndexWindow) -> Result<ClusterDecomposition> {
    let centers = thin_cluster_centers(values, u, l, window)?;
    let (start, end) = window.check(values.len())?;
    let count = |a: usize, b: usize| values[a..b].iter().filter(|&&x| x > u).count();

    let head_end = centers.first().copied().unwrap_or(end);
    let head_count = count(start, head_end);
    let cluster_counts: Vec<usize> = centers
        .iter()
        .enumerate()
        .map(|(i, &y)| count(y, centers.get(i + 1).copied().unwrap_or(end)))
        .collect();
    let total = count(start, end);
    Ok(ClusterDecomposition { centers, cluster_counts, head_count, total })
}

fn check_mean(mean: f64) -> Result<()> {
    if mean.is_finite() && mean >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("Poisson mean must be finite and nonnegative, got {mean}")))
    }
}

/// Poisson variate: sequential inversion up to mean 10, transformed
/// rejection with squeeze (PTRS) above.
pub fn poisson_variate(mean: f64, rng: &mut StreamRng) -> u64 {
    if mean == 0.0 {
        return 0;
    }
    if mean <= 10.0 {
        let target = rng.open_uniform();
        let mut prob = (-mean).exp();
        let mut cdf = prob;
        let mut k = 0u64;
        while target > cdf {
            k += 1;
            prob *= mean / k as f64;
            if prob == 0.0 {
                break;
            }
            cdf += prob;
        }
        return k;
    }

    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.024_83 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.open_uniform() - 0.5;
        let v = rng.open_uniform();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln() <= -mean + k * loglam - ln_gamma(k + 1.0) {
            return k as u64;
        }
    }
}

/// One Poisson draw from stream `key`.
pub fn sample_poisson_counts(mean: f64, key: StreamKey) -> Result<u64> {
    check_mean(mean)?;
    Ok(poisson_variate(mean, &mut key.rng()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClusterPoissonDraw {
    pub total: u64,
    pub per_cluster: Vec<u64>,
}

/// Poisson(`center_mean`) clusters, each of independent Poisson(`cluster_mean`) size.
pub fn cluster_poisson_variate(center_mean: f64, cluster_mean: f64, rng: &mut StreamRng) -> ClusterPoissonDraw {
    let centers = poisson_variate(center_mean, rng);
    let per_cluster: Vec<u64> = (0..centers).map(|_| poisson_variate(cluster_mean, rng)).collect();
    ClusterPoissonDraw { total: per_cluster.iter().sum(), per_cluster }
}

pub fn sample_cluster_poisson(center_mean: f64, cluster_mean: f64, key: StreamKey) -> Result<ClusterPoissonDraw> {
    check_mean(center_mean)?;
    check_mean(cluster_mean)?;
    Ok(cluster_poisson_variate(center_mean, cluster_mean, &mut key.rng()))
}
