//! Stationary Gaussian sequences by circulant embedding.

mod rng;

pub use rng::{StreamKey, StreamRng};

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::CovarianceModel;

/// Largest clipping distortion accepted without `allow_clipping`.
pub const MAX_SILENT_DISTORTION: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbeddingReport {
    pub n: usize,
    /// Circulant size, the smallest power of two `>= 2(n-1)`.
    pub m: usize,
    pub min_eigenvalue: f64,
    pub negative_count: usize,
    /// L2 norm of the clipped negative eigenvalues divided by `m`.
    pub distortion: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    pub values: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    pub stream: u64,
    pub distortion: f64,
}

pub fn embedding_size(n: usize) -> usize {
    (2 * n.saturating_sub(1)).next_power_of_two()
}

/// First row of the circulant extension. Lags at or beyond `n` only pad the
/// embedding; where a table model has no value there they are taken as 0.
fn circulant_row(model: &CovarianceModel, n: usize, m: usize) -> Result<Vec<f64>> {
    let half = m / 2;
    let mut lags = Vec::with_capacity(half + 1);
    for k in 0..=half as u64 {
        let r = match model.covariance(k) {
            Ok(r) => r,
            Err(Error::TableOverrun { .. }) if k as usize >= n => 0.0,
            Err(e) => return Err(e),
        };
        lags.push(r);
    }
    Ok((0..m).map(|j| lags[j.min(m - j)]).collect())
}

fn eigenvalues(row: &[f64], fft: &dyn Fft<f64>) -> Vec<f64> {
    let mut buf: Vec<Complex64> = row.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    fft.process(&mut buf);
    buf.into_iter().map(|z| z.re).collect()
}

fn report_from(n: usize, eig: &[f64]) -> EmbeddingReport {
    let m = eig.len();
    let min_eigenvalue = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let negatives: Vec<f64> = eig.iter().copied().filter(|&l| l < 0.0).collect();
    let distortion = negatives.iter().map(|l| l * l).sum::<f64>().sqrt() / m as f64;
    EmbeddingReport { n, m, min_eigenvalue, negative_count: negatives.len(), distortion }
}

/// Spectrum of the circulant extension for a path of length `n`.
pub fn validate_model(model: &CovarianceModel, n: usize) -> Result<EmbeddingReport> {
    if n < 2 {
        return Err(invalid(format!("validate_model needs n >= 2, got {n}")));
    }
    model.validate()?;
    let m = embedding_size(n);
    let row = circulant_row(model, n, m)?;
    let fft = FftPlanner::new().plan_fft_forward(m);
    Ok(report_from(n, &eigenvalues(&row, fft.as_ref())))
}

/// Precomputed spectral factor for drawing many paths of one model and length.
pub struct PathSampler {
    n: usize,
    distortion: f64,
    kind: SamplerKind,
}

enum SamplerKind {
    /// Identity covariance: every eigenvalue is 1, the spectral step is skipped.
    White,
    Spectral { amplitudes: Vec<f64>, fft: Arc<dyn Fft<f64>> },
}

impl PathSampler {
    pub fn new(model: &CovarianceModel, n: usize, allow_clipping: bool) -> Result<Self> {
        if n == 0 {
            return Err(invalid("path length must be positive"));
        }
        model.validate()?;
        if model.is_independent() {
            return Ok(PathSampler { n, distortion: 0.0, kind: SamplerKind::White });
        }
        let m = embedding_size(n);
        let row = circulant_row(model, n, m)?;
        let fft = FftPlanner::new().plan_fft_forward(m);
        let eig = eigenvalues(&row, fft.as_ref());
        let report = report_from(n, &eig);
        if report.distortion > MAX_SILENT_DISTORTION && !allow_clipping {
            return Err(Error::ExcessiveDistortion { distortion: report.distortion, limit: MAX_SILENT_DISTORTION });
        }
        let kept: f64 = eig.iter().map(|l| l.max(0.0)).sum();
        if kept <= 0.0 {
            return Err(invalid("embedding spectrum is entirely non-positive"));
        }
        // sqrt(lambda_j / m), rescaled so that the marginal variance is 1
        let variance = kept / m as f64;
        let amplitudes = eig.iter().map(|l| (l.max(0.0) / m as f64 / variance).sqrt()).collect();
        Ok(PathSampler { n, distortion: report.distortion, kind: SamplerKind::Spectral { amplitudes, fft } })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn distortion(&self) -> f64 {
        self.distortion
    }

    pub fn sample(&self, key: StreamKey) -> PathSample {
        let mut values = Vec::with_capacity(self.n);
        self.sample_into(key, &mut values);
        PathSample { values, n: self.n, seed: key.seed, stream: key.stream, distortion: self.distortion }
    }

    /// Writes the path for `key` into `out`, replacing its contents.
    pub fn sample_into(&self, key: StreamKey, out: &mut Vec<f64>) {
        let mut rng = key.rng();
        out.clear();
        match &self.kind {
            SamplerKind::White => out.extend((0..self.n).map(|_| rng.standard_normal())),
            SamplerKind::Spectral { amplitudes, fft } => {
                let mut buf: Vec<Complex64> = amplitudes
                    .iter()
                    .map(|&a| {
                        let re = rng.standard_normal();
                        let im = rng.standard_normal();
                        Complex64::new(a * re, a * im)
                    })
                    .collect();
                fft.process(&mut buf);
                out.extend(buf[..self.n].iter().map(|z| z.re));
            }
        }
    }
}

/// One path of length `n` from stream 0 of `seed`.
pub fn sample_path(model: &CovarianceModel, n: usize, seed: u64) -> Result<PathSample> {
    Ok(PathSampler::new(model, n, false)?.sample(StreamKey::from(seed)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LagEstimate {
    pub lag: usize,
    pub mean: f64,
    pub std_error: f64,
}

/// Per-path lag products `(1/(n-k)) sum_i x(i) x(i+k)` for `k = 0..=max_lag`.
pub fn lag_products(values: &[f64], max_lag: usize) -> Vec<f64> {
    let n = values.len();
    (0..=max_lag)
        .map(|k| {
            let s: f64 = values[..n - k].iter().zip(&values[k..]).map(|(a, b)| a * b).sum();
            s / (n - k) as f64
        })
        .collect()
}

/// Mean over replications of the per-path lag products, with the standard
/// error of that mean.
pub fn empirical_covariance(paths: &[PathSample], max_lag: usize) -> Result<Vec<LagEstimate>> {
    if paths.len() < 2 {
        return Err(invalid("empirical_covariance needs at least 2 paths"));
    }
    let n = paths[0].values.len();
    if paths.iter().any(|p| p.values.len() != n) {
        return Err(invalid("paths have inconsistent lengths"));
    }
    if n <= max_lag {
        return Err(invalid(format!("path length {n} must exceed max_lag {max_lag}")));
    }
    let per_path: Vec<Vec<f64>> = paths.iter().map(|p| lag_products(&p.values, max_lag)).collect();
    Ok(summarize_lags(&per_path, max_lag))
}

pub(crate) fn summarize_lags(per_path: &[Vec<f64>], max_lag: usize) -> Vec<LagEstimate> {
    let reps = per_path.len() as f64;
    (0..=max_lag)
        .map(|lag| {
            let mean = per_path.iter().map(|v| v[lag]).sum::<f64>() / reps;
            let var = per_path.iter().map(|v| (v[lag] - mean).powi(2)).sum::<f64>() / (reps - 1.0);
            LagEstimate { lag, mean, std_error: (var / reps).sqrt() }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_sizes() {
        assert_eq!(embedding_size(2), 2);
        assert_eq!(embedding_size(3), 4);
        assert_eq!(embedding_size(256), 512);
        assert_eq!(embedding_size(257), 512);
        assert_eq!(embedding_size(100_000), 262_144);
    }

    #[test]
    fn independent_spectrum_is_flat() {
        let r = validate_model(&CovarianceModel::Independent, 64).unwrap();
        assert_eq!(r.min_eigenvalue, 1.0);
        assert_eq!(r.negative_count, 0);
        assert_eq!(r.distortion, 0.0);
    }

    #[test]
    fn geometric_embeds_exactly() {
        let r = validate_model(&CovarianceModel::Geometric { rho0: 0.5 }, 256).unwrap();
        assert!(r.min_eigenvalue > 0.0, "{r:?}");
        assert_eq!(r.distortion, 0.0);
    }

    #[test]
    fn strongly_correlated_table_reports_clipping() {
        let model = CovarianceModel::Table { values: vec![0.99], zero_beyond: true };
        let r = validate_model(&model, 4).unwrap();
        // row [1, .99, 0, 0, 0, 0, 0, .99]: eigenvalues 1 + 1.98 cos(2 pi j / 8)
        assert_eq!(r.m, 8);
        assert_eq!(r.negative_count, 3);
        assert!((r.min_eigenvalue - (1.0 - 1.98)).abs() < 1e-12);
        assert!(r.distortion > 0.0);
        assert!(matches!(PathSampler::new(&model, 4, false), Err(Error::ExcessiveDistortion { .. })));
        let clipped = PathSampler::new(&model, 4, true).unwrap();
        assert!(clipped.distortion() > 0.0);
        assert_eq!(clipped.sample(StreamKey::new(1, 0)).values.len(), 4);
    }

    #[test]
    fn table_without_padding_needs_every_sampled_lag() {
        let strict = CovarianceModel::Table { values: vec![0.3], zero_beyond: false };
        assert!(validate_model(&strict, 3).is_err());
        assert!(validate_model(&strict, 2).is_ok());
    }

    #[test]
    fn deterministic_bits() {
        let model = CovarianceModel::PowerDecay { c: 0.3, beta: 2.0 };
        let a = sample_path(&model, 1000, 42).unwrap();
        let b = sample_path(&model, 1000, 42).unwrap();
        let c = sample_path(&model, 1000, 43).unwrap();
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a.values, c.values);
        assert_eq!(a.n, 1000);
        assert_eq!(a.distortion, 0.0);
    }

    #[test]
    fn independent_marginals() {
        let p = sample_path(&CovarianceModel::Independent, 1_000_000, 2024).unwrap();
        let n = p.values.len() as f64;
        let mean = p.values.iter().sum::<f64>() / n;
        let var = p.values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4.0 / n.sqrt(), "mean {mean}");
        // var of the sample variance of N(0,1) is 2/n
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n).sqrt(), "var {var}");
    }

    #[test]
    fn degenerate_covariance_input() {
        let zero = PathSample { values: vec![0.0; 10], n: 10, seed: 0, stream: 0, distortion: 0.0 };
        let est = empirical_covariance(&[zero.clone(), zero], 3).unwrap();
        assert!(est.iter().all(|e| e.mean == 0.0 && e.std_error == 0.0));
    }

    #[test]
    fn covariance_input_checks() {
        let a = PathSample { values: vec![1.0; 10], n: 10, seed: 0, stream: 0, distortion: 0.0 };
        let b = PathSample { values: vec![1.0; 9], n: 9, seed: 0, stream: 1, distortion: 0.0 };
        assert!(empirical_covariance(std::slice::from_ref(&a), 2).is_err());
        assert!(empirical_covariance(&[a.clone(), b], 2).is_err());
        assert!(empirical_covariance(&[a.clone(), a], 10).is_err());
    }

    #[test]
    fn independent_lag_estimates() {
        let sampler = PathSampler::new(&CovarianceModel::Independent, 200, false).unwrap();
        let paths: Vec<PathSample> = (0..2000).map(|i| sampler.sample(StreamKey::new(5, i))).collect();
        let est = empirical_covariance(&paths, 1).unwrap();
        assert!((est[0].mean - 1.0).abs() < 4.0 * est[0].std_error, "{:?}", est[0]);
        assert!(est[1].mean.abs() < 4.0 * est[1].std_error, "{:?}", est[1]);
    }

    #[test]
    fn every_builtin_model_has_unit_variance() {
        let models = [
            CovarianceModel::Geometric { rho0: 0.5 },
            CovarianceModel::Geometric { rho0: -0.4 },
            CovarianceModel::PowerDecay { c: 0.3, beta: 2.0 },
            CovarianceModel::PowerDecay { c: 0.2, beta: 1.0 },
            CovarianceModel::Table { values: vec![0.4, 0.1], zero_beyond: true },
        ];
        for model in models {
            let sampler = PathSampler::new(&model, 128, false).unwrap();
            let paths: Vec<PathSample> = (0..2000).map(|i| sampler.sample(StreamKey::new(9, i))).collect();
            let est = empirical_covariance(&paths, 2).unwrap();
            for e in &est {
                let want = model.covariance(e.lag as u64).unwrap();
                assert!((e.mean - want).abs() < 4.0 * e.std_error, "{model:?} lag {}: {e:?}", e.lag);
            }
        }
    }
}
