//! Seeded experiment runner: JSON config in, CSV tables out.
//!
//! Replication `i` of a run draws from stream `i` of the master seed, so the
//! output does not depend on the worker count or on scheduling.

mod cluster;
mod config;
mod dependent;
mod output;
mod poisson_limit;
mod prokhorov;
mod threshold;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

pub use cluster::{CENTER_BUDGET, TOTAL_SLACK};
pub use config::{ExperimentConfig, ExperimentKind, LevelConfig};
pub use prokhorov::DEVIATION_FACTOR;
pub use threshold::{family_member, level_at_ratio, Trend};
pub use output::{
    plot_csv, rows_csv, summary_csv, write_outputs, ExperimentResult, OutputFiles, PlotPoint, Table, Value,
};

use crate::distance::{empirical_distribution, variation_distance, CountDistribution};
use crate::error::{Error, Result};

/// Budget of the logarithmic-condition proxy above which a run is flagged.
pub const LOG_COND_WARNING: f64 = 0.1;

pub(crate) const DEFAULT_N_GRID: [u64; 4] = [1_000, 10_000, 100_000, 1_000_000];

/// Runs the experiment named in `config` without writing anything.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let started = Instant::now();
    let mut result = match config.experiment {
        ExperimentKind::E1ProkhorovRatio => prokhorov::run(config),
        ExperimentKind::E2PoissonLimit => poisson_limit::run(config),
        ExperimentKind::E3ClusterMedium => cluster::run(config),
        ExperimentKind::E4DependentBerman => dependent::run(config),
        ExperimentKind::E5ThresholdExplore => threshold::run(config),
    }?;
    result.wall_ms = started.elapsed().as_millis() as u64;
    Ok(result)
}

/// Runs the experiment and writes its CSV files into `config.output_dir`.
pub fn run_and_write(config: &ExperimentConfig) -> Result<(ExperimentResult, OutputFiles)> {
    let result = run(config)?;
    let files = write_outputs(&result, &config.output_dir)?;
    Ok((result, files))
}

pub fn run_file(path: &Path) -> Result<(ExperimentResult, OutputFiles)> {
    run_and_write(&ExperimentConfig::load(path)?)
}

pub(crate) fn new_result(config: &ExperimentConfig, rows: Table, summary: Table) -> ExperimentResult {
    ExperimentResult {
        experiment: config.experiment,
        master_seed: config.master_seed,
        config_hash: config.hash(),
        rows,
        summary,
        plot: Vec::new(),
        warnings: Vec::new(),
        wall_ms: 0,
    }
}

/// Evaluates `job(state, i)` for `i in 0..count` on the configured number of
/// workers. Results come back in index order; `init` builds per-worker
/// scratch state.
pub(crate) fn replicate<T, S, I, F>(config: &ExperimentConfig, count: u64, init: I, job: F) -> Result<Vec<T>>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> Result<T> + Sync + Send,
{
    let work = || (0..count).into_par_iter().map_init(&init, |state, i| job(state, i)).collect::<Result<Vec<T>>>();
    match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {w} workers: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Empirical law of `counts` compared with a Poisson reference.
pub(crate) struct PoissonComparison {
    pub empirical: CountDistribution,
    pub reference: CountDistribution,
    pub l1: f64,
    /// Approximate expected L1 distance of an exact sample of the same size
    /// from its own law, `sum_k min(2 p_k, sqrt(2 p_k (1 - p_k) / (pi R)))`.
    pub noise_floor: f64,
    /// `sqrt(support / R)` with the observed support width.
    pub mc_term: f64,
}

pub(crate) fn compare_with_poisson(counts: &[u64], mean: f64) -> Result<PoissonComparison> {
    let empirical = empirical_distribution(counts)?;
    let reference = CountDistribution::poisson_covering(mean, empirical.support_max())?;
    let l1 = variation_distance(&empirical, &reference);
    let reps = counts.len() as f64;
    Ok(PoissonComparison {
        noise_floor: noise_floor(&reference, counts.len() as u64),
        mc_term: (support_width(counts) as f64 / reps).sqrt(),
        empirical,
        reference,
        l1,
    })
}

pub(crate) fn noise_floor(reference: &CountDistribution, replications: u64) -> f64 {
    let r = replications as f64;
    reference
        .pmf
        .iter()
        .map(|&p| (2.0 * p).min((2.0 * p * (1.0 - p) / (std::f64::consts::PI * r)).sqrt()))
        .sum()
}

fn support_width(counts: &[u64]) -> u64 {
    let lo = counts.iter().min().copied().unwrap_or(0);
    let hi = counts.iter().max().copied().unwrap_or(0);
    hi - lo + 1
}

pub(crate) fn mean_of(counts: &[u64]) -> f64 {
    if counts.is_empty() {
        return f64::NAN;
    }
    counts.iter().map(|&c| c as f64).sum::<f64>() / counts.len() as f64
}

pub(crate) fn pmf_points(plot: &mut Vec<PlotPoint>, figure: &str, series: &str, dist: &CountDistribution, upto: usize) {
    for k in 0..=upto {
        plot.push(PlotPoint::new(figure, series, k as f64, dist.prob(k)));
    }
}
