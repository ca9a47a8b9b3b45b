//! Thinned cluster centers at a medium level against the cluster-Poisson
//! approximation.

use crate::distance::{binomial_poisson_distance, empirical_distribution, variation_distance, CountDistribution};
use crate::error::Result;
use crate::process::{decompose, interior_center_count};
use crate::sim::{PathSampler, StreamKey};
use crate::tail::{cluster_gap_from_tail, gauss_upper_tail, level_exact, LevelMode};

use super::{
    compare_with_poisson, mean_of, new_result, pmf_points, replicate, ExperimentConfig, ExperimentResult, PlotPoint,
    Table,
};

/// Monte Carlo allowance of the center-count distance.
pub const CENTER_BUDGET: f64 = 0.1;
/// Monte Carlo allowance on top of the exact Binomial-Poisson distance.
pub const TOTAL_SLACK: f64 = 0.05;

struct Replication {
    total: u64,
    head: u64,
    centers: u64,
    interior: u64,
    identity_holds: bool,
    cluster_sizes: Vec<usize>,
}

pub(crate) fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let schedule = config.level.schedule(config.n);
    let u = level_exact(&schedule, config.normalization)?;
    let p = gauss_upper_tail(u)?;
    let window = config.window();
    let n_window = window.len() as u64;
    let lambda_cluster = config.lambda_cluster.expect("validated");
    let scale = cluster_gap_from_tail(n_window, p, lambda_cluster)?;
    let l = scale.l;
    let sampler = PathSampler::new(&config.model, config.n as usize, config.allow_clipping)?;

    let reps = replicate(config, config.replications, Vec::new, |buf, i| {
        sampler.sample_into(StreamKey::new(config.master_seed, i), buf);
        let d = decompose(buf, u, l, window)?;
        Ok(Replication {
            total: d.total as u64,
            head: d.head_count as u64,
            centers: d.centers.len() as u64,
            interior: interior_center_count(&d.centers, l, window) as u64,
            identity_holds: d.identity_holds(),
            cluster_sizes: d.cluster_counts,
        })
    })?;

    let mut rows = Table::new(&["replication", "total", "head_count", "centers", "interior_centers", "identity_holds"]);
    for (i, r) in reps.iter().enumerate() {
        rows.push(vec![
            ("replication", i.into()),
            ("total", r.total.into()),
            ("head_count", r.head.into()),
            ("centers", r.centers.into()),
            ("interior_centers", r.interior.into()),
            ("identity_holds", r.identity_holds.into()),
        ]);
    }

    let totals: Vec<u64> = reps.iter().map(|r| r.total).collect();
    let centers: Vec<u64> = reps.iter().map(|r| r.centers).collect();
    let interior: Vec<u64> = reps.iter().map(|r| r.interior).collect();
    let violations = reps.iter().filter(|r| !r.identity_holds).count();

    let interior_positions = n_window.saturating_sub(l);
    let center_cmp = compare_with_poisson(&interior, interior_positions as f64 * scale.p_ul)?;
    let all_center_cmp = compare_with_poisson(&centers, scale.achieved_lambda)?;
    let total_cmp = compare_with_poisson(&totals, n_window as f64 * p)?;
    let exact = binomial_poisson_distance(n_window, p)?.l1;
    let totals_vs_binomial = match CountDistribution::binomial(n_window, p) {
        Ok(b) => variation_distance(&empirical_distribution(&totals)?, &b),
        Err(_) => f64::NAN,
    };

    let mut size_hist: Vec<u64> = Vec::new();
    for r in &reps {
        for &s in &r.cluster_sizes {
            if s >= size_hist.len() {
                size_hist.resize(s + 1, 0);
            }
            size_hist[s] += 1;
        }
    }
    let clusters: u64 = size_hist.iter().sum();
    let clustered: u64 = size_hist.iter().enumerate().map(|(s, &h)| s as u64 * h).sum();
    let mean_cluster_size = clustered as f64 / clusters as f64;
    let (a, c) = match schedule.mode {
        LevelMode::Power { a, c } => (a, c),
        _ => (f64::NAN, f64::NAN),
    };

    let mut warnings = Vec::new();
    if violations > 0 {
        warnings.push(format!("{violations} decomposition identity violations"));
    }
    if scale.no_thinning {
        warnings.push("np does not exceed lambda_cluster; no thinning applied".into());
    }

    let total_budget = exact + TOTAL_SLACK;
    let mut summary = Table::new(&[
        "n",
        "window_start",
        "window_end",
        "a",
        "c",
        "u",
        "p",
        "np",
        "lambda_cluster",
        "l",
        "achieved_lambda",
        "n1",
        "p_ul",
        "inner_normalization_gap",
        "no_thinning",
        "replications",
        "mean_total",
        "mean_centers",
        "mean_interior_centers",
        "interior_center_mean",
        "mean_cluster_size",
        "predicted_cluster_size",
        "center_l1",
        "center_budget",
        "center_within_budget",
        "center_noise_floor",
        "all_centers_l1",
        "total_l1",
        "exact_binomial_poisson",
        "total_budget",
        "total_within_budget",
        "total_noise_floor",
        "totals_vs_binomial_l1",
        "identity_violations",
        "distortion",
        "warnings",
    ]);
    summary.push(vec![
        ("n", config.n.into()),
        ("window_start", window.start.into()),
        ("window_end", window.end.into()),
        ("a", a.into()),
        ("c", c.into()),
        ("u", u.into()),
        ("p", p.into()),
        ("np", (n_window as f64 * p).into()),
        ("lambda_cluster", lambda_cluster.into()),
        ("l", l.into()),
        ("achieved_lambda", scale.achieved_lambda.into()),
        ("n1", scale.n1.into()),
        ("p_ul", scale.p_ul.into()),
        ("inner_normalization_gap", scale.inner_normalization_gap().into()),
        ("no_thinning", scale.no_thinning.into()),
        ("replications", config.replications.into()),
        ("mean_total", mean_of(&totals).into()),
        ("mean_centers", mean_of(&centers).into()),
        ("mean_interior_centers", mean_of(&interior).into()),
        ("interior_center_mean", (interior_positions as f64 * scale.p_ul).into()),
        ("mean_cluster_size", mean_cluster_size.into()),
        ("predicted_cluster_size", (p / scale.p_ul).into()),
        ("center_l1", center_cmp.l1.into()),
        ("center_budget", CENTER_BUDGET.into()),
        ("center_within_budget", (center_cmp.l1 <= CENTER_BUDGET).into()),
        ("center_noise_floor", center_cmp.noise_floor.into()),
        ("all_centers_l1", all_center_cmp.l1.into()),
        ("total_l1", total_cmp.l1.into()),
        ("exact_binomial_poisson", exact.into()),
        ("total_budget", total_budget.into()),
        ("total_within_budget", (total_cmp.l1 <= total_budget).into()),
        ("total_noise_floor", total_cmp.noise_floor.into()),
        ("totals_vs_binomial_l1", totals_vs_binomial.into()),
        ("identity_violations", violations.into()),
        ("distortion", sampler.distortion().into()),
        ("warnings", warnings.join("; ").into()),
    ]);

    let mut result = new_result(config, rows, summary);
    let plot = &mut result.plot;
    let upto = center_cmp.empirical.support_max();
    pmf_points(plot, "center_pmf", "empirical", &center_cmp.empirical, upto);
    pmf_points(plot, "center_pmf", "poisson", &center_cmp.reference, upto);
    let upto = total_cmp.empirical.support_max();
    pmf_points(plot, "total_pmf", "empirical", &total_cmp.empirical, upto);
    pmf_points(plot, "total_pmf", "poisson", &total_cmp.reference, upto);
    for (s, &h) in size_hist.iter().enumerate().skip(1) {
        plot.push(PlotPoint::new("cluster_size", "empirical", s as f64, h as f64 / clusters as f64));
    }
    result.warnings = warnings;
    Ok(result)
}
