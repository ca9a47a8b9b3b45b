//! Exceedance counts at the natural level against their Poisson limit.

use crate::distance::binomial_poisson_distance;
use crate::error::Result;
use crate::process::exceedance_count;
use crate::sim::{PathSampler, StreamKey};
use crate::tail::{condition_report, gauss_upper_tail, level_exact, prokhorov_leading};

use super::{
    compare_with_poisson, mean_of, new_result, pmf_points, replicate, ExperimentConfig, ExperimentResult, Table,
    LOG_COND_WARNING,
};

pub(crate) fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let schedule = config.level.schedule(config.n);
    let u = level_exact(&schedule, config.normalization)?;
    let p = gauss_upper_tail(u)?;
    let window = config.window();
    let n_window = window.len() as u64;
    let mean = n_window as f64 * p;

    let k_max = config.k_max.unwrap_or(config.n).max(2);
    let report = condition_report(&config.model, config.n, u, k_max)?;
    let sampler = PathSampler::new(&config.model, config.n as usize, config.allow_clipping)?;

    let counts = replicate(config, config.replications, Vec::new, |buf, i| {
        sampler.sample_into(StreamKey::new(config.master_seed, i), buf);
        Ok(exceedance_count(buf, u, window)? as u64)
    })?;

    let mut rows = Table::new(&["replication", "exceedances"]);
    for (i, &c) in counts.iter().enumerate() {
        rows.push(vec![("replication", i.into()), ("exceedances", c.into())]);
    }

    let cmp = compare_with_poisson(&counts, mean)?;
    let exact = binomial_poisson_distance(n_window, p)?.l1;
    let budget = exact + cmp.mc_term;
    let log_cond_ok = report.log_cond_value <= LOG_COND_WARNING;

    let mut warnings = Vec::new();
    if !log_cond_ok {
        warnings.push(format!(
            "log condition proxy {} exceeds {LOG_COND_WARNING} on lags [{}, {}]",
            report.log_cond_value, report.k0, report.k_max
        ));
    }
    if sampler.distortion() > 0.0 {
        warnings.push(format!("embedding clipped with distortion {}", sampler.distortion()));
    }

    let mut summary = Table::new(&[
        "n",
        "window_start",
        "window_end",
        "lambda",
        "u",
        "p",
        "poisson_mean",
        "replications",
        "mean_count",
        "l1_distance",
        "exact_binomial_poisson",
        "prokhorov_leading",
        "mc_term",
        "budget",
        "within_budget",
        "noise_floor",
        "berman_bound",
        "rho1",
        "log_cond_value",
        "power_cond_value",
        "k_max",
        "log_cond_ok",
        "distortion",
        "warnings",
    ]);
    summary.push(vec![
        ("n", config.n.into()),
        ("window_start", window.start.into()),
        ("window_end", window.end.into()),
        ("lambda", schedule.lambda.into()),
        ("u", u.into()),
        ("p", p.into()),
        ("poisson_mean", mean.into()),
        ("replications", config.replications.into()),
        ("mean_count", mean_of(&counts).into()),
        ("l1_distance", cmp.l1.into()),
        ("exact_binomial_poisson", exact.into()),
        ("prokhorov_leading", prokhorov_leading(u)?.into()),
        ("mc_term", cmp.mc_term.into()),
        ("budget", budget.into()),
        ("within_budget", (cmp.l1 <= budget).into()),
        ("noise_floor", cmp.noise_floor.into()),
        ("berman_bound", report.berman_sum.into()),
        ("rho1", report.rho1.into()),
        ("log_cond_value", report.log_cond_value.into()),
        ("power_cond_value", report.power_cond_value.into()),
        ("k_max", report.k_max.into()),
        ("log_cond_ok", log_cond_ok.into()),
        ("distortion", sampler.distortion().into()),
        ("warnings", warnings.join("; ").into()),
    ]);

    let mut result = new_result(config, rows, summary);
    let upto = cmp.empirical.support_max().max(cmp.reference.support_max().min(4 * mean.ceil() as usize + 10));
    pmf_points(&mut result.plot, "count_pmf", "empirical", &cmp.empirical, upto);
    pmf_points(&mut result.plot, "count_pmf", "poisson", &cmp.reference, upto);
    result.warnings = warnings;
    Ok(result)
}
