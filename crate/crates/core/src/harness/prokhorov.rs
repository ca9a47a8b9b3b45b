//! Exact Binomial-Poisson distances against the constant `lambda1`.

use crate::distance::binomial_poisson_distance;
use crate::error::{Error, Result};
use crate::tail::PROKHOROV_LAMBDA1;

use super::{new_result, ExperimentConfig, ExperimentResult, PlotPoint, Table};

pub(crate) const DEFAULT_P: f64 = 1e-6;
pub(crate) const DEFAULT_NP_GRID: [f64; 4] = [10.0, 100.0, 1_000.0, 10_000.0];
/// Calibration factor of the `(np)^(-1/2)` deviation budget.
pub const DEVIATION_FACTOR: f64 = 5.0;

const COLUMNS: [&str; 13] = [
    "n",
    "p",
    "np",
    "rho",
    "rho_over_p",
    "lambda1",
    "deviation",
    "predicted_scale",
    "deviation_budget",
    "within_budget",
    "rho_truncated",
    "poisson_mass_above_n",
    "error_bound",
];

fn grid(config: &ExperimentConfig) -> Result<Vec<(u64, f64)>> {
    let p = config.p.unwrap_or(DEFAULT_P);
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("p must lie in [0, 1], got {p}")));
    }
    let points: Vec<(u64, f64)> = match &config.n_grid {
        Some(ns) => ns.iter().map(|&n| (n, p)).collect(),
        None => {
            if p == 0.0 {
                return Err(Error::Config("p = 0 needs an explicit n_grid".into()));
            }
            let nps = config.np_grid.clone().unwrap_or(DEFAULT_NP_GRID.to_vec());
            let mut out = Vec::with_capacity(nps.len());
            for np in nps {
                let n = (np / p).round();
                if !(np.is_finite() && (1.0..1e18).contains(&n)) {
                    return Err(Error::Config(format!("np = {np} with p = {p} gives no usable n")));
                }
                out.push((n as u64, p));
            }
            out
        }
    };
    if points.is_empty() || points.iter().any(|&(n, _)| n == 0) {
        return Err(Error::Config("grid must be nonempty with every n >= 1".into()));
    }
    Ok(points)
}

pub(crate) fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let points = grid(config)?;
    let mut rows = Table::new(&COLUMNS);
    let mut plot = Vec::new();
    let mut deviations = Vec::new();
    for &(n, p) in &points {
        let d = binomial_poisson_distance(n, p)?;
        let np = n as f64 * p;
        let ratio = if p > 0.0 { d.l1 / p } else { f64::NAN };
        let deviation = (ratio - PROKHOROV_LAMBDA1).abs();
        let scale = np.powf(-0.5);
        let budget = DEVIATION_FACTOR * scale;
        if p > 0.0 {
            deviations.push((np, deviation, budget));
            plot.push(PlotPoint::new("rho_over_p", "exact", np, ratio));
            plot.push(PlotPoint::new("rho_over_p", "lambda1", np, PROKHOROV_LAMBDA1));
            plot.push(PlotPoint::new("deviation", "exact", np, deviation));
            plot.push(PlotPoint::new("deviation", "budget", np, budget));
        }
        rows.push(vec![
            ("n", n.into()),
            ("p", p.into()),
            ("np", np.into()),
            ("rho", d.l1.into()),
            ("rho_over_p", ratio.into()),
            ("lambda1", PROKHOROV_LAMBDA1.into()),
            ("deviation", deviation.into()),
            ("predicted_scale", scale.into()),
            ("deviation_budget", budget.into()),
            ("within_budget", (p > 0.0 && deviation <= budget).into()),
            ("rho_truncated", d.l1_truncated.into()),
            ("poisson_mass_above_n", d.poisson_mass_above_n.into()),
            ("error_bound", d.error_bound.into()),
        ]);
    }

    deviations.sort_by(|a, b| a.0.total_cmp(&b.0));
    let shrinking = deviations.windows(2).all(|w| w[1].1 < w[0].1);
    let all_within = deviations.iter().all(|&(_, dev, budget)| dev <= budget);
    let (top_np, top_rel) = deviations
        .last()
        .map(|&(np, dev, _)| (np, dev / PROKHOROV_LAMBDA1))
        .unwrap_or((f64::NAN, f64::NAN));

    let mut summary = Table::new(&[
        "grid_points",
        "largest_np",
        "relative_error_at_largest_np",
        "deviation_shrinking",
        "all_within_budget",
    ]);
    summary.push(vec![
        ("grid_points", points.len().into()),
        ("largest_np", top_np.into()),
        ("relative_error_at_largest_np", top_rel.into()),
        ("deviation_shrinking", shrinking.into()),
        ("all_within_budget", all_within.into()),
    ]);
    let mut result = new_result(config, rows, summary);
    result.plot = plot;
    Ok(result)
}
