//! Which level-ratio threshold separates decay from growth of the comparison
//! bound, mapped over `rho(1)` and the level ratio.

use crate::error::{Error, Result};
use crate::model::CovarianceModel;
use crate::tail::{condition_report, BoundReport};

use super::{new_result, ExperimentConfig, ExperimentResult, PlotPoint, Table, DEFAULT_N_GRID};

pub(crate) const DEFAULT_RHO_GRID: [f64; 4] = [0.1, 1.0 / 3.0, 0.5, 0.6];
pub(crate) const DEFAULT_RATIO_GRID: [f64; 6] = [0.1, 0.5, 0.7, 0.8, 0.9, 1.0];

/// Member of the configured family with `rho(1) = rho1`.
pub fn family_member(family: &CovarianceModel, rho1: f64) -> Result<CovarianceModel> {
    let model = match family {
        CovarianceModel::Geometric { .. } => CovarianceModel::Geometric { rho0: rho1 },
        CovarianceModel::PowerDecay { beta, .. } => CovarianceModel::PowerDecay { c: rho1 * 2f64.powf(*beta), beta: *beta },
        other => return Err(Error::Config(format!("no rho(1) parametrization for {other:?}"))),
    };
    model.validate().map_err(|e| Error::Config(format!("rho(1) = {rho1}: {e}")))?;
    Ok(model)
}

/// Level `ratio * sqrt(2 ln n)`.
pub fn level_at_ratio(n: u64, ratio: f64) -> f64 {
    ratio * (2.0 * (n as f64).ln()).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trend {
    Decay,
    Growth,
    Mixed,
}

impl Trend {
    pub fn of(values: &[f64]) -> Trend {
        if values.windows(2).all(|w| w[1] < w[0]) {
            Trend::Decay
        } else if values.windows(2).all(|w| w[1] > w[0]) {
            Trend::Growth
        } else {
            Trend::Mixed
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Trend::Decay => "decay",
            Trend::Growth => "growth",
            Trend::Mixed => "mixed",
        }
    }
}

pub(crate) fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let n_grid = config.n_grid.clone().unwrap_or(DEFAULT_N_GRID.to_vec());
    let rho_grid = config.rho_grid.clone().unwrap_or(DEFAULT_RHO_GRID.to_vec());
    let ratio_grid = config.ratio_grid.clone().unwrap_or(DEFAULT_RATIO_GRID.to_vec());
    let (&n_first, &n_last) = (n_grid.first().expect("validated"), n_grid.last().expect("validated"));

    let mut rows = Table::new(&[
        "rho1",
        "model",
        "level_ratio",
        "threshold_stated",
        "threshold_proof",
        "n_first",
        "n_last",
        "bound_first",
        "bound_last",
        "trend",
        "predicted_stated",
        "predicted_proof",
        "stated_consistent",
        "proof_consistent",
        "power_cond_ok",
    ]);
    let mut plot = Vec::new();
    let (mut decay, mut growth, mut mixed) = (0usize, 0usize, 0usize);
    let (mut stated_hits, mut proof_hits, mut classified) = (0usize, 0usize, 0usize);
    let mut unit_ratio_all_decay = true;

    for &rho1 in &rho_grid {
        let model = family_member(&config.model, rho1)?;
        let label = serde_json::to_string(&model)?;
        for &ratio in &ratio_grid {
            let reports: Vec<BoundReport> = n_grid
                .iter()
                .map(|&n| condition_report(&model, n, level_at_ratio(n, ratio), config.k_max.unwrap_or(n).max(2)))
                .collect::<Result<_>>()?;
            let bounds: Vec<f64> = reports.iter().map(|r| r.berman_sum).collect();
            let power: Vec<f64> = reports.iter().map(|r| r.power_cond_value).collect();
            let power_cond_ok = power.windows(2).all(|w| w[1] < w[0]) || power.iter().all(|&v| v <= 1e-12);
            let trend = Trend::of(&bounds);
            let r0 = &reports[0];
            let predicted = |threshold: f64| if ratio > threshold { Trend::Decay } else { Trend::Growth };
            let (pred_stated, pred_proof) = (predicted(r0.threshold_stated), predicted(r0.threshold_proof));
            match trend {
                Trend::Decay => decay += 1,
                Trend::Growth => growth += 1,
                Trend::Mixed => mixed += 1,
            }
            if trend != Trend::Mixed {
                classified += 1;
                stated_hits += usize::from(pred_stated == trend);
                proof_hits += usize::from(pred_proof == trend);
            }
            if ratio == 1.0 && power_cond_ok && trend != Trend::Decay {
                unit_ratio_all_decay = false;
            }
            let series = format!("rho1={rho1} ratio={ratio}");
            for (&n, &b) in n_grid.iter().zip(&bounds) {
                plot.push(PlotPoint::new("berman_bound", series.clone(), n as f64, b));
            }
            let code = match trend {
                Trend::Decay => -1.0,
                Trend::Growth => 1.0,
                Trend::Mixed => 0.0,
            };
            plot.push(PlotPoint::new("trend_map", format!("rho1={rho1}"), ratio, code));
            rows.push(vec![
                ("rho1", rho1.into()),
                ("model", label.as_str().into()),
                ("level_ratio", ratio.into()),
                ("threshold_stated", r0.threshold_stated.into()),
                ("threshold_proof", r0.threshold_proof.into()),
                ("n_first", n_first.into()),
                ("n_last", n_last.into()),
                ("bound_first", bounds[0].into()),
                ("bound_last", bounds[bounds.len() - 1].into()),
                ("trend", trend.name().into()),
                ("predicted_stated", pred_stated.name().into()),
                ("predicted_proof", pred_proof.name().into()),
                ("stated_consistent", (pred_stated == trend).into()),
                ("proof_consistent", (pred_proof == trend).into()),
                ("power_cond_ok", power_cond_ok.into()),
            ]);
        }
    }

    let agreement = |hits: usize| if classified == 0 { f64::NAN } else { hits as f64 / classified as f64 };
    let (stated, proof) = (agreement(stated_hits), agreement(proof_hits));
    let separating = match (stated == 1.0, proof == 1.0) {
        (true, true) => "both",
        (true, false) => "stated",
        (false, true) => "proof",
        (false, false) => "neither",
    };
    let mut summary = Table::new(&[
        "cells",
        "decay_cells",
        "growth_cells",
        "mixed_cells",
        "stated_agreement",
        "proof_agreement",
        "separating_threshold",
        "unit_ratio_all_decay",
    ]);
    summary.push(vec![
        ("cells", rows.len().into()),
        ("decay_cells", decay.into()),
        ("growth_cells", growth.into()),
        ("mixed_cells", mixed.into()),
        ("stated_agreement", stated.into()),
        ("proof_agreement", proof.into()),
        ("separating_threshold", separating.into()),
        ("unit_ratio_all_decay", unit_ratio_all_decay.into()),
    ]);
    let mut result = new_result(config, rows, summary);
    result.plot = plot;
    Ok(result)
}
