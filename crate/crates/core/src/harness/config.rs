use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::CovarianceModel;
use crate::process::IndexWindow;
use crate::tail::{LevelMode, LevelSchedule, Normalization};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "E1_prokhorov_ratio")]
    E1ProkhorovRatio,
    #[serde(rename = "E2_poisson_limit")]
    E2PoissonLimit,
    #[serde(rename = "E3_cluster_medium")]
    E3ClusterMedium,
    #[serde(rename = "E4_dependent_berman")]
    E4DependentBerman,
    #[serde(rename = "E5_threshold_explore")]
    E5ThresholdExplore,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::E1ProkhorovRatio => "E1_prokhorov_ratio",
            ExperimentKind::E2PoissonLimit => "E2_poisson_limit",
            ExperimentKind::E3ClusterMedium => "E3_cluster_medium",
            ExperimentKind::E4DependentBerman => "E4_dependent_berman",
            ExperimentKind::E5ThresholdExplore => "E5_threshold_explore",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Level schedule as written in a config file; `n` defaults to the
/// experiment's sequence length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    pub lambda: f64,
    pub mode: LevelMode,
}

impl LevelConfig {
    pub fn schedule(&self, default_n: u64) -> LevelSchedule {
        LevelSchedule { n: self.n.unwrap_or(default_n), lambda: self.lambda, mode: self.mode }
    }

    /// The same schedule at another sequence length.
    pub fn at(&self, n: u64) -> LevelSchedule {
        LevelSchedule { n, lambda: self.lambda, mode: self.mode }
    }
}

fn default_model() -> CovarianceModel {
    CovarianceModel::Independent
}

/// One experiment run, as read from a JSON config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_model")]
    pub model: CovarianceModel,
    pub n: u64,
    pub level: LevelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<IndexWindow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_cluster: Option<f64>,
    pub replications: u64,
    pub master_seed: u64,
    pub output_dir: PathBuf,

    #[serde(default)]
    pub normalization: Normalization,
    /// Worker threads for replications; all available cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// E1: success probability (default 1e-6).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// E1: grid of `np` values (default 10, 100, 1000, 10000).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub np_grid: Option<Vec<f64>>,
    /// E1, E4, E5: grid of sequence lengths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<u64>>,
    /// E5: grid of `rho(1)` values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_grid: Option<Vec<f64>>,
    /// E5: grid of level ratios `u / sqrt(2 ln n)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_grid: Option<Vec<f64>>,
    /// E4: also simulate paths at every grid point.
    #[serde(default)]
    pub simulate: bool,
    /// Upper lag of the condition windows (default `n`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<u64>,
    /// Clip negative embedding eigenvalues instead of refusing the model.
    #[serde(default)]
    pub allow_clipping: bool,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(config_err("replications must be at least 1"));
        }
        if self.n < 2 {
            return Err(config_err("n must be at least 2"));
        }
        self.model.validate().map_err(|e| config_err(format!("model: {e}")))?;
        self.level.schedule(self.n).validate().map_err(|e| config_err(format!("level: {e}")))?;
        if let Some(w) = self.window {
            if w.start < 0 || w.start > w.end || w.end > self.n as i64 {
                return Err(config_err(format!("window [{}, {}) does not fit n = {}", w.start, w.end, self.n)));
            }
        }
        let empty = |g: &Option<Vec<_>>| g.as_ref().is_some_and(|v: &Vec<_>| v.is_empty());
        if empty(&self.np_grid) || empty(&self.rho_grid) || empty(&self.ratio_grid) {
            return Err(config_err("grids must not be empty"));
        }
        if let Some(ns) = &self.n_grid {
            if ns.is_empty() || ns.iter().any(|&n| n < 2) {
                return Err(config_err("n_grid must be nonempty with every n >= 2"));
            }
        }
        if self.workers == Some(0) {
            return Err(config_err("workers must be positive"));
        }
        match self.experiment {
            ExperimentKind::E3ClusterMedium => {
                match self.lambda_cluster {
                    Some(l) if l.is_finite() && l > 0.0 => {}
                    _ => return Err(config_err("E3_cluster_medium requires a positive lambda_cluster")),
                }
                match self.level.mode {
                    LevelMode::Power { a, .. } if a < 1.0 => {}
                    _ => return Err(config_err("E3_cluster_medium requires a power-mode level with a < 1")),
                }
            }
            ExperimentKind::E2PoissonLimit => {
                if self.level.mode != LevelMode::Natural {
                    return Err(config_err("E2_poisson_limit requires a natural-mode level"));
                }
            }
            ExperimentKind::E4DependentBerman => {
                if !matches!(self.level.mode, LevelMode::Power { .. }) {
                    return Err(config_err("E4_dependent_berman requires a power-mode level"));
                }
            }
            ExperimentKind::E5ThresholdExplore => {
                if !matches!(self.model, CovarianceModel::Geometric { .. } | CovarianceModel::PowerDecay { .. }) {
                    return Err(config_err("E5_threshold_explore needs a geometric or power_decay model family"));
                }
            }
            ExperimentKind::E1ProkhorovRatio => {}
        }
        Ok(())
    }

    pub fn window(&self) -> IndexWindow {
        self.window.unwrap_or(IndexWindow::full(self.n as usize))
    }

    /// Short hash of every field that influences results (not the output
    /// directory or the worker count).
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        canonical.workers = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const E3: &str = r#"{
        "experiment": "E3_cluster_medium",
        "model": {"kind": "independent"},
        "n": 1000000,
        "level": {"lambda": 1, "mode": {"power": {"a": 0.5, "c": 1}}},
        "lambda_cluster": 5,
        "replications": 2000,
        "master_seed": 7,
        "output_dir": "out"
    }"#;

    #[test]
    fn parses_field_names() {
        let c = ExperimentConfig::from_json(E3).unwrap();
        assert_eq!(c.experiment, ExperimentKind::E3ClusterMedium);
        assert_eq!(c.level.mode, LevelMode::Power { a: 0.5, c: 1.0 });
        assert_eq!(c.window(), IndexWindow::full(1_000_000));
        assert_eq!(c.normalization, Normalization::Psi);
    }

    #[test]
    fn natural_mode_string() {
        let text = r#"{"experiment":"E2_poisson_limit","n":100,"level":{"lambda":2,"mode":"natural"},
            "replications":3,"master_seed":1,"output_dir":"o"}"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(c.model, CovarianceModel::Independent);
        assert_eq!(c.level.schedule(c.n), LevelSchedule::natural(100, 2.0));
    }

    #[test]
    fn rejects_inconsistent_configs() {
        let no_cluster = E3.replace(r#""lambda_cluster": 5,"#, "");
        assert!(matches!(ExperimentConfig::from_json(&no_cluster), Err(Error::Config(_))));
        let a_one = E3.replace(r#""a": 0.5"#, r#""a": 1.0"#);
        assert!(ExperimentConfig::from_json(&a_one).is_err());
        let zero_reps = E3.replace(r#""replications": 2000"#, r#""replications": 0"#);
        assert!(ExperimentConfig::from_json(&zero_reps).is_err());
        let typo = E3.replace("master_seed", "master_sed");
        assert!(ExperimentConfig::from_json(&typo).is_err());
        assert!(ExperimentConfig::from_json("{").is_err());
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = ExperimentConfig::from_json(E3).unwrap();
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        b.workers = Some(3);
        assert_eq!(a.hash(), b.hash());
        b.master_seed = 8;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
