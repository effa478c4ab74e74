//! Experiment configuration files (JSON).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dre_core::dataio::Activation;
use dre_core::network::DreConfig;
use dre_core::theory::Scenario;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Simulate,
    Fmnist,
    AblationK,
    AblationDepth,
    TheoryCurves,
    Baseline,
    MonteCarlo,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Fmnist => "fmnist",
            ExperimentKind::AblationK => "ablation_k",
            ExperimentKind::AblationDepth => "ablation_depth",
            ExperimentKind::TheoryCurves => "theory_curves",
            ExperimentKind::Baseline => "baseline",
            ExperimentKind::MonteCarlo => "monte_carlo",
        }
    }
}

/// Where the data comes from. Simulation settings are used by every kind
/// except `fmnist`, which uses the pair settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Total simulated rows, split into equal thirds.
    pub n: usize,
    pub d: usize,
    pub activation: Activation,
    /// Defaults to 1..=9 for simulated data and 0..=2 for FMNIST.
    pub noise_levels: Option<Vec<u32>>,
    pub pair_index: u8,
    pub per_class_cap: usize,
    pub valid_fraction: f64,
    /// FMNIST directory; falls back to `$DRE_DATA_DIR`, then `data/fmnist`.
    pub data_dir: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            n: 3000,
            d: 50,
            activation: Activation::Relu,
            noise_levels: None,
            pair_index: 0,
            per_class_cap: 2000,
            valid_fraction: 0.2,
            data_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    /// Features per layer held fixed while K varies; defaults to K·P of `model`.
    pub total_features: Option<usize>,
    pub k_values: Vec<usize>,
    pub depths: Vec<usize>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            total_features: None,
            k_values: vec![1, 50, 100, 200, 500],
            depths: vec![1, 2, 3, 4, 5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub enabled: bool,
    /// Defaults to the width K·L of a DRE layer.
    pub p_total: Option<usize>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            p_total: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryConfig {
    pub b: Vec<f64>,
    pub c_grid: Vec<f64>,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            b: (0..10).map(|i| 0.5 + i as f64 / 9.0).collect(),
            c_grid: (0..=50).map(|i| 0.1 * 100f64.powf(i as f64 / 50.0)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub n: usize,
    pub p: Vec<usize>,
    pub b: Vec<f64>,
    pub replications: usize,
    /// Penalty grid for the multi-penalty estimator.
    pub penalty_grid: Vec<f64>,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            n: 400,
            p: vec![400; 3],
            b: vec![0.5, 1.0, 1.5],
            replications: 50,
            penalty_grid: dre_core::DEFAULT_LAMBDAS.iter().step_by(4).copied().collect(),
        }
    }
}

impl MonteCarloConfig {
    pub fn scenario(&self) -> Scenario {
        Scenario {
            n: self.n,
            p: self.p.clone(),
            b: self.b.clone(),
        }
    }
}

/// Checks made before any allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    /// Cap on random features per layer, K·P, and on baseline features.
    pub max_features: usize,
    pub max_memory_gb: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_features: 1_000_000,
            max_memory_gb: 16.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub model: DreConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub ablation: AblationConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
    #[serde(default)]
    pub theory: TheoryConfig,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Also write every trained DRE model under `models/`.
    #[serde(default)]
    pub save_models: bool,
    #[serde(default)]
    pub limits: Limits,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).context("parsing config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn noise_levels(&self) -> Vec<u32> {
        self.data.noise_levels.clone().unwrap_or_else(|| match self.kind {
            ExperimentKind::Fmnist => vec![0, 1, 2],
            _ => (1..=9).collect(),
        })
    }

    pub fn total_features(&self) -> usize {
        self.ablation
            .total_features
            .unwrap_or(self.model.blocks * self.model.features_per_block)
    }

    pub fn baseline_features(&self) -> usize {
        self.baseline.p_total.unwrap_or(self.model.layer_width())
    }

    /// Rejects invalid values, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("seeds: at least one seed is required");
        }
        self.model.validate().map_err(|e| anyhow::anyhow!("model: {e}"))?;
        if self.limits.max_features == 0 || !(self.limits.max_memory_gb > 0.0) {
            bail!("limits: max_features and max_memory_gb must be > 0");
        }
        let d = &self.data;
        if matches!(self.noise_levels().as_slice(), []) {
            bail!("data.noise_levels: at least one level is required");
        }
        match self.kind {
            ExperimentKind::Fmnist => {
                if d.pair_index > 9 {
                    bail!("data.pair_index: must be in 0..=9, got {}", d.pair_index);
                }
                if d.per_class_cap == 0 {
                    bail!("data.per_class_cap: must be >= 1");
                }
                if !(d.valid_fraction > 0.0 && d.valid_fraction < 1.0) {
                    bail!("data.valid_fraction: must be in (0, 1), got {}", d.valid_fraction);
                }
            }
            ExperimentKind::Simulate
            | ExperimentKind::AblationK
            | ExperimentKind::AblationDepth
            | ExperimentKind::Baseline => {
                if d.n == 0 || d.n % 3 != 0 {
                    bail!("data.n: must be a positive multiple of 3, got {}", d.n);
                }
                if d.d == 0 {
                    bail!("data.d: must be >= 1");
                }
            }
            ExperimentKind::TheoryCurves | ExperimentKind::MonteCarlo => {}
        }
        match self.kind {
            ExperimentKind::AblationK => {
                let total = self.total_features();
                if self.ablation.k_values.is_empty() {
                    bail!("ablation.k_values: at least one value is required");
                }
                if let Some(k) = self.ablation.k_values.iter().find(|&&k| k == 0 || total % k != 0) {
                    bail!("ablation.k_values: {k} does not divide total_features {total}");
                }
            }
            ExperimentKind::AblationDepth => {
                if self.ablation.depths.is_empty() || self.ablation.depths.contains(&0) {
                    bail!("ablation.depths: need at least one depth, all >= 1");
                }
            }
            ExperimentKind::TheoryCurves => {
                let t = &self.theory;
                if t.b.is_empty() || t.b.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
                    bail!("theory.b: need at least one signal strength, all > 0");
                }
                if t.c_grid.is_empty() || t.c_grid.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
                    bail!("theory.c_grid: need at least one ratio, all > 0");
                }
            }
            ExperimentKind::MonteCarlo => {
                let m = &self.monte_carlo;
                self.monte_carlo
                    .scenario()
                    .validate()
                    .map_err(|e| anyhow::anyhow!("monte_carlo: {e}"))?;
                if m.b.iter().any(|b| *b <= 0.0) {
                    bail!("monte_carlo.b: signal strengths must be > 0");
                }
                if m.replications < 2 {
                    bail!("monte_carlo.replications: must be >= 2");
                }
                if m.penalty_grid.is_empty() {
                    bail!("monte_carlo.penalty_grid: at least one penalty is required");
                }
            }
            _ => {}
        }
        if self.kind == ExperimentKind::Baseline || self.baseline.enabled {
            if self.baseline.p_total == Some(0) {
                bail!("baseline.p_total: must be >= 1");
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the config, ignoring where
    /// outputs go.
    pub fn hash(&self) -> String {
        let mut keyed = self.clone();
        keyed.output_dir = PathBuf::new();
        let canonical = serde_json::to_vec(&keyed).expect("config serializes");
        Sha256::digest(&canonical)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"kind": "simulate"}"#).unwrap();
        assert_eq!(cfg.seeds, vec![0]);
        assert_eq!(cfg.model.blocks, 500);
        assert_eq!(cfg.model.features_per_block, 100);
        assert_eq!(cfg.model.n_lambdas(), 29);
        assert_eq!(cfg.noise_levels(), (1..=9).collect::<Vec<_>>());
        assert_eq!(cfg.baseline_features(), 500 * 29);
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            (r#"{"kind": "simulate", "seeds": []}"#, "seeds"),
            (r#"{"kind": "simulate", "model": {"blocks": 0}}"#, "blocks"),
            (r#"{"kind": "simulate", "data": {"n": 10}}"#, "data.n"),
            (r#"{"kind": "fmnist", "data": {"pair_index": 12}}"#, "data.pair_index"),
            (r#"{"kind": "ablation_k", "ablation": {"k_values": [3]}}"#, "ablation.k_values"),
            (r#"{"kind": "ablation_depth", "ablation": {"depths": [0]}}"#, "ablation.depths"),
            (r#"{"kind": "theory_curves", "theory": {"b": []}}"#, "theory.b"),
            (r#"{"kind": "simulate", "data": {"noise_levels": []}}"#, "data.noise_levels"),
            (r#"{"kind": "simulate", "modle": {}}"#, "modle"),
            (r#"{"kind": "teleport"}"#, "teleport"),
        ];
        for (json, field) in cases {
            let err = format!("{:#}", ExperimentConfig::from_json(json).unwrap_err());
            assert!(err.contains(field), "{json}: {err}");
        }
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::from_json(r#"{"kind": "simulate", "seeds": [1, 2]}"#).unwrap();
        let b = ExperimentConfig::from_json(r#"{"seeds": [1, 2], "kind": "simulate"}"#).unwrap();
        let c = ExperimentConfig::from_json(r#"{"kind": "simulate", "seeds": [1, 3]}"#).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
