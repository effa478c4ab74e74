use serde::{Deserialize, Serialize};

use crate::features::DEFAULT_BIAS_RANGE;
use crate::ridge::validate_lambdas;
use crate::rng::{Purpose, StreamKey};
use crate::{DreError, Result, DEFAULT_LAMBDAS};
use rand_distr::{Distribution, Uniform};

/// How each block's input-weight variance γ is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GammaSource {
    /// One draw from `U(lo, hi)` per block.
    Uniform { lo: f64, hi: f64 },
    /// Block `k` takes `values[k % len]`.
    Grid { values: Vec<f64> },
}

impl Default for GammaSource {
    fn default() -> Self {
        GammaSource::Uniform { lo: 0.25, hi: 1.25 }
    }
}

impl GammaSource {
    pub fn validate(&self) -> Result<()> {
        match self {
            GammaSource::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo > 0.0 && lo < hi) {
                    return Err(DreError::InvalidConfig(format!(
                        "gamma bounds must satisfy 0 < lo < hi, got ({lo}, {hi})"
                    )));
                }
            }
            GammaSource::Grid { values } => {
                if values.is_empty() {
                    return Err(DreError::InvalidConfig("gamma grid is empty".into()));
                }
                if let Some(g) = values.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
                    return Err(DreError::InvalidConfig(format!("gamma grid entry {g} is not > 0")));
                }
            }
        }
        Ok(())
    }

    /// γ for slot `index` under `key`.
    pub fn gamma_for(&self, key: StreamKey, index: usize) -> f64 {
        match self {
            GammaSource::Uniform { lo, hi } => {
                let dist = Uniform::new(*lo, *hi).expect("validated bounds");
                dist.sample(&mut key.rng(Purpose::Gamma))
            }
            GammaSource::Grid { values } => values[index % values.len()],
        }
    }

    /// `count` values for the columns of a single block.
    pub fn gammas_for_columns(&self, key: StreamKey, count: usize) -> Vec<f64> {
        match self {
            GammaSource::Uniform { lo, hi } => {
                let dist = Uniform::new(*lo, *hi).expect("validated bounds");
                let mut rng = key.rng(Purpose::Gamma);
                (0..count).map(|_| dist.sample(&mut rng)).collect()
            }
            GammaSource::Grid { values } => (0..count).map(|j| values[j % values.len()]).collect(),
        }
    }
}

/// Architecture and training settings of a DRE network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DreConfig {
    /// Number of ensemble layers M before the final ridge.
    pub depth: usize,
    /// Feature blocks per layer, K.
    pub blocks: usize,
    /// Random features per block, P.
    pub features_per_block: usize,
    /// Ridge penalty grid Λ, strictly increasing.
    pub lambdas: Vec<f64>,
    pub gamma_source: GammaSource,
    pub bias_range: f64,
    pub seed: u64,
    /// Fit and keep a final ridge after every layer, not only the last.
    pub per_depth: bool,
}

impl Default for DreConfig {
    fn default() -> Self {
        Self {
            depth: 2,
            blocks: 500,
            features_per_block: 100,
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            gamma_source: GammaSource::default(),
            bias_range: DEFAULT_BIAS_RANGE,
            seed: 0,
            per_depth: true,
        }
    }
}

impl DreConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(DreError::InvalidConfig("depth must be >= 1".into()));
        }
        if self.blocks == 0 {
            return Err(DreError::InvalidConfig("blocks must be >= 1".into()));
        }
        if self.features_per_block == 0 {
            return Err(DreError::InvalidConfig("features_per_block must be >= 1".into()));
        }
        validate_lambdas(&self.lambdas)?;
        self.gamma_source.validate()?;
        if !(self.bias_range.is_finite() && self.bias_range > 0.0) {
            return Err(DreError::InvalidConfig(format!(
                "bias_range must be > 0, got {}",
                self.bias_range
            )));
        }
        Ok(())
    }

    pub fn n_lambdas(&self) -> usize {
        self.lambdas.len()
    }

    /// Width of every layer output, K·L.
    pub fn layer_width(&self) -> usize {
        self.blocks * self.lambdas.len()
    }

    /// Rough peak memory in bytes for training on `rows` total rows with
    /// `input_dim` raw features: stored weights and coefficients of all
    /// layers plus the widest representation and one Gram matrix.
    pub fn memory_estimate(&self, input_dim: usize, rows: usize) -> f64 {
        let (k, p, l, w) = (
            self.blocks as f64,
            self.features_per_block as f64,
            self.n_lambdas() as f64,
            self.layer_width() as f64,
        );
        let mut params = 0.0;
        for m in 0..self.depth {
            let d = if m == 0 { input_dim as f64 } else { w };
            params += k * p * (d + 1.0 + l) + k * l;
        }
        params += w * l;
        let activations = 2.0 * rows as f64 * w;
        let gram = (rows as f64).min(w).powi(2) + rows as f64 * w;
        8.0 * (params + activations + gram)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_paper_configuration() {
        let c = DreConfig::default();
        assert_eq!((c.blocks, c.features_per_block, c.n_lambdas()), (500, 100, 29));
        assert_eq!(c.layer_width(), 14500);
        c.validate().unwrap();
    }

    #[test]
    fn invalid_fields() {
        let bad = [
            DreConfig { depth: 0, ..Default::default() },
            DreConfig { blocks: 0, ..Default::default() },
            DreConfig { features_per_block: 0, ..Default::default() },
            DreConfig { lambdas: vec![1.0, 0.5], ..Default::default() },
            DreConfig { lambdas: vec![], ..Default::default() },
            DreConfig { bias_range: 0.0, ..Default::default() },
            DreConfig {
                gamma_source: GammaSource::Uniform { lo: 1.0, hi: 0.5 },
                ..Default::default()
            },
            DreConfig {
                gamma_source: GammaSource::Grid { values: vec![] },
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn gamma_draws_stay_in_bounds_and_repeat() {
        let src = GammaSource::default();
        for k in 0..50 {
            let key = StreamKey::new(3, 1, k);
            let g = src.gamma_for(key, k as usize);
            assert!((0.25..1.25).contains(&g));
            assert_eq!(g, src.gamma_for(key, k as usize));
        }
        let grid = GammaSource::Grid { values: vec![0.5, 2.0] };
        assert_eq!(grid.gamma_for(StreamKey::new(0, 0, 0), 3), 2.0);
    }

    #[test]
    fn json_round_trip() {
        let c = DreConfig {
            gamma_source: GammaSource::Grid { values: vec![0.5, 1.0] },
            ..Default::default()
        };
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<DreConfig>(&s).unwrap(), c);
        let partial: DreConfig = serde_json::from_str(r#"{"blocks": 7}"#).unwrap();
        assert_eq!(partial.blocks, 7);
        assert_eq!(partial.features_per_block, 100);
    }
}
