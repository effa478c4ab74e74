use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array1, Array2};
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::DataSplit;
use crate::rng::{Purpose, StreamKey};
use crate::{DreError, Result};

/// Weights of the planted neuron are redrawn until strictly inside ±3.
const WEIGHT_TRUNCATION: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-v).exp()),
        }
    }
}

impl FromStr for Activation {
    type Err = DreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(DreError::InvalidConfig(format!(
                "unknown activation '{other}' (expected relu or sigmoid)"
            ))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
        })
    }
}

/// Single-neuron data generating process `y = σ(Xw) + ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Total rows; split into equal thirds.
    pub n: usize,
    pub d: usize,
    pub noise_std: f64,
    pub activation: Activation,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n % 3 != 0 {
            return Err(DreError::InvalidConfig(format!(
                "n must be a positive multiple of 3, got {}",
                self.n
            )));
        }
        if self.d == 0 {
            return Err(DreError::InvalidConfig("d must be >= 1".into()));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(DreError::InvalidConfig(format!(
                "noise_std must be >= 0, got {}",
                self.noise_std
            )));
        }
        Ok(())
    }
}

/// Noise level τ of the simulation experiments maps to a noise standard
/// deviation of 0.1·τ.
pub fn noise_std_for_level(level: u32) -> f64 {
    0.1 * level as f64
}

/// Draws `X ~ N(0, I)`, truncated-normal `w`, and `y = σ(Xw) + ε`, then cuts
/// the rows into train, validation and test thirds in draw order.
pub fn simulate_single_neuron(cfg: &SimConfig) -> Result<DataSplit> {
    cfg.validate()?;
    let key = StreamKey::new(cfg.seed, 0, 0);

    let mut rng = key.rng(Purpose::Data);
    let x = Array2::<f64>::from_shape_fn((cfg.n, cfg.d), |_| StandardNormal.sample(&mut rng));

    let w = planted_weights(cfg);
    let mut y = x.dot(&w).mapv(|v| cfg.activation.apply(v));
    if cfg.noise_std > 0.0 {
        let noise = Normal::new(0.0, cfg.noise_std).map_err(|e| DreError::InvalidConfig(e.to_string()))?;
        let mut rng = key.rng(Purpose::Noise);
        y.iter_mut().for_each(|v| *v += noise.sample(&mut rng));
    }

    let third = cfg.n / 3;
    let rows = |a: usize| s![a * third..(a + 1) * third, ..];
    let elems = |a: usize| s![a * third..(a + 1) * third];
    DataSplit::new(
        x.slice(rows(0)).to_owned(),
        y.slice(elems(0)).to_owned(),
        x.slice(rows(1)).to_owned(),
        y.slice(elems(1)).to_owned(),
        x.slice(rows(2)).to_owned(),
        y.slice(elems(2)).to_owned(),
    )
}

/// The planted neuron's weight vector for a config.
pub fn planted_weights(cfg: &SimConfig) -> Array1<f64> {
    let mut rng = StreamKey::new(cfg.seed, 0, 0).rng(Purpose::Weights);
    Array1::<f64>::from_shape_fn(cfg.d, |_| loop {
        let v: f64 = StandardNormal.sample(&mut rng);
        if v.abs() < WEIGHT_TRUNCATION {
            break v;
        }
    })
}
