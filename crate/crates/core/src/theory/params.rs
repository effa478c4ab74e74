use serde::{Deserialize, Serialize};

use crate::{DreError, Result};

/// Asymptotic scenario: K feature groups with aspect ratios `c(k) = p(k)/n`
/// and signal strengths `b*(k)`, sharing a scaled-identity covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
}

impl TheoryParams {
    /// Identity covariance.
    pub fn new(c: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::with_moments(c, b, [1.0, 1.0, 1.0])
    }

    pub fn with_moments(c: Vec<f64>, b: Vec<f64>, sigma: [f64; 3]) -> Result<Self> {
        let params = Self {
            c,
            b,
            sigma1: sigma[0],
            sigma2: sigma[1],
            sigma3: sigma[2],
        };
        params.validate()?;
        Ok(params)
    }

    /// Homogeneous ratio `c` for every group.
    pub fn uniform(c: f64, b: Vec<f64>) -> Result<Self> {
        Self::new(vec![c; b.len()], b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.b.is_empty() {
            return Err(DreError::InvalidConfig("at least one group is required".into()));
        }
        if self.c.len() != self.b.len() {
            return Err(DreError::DimensionMismatch(format!(
                "{} aspect ratios for {} signal strengths",
                self.c.len(),
                self.b.len()
            )));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if let Some(c) = self.c.iter().find(|&&c| !positive(c)) {
            return Err(DreError::InvalidConfig(format!("aspect ratio {c} is not > 0")));
        }
        if let Some(b) = self.b.iter().find(|&&b| !positive(b)) {
            return Err(DreError::InvalidConfig(format!("signal strength {b} is not > 0")));
        }
        let s = self.sigma1;
        if !positive(s) || !positive(self.sigma2) || !positive(self.sigma3) {
            return Err(DreError::InvalidConfig("spectral moments must be > 0".into()));
        }
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
        if !close(self.sigma2, s * s) || !close(self.sigma3, s * s * s) {
            return Err(DreError::InvalidConfig(
                "only scaled-identity covariances are supported (sigma2 = sigma1^2, sigma3 = sigma1^3)".into(),
            ));
        }
        Ok(())
    }

    pub fn groups(&self) -> usize {
        self.b.len()
    }

    /// `b̄* = Σ_k b*(k) σ₁`
    pub fn b_bar(&self) -> f64 {
        self.b.iter().sum::<f64>() * self.sigma1
    }

    /// Total aspect ratio of all groups jointly, `Σ_k c(k)`.
    pub fn c_total(&self) -> f64 {
        self.c.iter().sum()
    }

    pub(crate) fn check_group(&self, k: usize) -> Result<()> {
        if k >= self.groups() {
            return Err(DreError::InvalidConfig(format!(
                "group {k} out of range for {} groups",
                self.groups()
            )));
        }
        Ok(())
    }

    /// Requires equal group sizes, as the flat-model formulas assume.
    pub(crate) fn check_equal_sizes(&self) -> Result<()> {
        let c0 = self.c[0];
        if self.c.iter().any(|&c| (c - c0).abs() > 1e-12 * c0) {
            return Err(DreError::InvalidConfig(
                "flat-model formulas need equal group sizes (all c(k) equal)".into(),
            ));
        }
        Ok(())
    }

    /// One group holding every feature: ratio `Σ c(k)` and signal `b̄*/σ₁`.
    pub fn flattened(&self) -> Self {
        Self {
            c: vec![self.c_total()],
            b: vec![self.b_bar() / self.sigma1],
            sigma1: self.sigma1,
            sigma2: self.sigma2,
            sigma3: self.sigma3,
        }
    }
}
