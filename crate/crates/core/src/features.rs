//! Gaussian-ReLU random feature maps.
//!
//! Feature `p` of a block is `relu(x·ω_p / √D + b_p)` with
//! `ω_p ~ N(0, γ I_D)` and `b_p ~ U(-a, a)`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::linalg::matmul;
use crate::rng::{Purpose, StreamKey};
use crate::{DreError, Result};

pub const DEFAULT_BIAS_RANGE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBlockSpec {
    /// Input-weight variance γ.
    pub gamma: f64,
    /// Number of features P.
    pub p: usize,
    /// Half-width a of the bias distribution.
    pub bias_range: f64,
    pub key: StreamKey,
}

impl FeatureBlockSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(DreError::InvalidConfig(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if self.p == 0 {
            return Err(DreError::InvalidConfig("a feature block needs p >= 1".into()));
        }
        if !(self.bias_range.is_finite() && self.bias_range > 0.0) {
            return Err(DreError::InvalidConfig(format!(
                "bias range must be > 0, got {}",
                self.bias_range
            )));
        }
        Ok(())
    }
}

/// One drawn random-feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBlock {
    /// `D × P`, one column per feature.
    weights: Array2<f64>,
    biases: Array1<f64>,
    /// Weight variance of each column.
    gammas: Vec<f64>,
}

impl FeatureBlock {
    /// Draws a block with one shared γ.
    pub fn draw(spec: &FeatureBlockSpec, input_dim: usize) -> Result<Self> {
        spec.validate()?;
        Self::draw_with_gammas(&vec![spec.gamma; spec.p], input_dim, spec.bias_range, spec.key)
    }

    /// Draws a block whose columns each have their own variance.
    pub fn draw_with_gammas(
        gammas: &[f64],
        input_dim: usize,
        bias_range: f64,
        key: StreamKey,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(DreError::DimensionMismatch("input dimension must be >= 1".into()));
        }
        if gammas.is_empty() {
            return Err(DreError::InvalidConfig("a feature block needs p >= 1".into()));
        }
        if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(DreError::InvalidConfig(format!("gamma must be > 0, got {g}")));
        }
        if !(bias_range.is_finite() && bias_range > 0.0) {
            return Err(DreError::InvalidConfig(format!("bias range must be > 0, got {bias_range}")));
        }
        let p = gammas.len();
        let mut rng = key.rng(Purpose::Weights);
        // Column-major fill so a column's content does not depend on P.
        let mut weights = Array2::<f64>::zeros((input_dim, p));
        for (mut col, &g) in weights.axis_iter_mut(Axis(1)).zip(gammas) {
            let sd = g.sqrt();
            for w in col.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *w = sd * z;
            }
        }
        let uniform = Uniform::new(-bias_range, bias_range)
            .map_err(|e| DreError::InvalidConfig(e.to_string()))?;
        let mut rng = key.rng(Purpose::Biases);
        let biases = Array1::from_shape_fn(p, |_| uniform.sample(&mut rng));
        Ok(Self {
            weights,
            biases,
            gammas: gammas.to_vec(),
        })
    }

    pub fn from_parts(weights: Array2<f64>, biases: Array1<f64>, gammas: Vec<f64>) -> Result<Self> {
        if weights.ncols() != biases.len() || gammas.len() != biases.len() {
            return Err(DreError::DimensionMismatch(format!(
                "weights have {} columns, {} biases, {} gammas",
                weights.ncols(),
                biases.len(),
                gammas.len()
            )));
        }
        if !weights.iter().chain(biases.iter()).all(|v| v.is_finite()) {
            return Err(DreError::NonFinite("feature block"));
        }
        Ok(Self { weights, biases, gammas })
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn biases(&self) -> &Array1<f64> {
        &self.biases
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// Mean weight variance across columns.
    pub fn gamma(&self) -> f64 {
        self.gammas.iter().sum::<f64>() / self.gammas.len() as f64
    }

    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.weights.ncols()
    }

    /// `relu(X W / √D + 1 bᵀ)`, shape `n × P`.
    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(DreError::DimensionMismatch(format!(
                "feature block expects {} input columns, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        let scale = 1.0 / (self.input_dim() as f64).sqrt();
        let mut z = matmul(x, self.weights.view());
        for mut row in z.axis_iter_mut(Axis(0)) {
            for (v, b) in row.iter_mut().zip(self.biases.iter()) {
                *v = (*v * scale + b).max(0.0);
            }
        }
        Ok(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, concatenate};

    fn spec(gamma: f64, p: usize, block: u32) -> FeatureBlockSpec {
        FeatureBlockSpec {
            gamma,
            p,
            bias_range: DEFAULT_BIAS_RANGE,
            key: StreamKey::new(11, 0, block),
        }
    }

    #[test]
    fn shapes_and_bias_range() {
        let b = FeatureBlock::draw(&spec(1.0, 4, 0), 3).unwrap();
        assert_eq!(b.weights().dim(), (3, 4));
        assert_eq!(b.biases().len(), 4);
        assert!(b.biases().iter().all(|v| v.abs() < 1.0));
        assert_eq!(b, FeatureBlock::draw(&spec(1.0, 4, 0), 3).unwrap());
    }

    #[test]
    fn draw_order_does_not_matter() {
        let a1 = FeatureBlock::draw(&spec(1.0, 5, 1), 4).unwrap();
        let a0 = FeatureBlock::draw(&spec(1.0, 5, 0), 4).unwrap();
        let b0 = FeatureBlock::draw(&spec(1.0, 5, 0), 4).unwrap();
        let b1 = FeatureBlock::draw(&spec(1.0, 5, 1), 4).unwrap();
        assert_eq!(a0, b0);
        assert_eq!(a1, b1);
        assert_ne!(a0, a1);
    }

    #[test]
    fn weight_variance_scales_with_gamma() {
        let var = |g: f64| {
            let b = FeatureBlock::draw(&spec(g, 100, 0), 100).unwrap();
            b.weights().iter().map(|w| w * w).sum::<f64>() / 1e4
        };
        let ratio = var(0.25) / var(1.0);
        assert!((ratio / 0.25 - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn zero_input_gives_relu_bias() {
        let b = FeatureBlock::draw(&spec(1.0, 6, 2), 3).unwrap();
        let z = b.apply(Array2::zeros((4, 3)).view()).unwrap();
        for row in z.rows() {
            for (v, bias) in row.iter().zip(b.biases()) {
                assert_eq!(*v, bias.max(0.0));
            }
        }
    }

    #[test]
    fn hand_evaluated_scalar() {
        let b = FeatureBlock::from_parts(array![[1.0]], array![-1.0], vec![1.0]).unwrap();
        let z = b.apply(array![[4.0]].view()).unwrap();
        assert_eq!(z, array![[3.0]]);
        assert!(b.apply(array![[1.0, 2.0]].view()).is_err());
    }

    #[test]
    fn rows_are_independent() {
        let b = FeatureBlock::draw(&spec(0.7, 8, 3), 5).unwrap();
        let x1 = Array2::from_shape_fn((3, 5), |(i, j)| (i as f64 - j as f64) * 0.3);
        let x2 = Array2::from_shape_fn((2, 5), |(i, j)| (i * j) as f64 * 0.1 - 0.2);
        let both = concatenate(Axis(0), &[x1.view(), x2.view()]).unwrap();
        let z = b.apply(both.view()).unwrap();
        let z12 = concatenate(
            Axis(0),
            &[b.apply(x1.view()).unwrap().view(), b.apply(x2.view()).unwrap().view()],
        )
        .unwrap();
        assert_eq!(z, z12);
        assert!(z.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn invalid_specs() {
        assert!(FeatureBlock::draw(&spec(0.0, 3, 0), 2).is_err());
        assert!(FeatureBlock::draw(&spec(1.0, 0, 0), 2).is_err());
        assert!(FeatureBlock::draw(&spec(1.0, 3, 0), 0).is_err());
    }
}
