use ndarray::Array1;

use super::config::GammaSource;
use super::metrics::{evaluate, Metrics};
use super::model::FinalHead;
use super::layer::Representation;
use crate::dataio::DataSplit;
use crate::features::{FeatureBlock, DEFAULT_BIAS_RANGE};
use crate::rng::StreamKey;
use crate::{DreError, Result};

/// Layer index reserved for the baseline's random stream, so it never
/// shares draws with a DRE layer under the same seed.
pub const BASELINE_LAYER: u32 = u32::MAX;

/// Outcome of the flat random-feature ridge baseline.
#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub metrics: Metrics,
    pub lambda_star: f64,
    pub valid_mse: f64,
    pub test_predictions: Array1<f64>,
    pub block: FeatureBlock,
}

/// One block of `p_total` random ReLU features, each with its own γ,
/// followed by a single ridge grid tuned on validation error.
pub fn flat_random_feature_baseline(
    split: &DataSplit,
    p_total: usize,
    gamma_source: &GammaSource,
    lambdas: &[f64],
    seed: u64,
) -> Result<BaselineResult> {
    if p_total == 0 {
        return Err(DreError::InvalidConfig("baseline needs p_total >= 1".into()));
    }
    gamma_source.validate()?;
    let key = StreamKey::new(seed, BASELINE_LAYER, 0);
    let gammas = gamma_source.gammas_for_columns(key, p_total);
    let block = FeatureBlock::draw_with_gammas(&gammas, split.dim(), DEFAULT_BIAS_RANGE, key)?;
    let rep = Representation {
        train: block.apply(split.x_train().view())?,
        valid: block.apply(split.x_valid().view())?,
        test: block.apply(split.x_test().view())?,
    };
    let out = FinalHead::train(&rep, split.y_train().view(), split.y_valid().view(), lambdas)?;
    let y_mean = split.y_train().mean().unwrap_or(0.0);
    let metrics = evaluate(out.test.view(), split.y_test().view(), y_mean)?;
    Ok(BaselineResult {
        metrics,
        lambda_star: out.head.lambda_star(),
        valid_mse: out.head.valid_mse(),
        test_predictions: out.test,
        block,
    })
}
