use ndarray::{s, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use super::DreConfig;
use crate::features::{FeatureBlock, FeatureBlockSpec};
use crate::ridge::{column_scales, fit_grid, RidgeGridFit};
use crate::rng::StreamKey;
use crate::{DreError, Result};

/// Train, validation and test inputs of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    pub train: Array2<f64>,
    pub valid: Array2<f64>,
    pub test: Array2<f64>,
}

impl Representation {
    pub fn width(&self) -> usize {
        self.train.ncols()
    }
}

/// One trained ensemble layer: K feature blocks, their ridge grids and the
/// frozen normalization scales.
#[derive(Debug, Clone, PartialEq)]
pub struct DreLayerModel {
    pub(crate) blocks: Vec<FeatureBlock>,
    pub(crate) fits: Vec<RidgeGridFit>,
    /// `K × L`, training-set uncentered standard deviations.
    pub(crate) scales: Array2<f64>,
}

impl DreLayerModel {
    pub fn from_parts(blocks: Vec<FeatureBlock>, fits: Vec<RidgeGridFit>, scales: Array2<f64>) -> Result<Self> {
        let k = blocks.len();
        if k == 0 || fits.len() != k || scales.nrows() != k {
            return Err(DreError::DimensionMismatch(format!(
                "layer has {} blocks, {} fits, {} scale rows",
                k,
                fits.len(),
                scales.nrows()
            )));
        }
        let l = fits[0].n_lambdas();
        let d = blocks[0].input_dim();
        for (b, f) in blocks.iter().zip(&fits) {
            if f.n_lambdas() != l || f.n_features() != b.n_features() || b.input_dim() != d {
                return Err(DreError::DimensionMismatch("inconsistent block shapes in layer".into()));
            }
        }
        if scales.ncols() != l || scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(DreError::Format("layer scales must be positive, one per (block, penalty)".into()));
        }
        Ok(Self { blocks, fits, scales })
    }

    pub fn blocks(&self) -> &[FeatureBlock] {
        &self.blocks
    }

    pub fn fits(&self) -> &[RidgeGridFit] {
        &self.fits
    }

    pub fn scales(&self) -> &Array2<f64> {
        &self.scales
    }

    pub fn input_dim(&self) -> usize {
        self.blocks[0].input_dim()
    }

    pub fn output_width(&self) -> usize {
        self.blocks.len() * self.scales.ncols()
    }

    /// Maps layer inputs to the normalized `n × K·L` prediction ensemble.
    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(DreError::DimensionMismatch(format!(
                "layer expects {} input columns, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        let parts: Vec<Array2<f64>> = self
            .blocks
            .par_iter()
            .zip(self.fits.par_iter())
            .enumerate()
            .map(|(k, (block, fit))| block_output(block, fit, self.scales.row(k), x))
            .collect::<Result<_>>()?;
        Ok(assemble(x.nrows(), &parts.iter().map(|p| p.view()).collect::<Vec<_>>()))
    }
}

fn block_output(
    block: &FeatureBlock,
    fit: &RidgeGridFit,
    scales: ArrayView1<'_, f64>,
    x: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    let z = block.apply(x)?;
    let mut yhat = fit.predict(z.view())?;
    normalize(&mut yhat, scales);
    Ok(yhat)
}

fn normalize(yhat: &mut Array2<f64>, scales: ArrayView1<'_, f64>) {
    for mut row in yhat.rows_mut() {
        row.iter_mut().zip(scales).for_each(|(v, s)| *v /= s);
    }
}

/// Places block `k`'s `n × L` output at columns `k·L .. (k+1)·L`.
fn assemble<'a>(rows: usize, parts: &[ArrayView2<'a, f64>]) -> Array2<f64> {
    let l = parts.first().map_or(0, |p| p.ncols());
    let mut out = Array2::zeros((rows, parts.len() * l));
    for (k, part) in parts.iter().enumerate() {
        out.slice_mut(s![.., k * l..(k + 1) * l]).assign(part);
    }
    out
}

struct BlockResult {
    block: FeatureBlock,
    fit: RidgeGridFit,
    scales: ndarray::Array1<f64>,
    train: Array2<f64>,
    valid: Array2<f64>,
    test: Array2<f64>,
}

/// Trains layer `layer_index` (0-based) on `input`, returning the layer and
/// the next representation. Blocks are trained in parallel; each block's
/// randomness comes from its own (seed, layer, block) stream.
pub fn train_layer(
    input: &Representation,
    y_train: ArrayView1<'_, f64>,
    cfg: &DreConfig,
    layer_index: usize,
) -> Result<(DreLayerModel, Representation)> {
    cfg.validate()?;
    let d = input.width();
    if input.valid.ncols() != d || input.test.ncols() != d {
        return Err(DreError::DimensionMismatch(
            "train, validation and test inputs must share a column count".into(),
        ));
    }
    if input.train.nrows() != y_train.len() {
        return Err(DreError::DimensionMismatch(format!(
            "{} training rows for {} targets",
            input.train.nrows(),
            y_train.len()
        )));
    }
    let results: Vec<BlockResult> = (0..cfg.blocks)
        .into_par_iter()
        .map(|k| -> Result<BlockResult> {
            let key = StreamKey::new(cfg.seed, layer_index as u32, k as u32);
            let spec = FeatureBlockSpec {
                gamma: cfg.gamma_source.gamma_for(key, k),
                p: cfg.features_per_block,
                bias_range: cfg.bias_range,
                key,
            };
            let block = FeatureBlock::draw(&spec, d)?;
            let z_train = block.apply(input.train.view())?;
            let fit = fit_grid(z_train.view(), y_train, &cfg.lambdas)?;
            let mut train = fit.predict(z_train.view())?;
            drop(z_train);
            let scales = column_scales(train.view());
            normalize(&mut train, scales.view());
            let valid = block_output(&block, &fit, scales.view(), input.valid.view())?;
            let test = block_output(&block, &fit, scales.view(), input.test.view())?;
            Ok(BlockResult {
                block,
                fit,
                scales,
                train,
                valid,
                test,
            })
        })
        .collect::<Result<_>>()?;

    let l = cfg.n_lambdas();
    let mut scales = Array2::zeros((cfg.blocks, l));
    for (k, r) in results.iter().enumerate() {
        scales.row_mut(k).assign(&r.scales);
    }
    let next = Representation {
        train: assemble(input.train.nrows(), &results.iter().map(|r| r.train.view()).collect::<Vec<_>>()),
        valid: assemble(input.valid.nrows(), &results.iter().map(|r| r.valid.view()).collect::<Vec<_>>()),
        test: assemble(input.test.nrows(), &results.iter().map(|r| r.test.view()).collect::<Vec<_>>()),
    };
    let (blocks, fits) = results.into_iter().map(|r| (r.block, r.fit)).unzip();
    Ok((DreLayerModel { blocks, fits, scales }, next))
}
