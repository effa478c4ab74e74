use std::fmt;

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};

use super::layer::{train_layer, DreLayerModel, Representation};
use super::metrics::argmin_first;
use super::DreConfig;
use crate::dataio::DataSplit;
use crate::ridge::{fit_grid, RidgeGridFit};
use crate::{DreError, Result};

/// The output ridge on top of a layer, with its validation-selected penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalHead {
    pub(crate) fit: RidgeGridFit,
    pub(crate) lambda_star_index: usize,
    pub(crate) valid_mse: f64,
}

pub(crate) struct HeadOutput {
    pub(crate) head: FinalHead,
    pub(crate) valid: Array1<f64>,
    pub(crate) test: Array1<f64>,
}

impl FinalHead {
    pub fn from_parts(fit: RidgeGridFit, lambda_star_index: usize, valid_mse: f64) -> Result<Self> {
        if lambda_star_index >= fit.n_lambdas() {
            return Err(DreError::Format(format!(
                "lambda* index {lambda_star_index} out of range for {} penalties",
                fit.n_lambdas()
            )));
        }
        Ok(Self {
            fit,
            lambda_star_index,
            valid_mse,
        })
    }

    pub(crate) fn train(rep: &Representation, y_train: ArrayView1<'_, f64>, y_valid: ArrayView1<'_, f64>, lambdas: &[f64]) -> Result<HeadOutput> {
        let fit = fit_grid(rep.train.view(), y_train, lambdas)?;
        let all = fit.predict(rep.valid.view())?;
        let sse: Vec<f64> = all
            .axis_iter(Axis(1))
            .map(|col| col.iter().zip(y_valid).map(|(p, y)| (y - p).powi(2)).sum())
            .collect();
        let best = argmin_first(&sse).ok_or(DreError::NonFinite("validation error"))?;
        let valid = fit.predict_one(rep.valid.view(), best)?;
        let test = fit.predict_one(rep.test.view(), best)?;
        let valid_mse = mse(valid.view(), y_valid);
        Ok(HeadOutput {
            head: FinalHead {
                fit,
                lambda_star_index: best,
                valid_mse,
            },
            valid,
            test,
        })
    }

    pub fn fit(&self) -> &RidgeGridFit {
        &self.fit
    }

    pub fn lambda_star_index(&self) -> usize {
        self.lambda_star_index
    }

    pub fn lambda_star(&self) -> f64 {
        self.fit.lambdas()[self.lambda_star_index]
    }

    /// Validation MSE at λ*, recorded at training time.
    pub fn valid_mse(&self) -> f64 {
        self.valid_mse
    }

    fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        self.fit.predict_one(x, self.lambda_star_index)
    }
}

fn mse(pred: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
    pred.iter().zip(y).map(|(p, y)| (y - p).powi(2)).sum::<f64>() / y.len().max(1) as f64
}

/// A trained DRE network.
#[derive(Debug, Clone, PartialEq)]
pub struct DreModel {
    pub(crate) config: DreConfig,
    pub(crate) input_dim: usize,
    pub(crate) layers: Vec<DreLayerModel>,
    /// One head per depth `1..=M` with per-depth tuning, otherwise only the
    /// depth-M head.
    pub(crate) heads: Vec<FinalHead>,
}

/// A freshly trained model with the validation and test predictions it
/// produced during training.
#[derive(Debug, Clone)]
pub struct Trained {
    pub model: DreModel,
    pub valid_predictions: Array1<f64>,
    pub test_predictions: Array1<f64>,
}

impl DreModel {
    /// Trains all layers in sequence, fits the final ridge (after every
    /// layer when `per_depth` is set) and picks λ* on validation error.
    pub fn train(split: &DataSplit, cfg: &DreConfig) -> Result<Trained> {
        cfg.validate()?;
        let mut rep = Representation {
            train: split.x_train().clone(),
            valid: split.x_valid().clone(),
            test: split.x_test().clone(),
        };
        let mut layers = Vec::with_capacity(cfg.depth);
        let mut heads = Vec::new();
        let mut last = None;
        for m in 0..cfg.depth {
            let (layer, next) = train_layer(&rep, split.y_train().view(), cfg, m)?;
            layers.push(layer);
            rep = next;
            if cfg.per_depth || m + 1 == cfg.depth {
                let out = FinalHead::train(&rep, split.y_train().view(), split.y_valid().view(), &cfg.lambdas)?;
                heads.push(out.head);
                last = Some((out.valid, out.test));
            }
        }
        let (valid_predictions, test_predictions) = last.expect("depth >= 1");
        Ok(Trained {
            model: DreModel {
                config: cfg.clone(),
                input_dim: split.dim(),
                layers,
                heads,
            },
            valid_predictions,
            test_predictions,
        })
    }

    pub fn from_parts(config: DreConfig, input_dim: usize, layers: Vec<DreLayerModel>, heads: Vec<FinalHead>) -> Result<Self> {
        config.validate()?;
        if layers.len() != config.depth {
            return Err(DreError::Format(format!(
                "config depth {} but {} layers stored",
                config.depth,
                layers.len()
            )));
        }
        let expected_heads = if config.per_depth { config.depth } else { 1 };
        if heads.len() != expected_heads {
            return Err(DreError::Format(format!(
                "expected {expected_heads} final fits, found {}",
                heads.len()
            )));
        }
        let mut width = input_dim;
        for (m, layer) in layers.iter().enumerate() {
            if layer.input_dim() != width {
                return Err(DreError::Format(format!(
                    "layer {} expects width {} but receives {width}",
                    m + 1,
                    layer.input_dim()
                )));
            }
            width = layer.output_width();
        }
        if heads.iter().any(|h| h.fit.n_features() != config.layer_width()) {
            return Err(DreError::Format("final fit width differs from K*L".into()));
        }
        Ok(Self {
            config,
            input_dim,
            layers,
            heads,
        })
    }

    pub fn config(&self) -> &DreConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[DreLayerModel] {
        &self.layers
    }

    pub fn heads(&self) -> &[FinalHead] {
        &self.heads
    }

    pub fn has_per_depth(&self) -> bool {
        self.heads.len() == self.layers.len()
    }

    /// The head used at `depth` (1-based), if stored.
    pub fn head(&self, depth: usize) -> Option<&FinalHead> {
        if depth == 0 || depth > self.depth() {
            None
        } else if self.has_per_depth() {
            self.heads.get(depth - 1)
        } else if depth == self.depth() {
            self.heads.last()
        } else {
            None
        }
    }

    pub fn final_head(&self) -> &FinalHead {
        self.heads.last().expect("model has a final head")
    }

    pub fn lambda_star(&self) -> f64 {
        self.final_head().lambda_star()
    }

    /// Forward pass through the first `depth` layers (default: all) and the
    /// matching final ridge at its λ*.
    pub fn predict(&self, x: ArrayView2<'_, f64>, depth: Option<usize>) -> Result<Array1<f64>> {
        let depth = depth.unwrap_or(self.depth());
        if depth == 0 || depth > self.depth() {
            return Err(DreError::InvalidConfig(format!(
                "depth {depth} out of range 1..={}",
                self.depth()
            )));
        }
        let head = self.head(depth).ok_or_else(|| {
            DreError::InvalidConfig(format!(
                "no final fit stored for depth {depth}; train with per_depth enabled"
            ))
        })?;
        if x.ncols() != self.input_dim {
            return Err(DreError::DimensionMismatch(format!(
                "model expects {} input columns, got {}",
                self.input_dim,
                x.ncols()
            )));
        }
        let mut rep = self.layers[0].forward(x)?;
        for layer in &self.layers[1..depth] {
            rep = layer.forward(rep.view())?;
        }
        head.predict(rep.view())
    }

    /// Validation MSE of every stored depth, evaluated on `split`.
    pub fn depth_scores(&self, split: &DataSplit) -> Result<Vec<f64>> {
        if !self.has_per_depth() {
            return Err(DreError::InvalidConfig(
                "per-depth final fits are absent; train with per_depth enabled".into(),
            ));
        }
        let y = split.y_valid().view();
        let mut scores = Vec::with_capacity(self.depth());
        let mut rep = split.x_valid().clone();
        for (layer, head) in self.layers.iter().zip(&self.heads) {
            rep = layer.forward(rep.view())?;
            scores.push(mse(head.predict(rep.view())?.view(), y));
        }
        Ok(scores)
    }

    /// Depth with the lowest validation MSE; ties go to the shallower model.
    pub fn select_depth(&self, split: &DataSplit) -> Result<usize> {
        let scores = self.depth_scores(split)?;
        argmin_first(&scores)
            .map(|i| i + 1)
            .ok_or(DreError::NonFinite("validation error"))
    }

    pub fn summary(&self) -> ModelSummary {
        let gammas: Vec<(f64, f64, f64)> = self
            .layers
            .iter()
            .map(|layer| {
                let g: Vec<f64> = layer.blocks.iter().map(|b| b.gamma()).collect();
                let min = g.iter().copied().fold(f64::INFINITY, f64::min);
                let max = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (min, g.iter().sum::<f64>() / g.len() as f64, max)
            })
            .collect();
        ModelSummary {
            depth: self.depth(),
            input_dim: self.input_dim,
            blocks: self.config.blocks,
            features_per_block: self.config.features_per_block,
            n_lambdas: self.config.n_lambdas(),
            gamma_per_layer: gammas,
            lambda_star: self.lambda_star(),
            lambda_star_index: self.final_head().lambda_star_index(),
            depth_valid_mse: self
                .has_per_depth()
                .then(|| self.heads.iter().map(|h| h.valid_mse).collect()),
        }
    }
}

/// What `inspect` reports about a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub depth: usize,
    pub input_dim: usize,
    pub blocks: usize,
    pub features_per_block: usize,
    pub n_lambdas: usize,
    /// (min, mean, max) block γ per layer.
    pub gamma_per_layer: Vec<(f64, f64, f64)>,
    pub lambda_star: f64,
    pub lambda_star_index: usize,
    pub depth_valid_mse: Option<Vec<f64>>,
}

impl fmt::Display for ModelSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "depth M: {}", self.depth)?;
        writeln!(f, "input dimension: {}", self.input_dim)?;
        for (m, (lo, mean, hi)) in self.gamma_per_layer.iter().enumerate() {
            writeln!(
                f,
                "layer {}: K={} P={} L={} gamma min={lo:.4} mean={mean:.4} max={hi:.4}",
                m + 1,
                self.blocks,
                self.features_per_block,
                self.n_lambdas
            )?;
        }
        writeln!(f, "lambda*: {} (grid index {})", self.lambda_star, self.lambda_star_index)?;
        if let Some(scores) = &self.depth_valid_mse {
            for (d, s) in scores.iter().enumerate() {
                writeln!(f, "depth {} validation mse: {s:.6}", d + 1)?;
            }
        }
        Ok(())
    }
}
