//! The deep ensemble network: stacked ridge-ensemble layers, a final ridge
//! per depth and the flat random-feature baseline.

mod baseline;
mod config;
mod format;
mod layer;
mod metrics;
mod model;

pub use baseline::{flat_random_feature_baseline, BaselineResult, BASELINE_LAYER};
pub use config::{DreConfig, GammaSource};
pub use format::{read_model, write_model, FORMAT_VERSION, MODEL_MAGIC};
pub use layer::{train_layer, DreLayerModel, Representation};
pub use metrics::{argmin_first, evaluate, Metrics, CLASSIFICATION_THRESHOLD};
pub use model::{DreModel, FinalHead, ModelSummary, Trained};
