use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{load_labeled, DataSplit, LabeledImages};
use crate::rng::{Purpose, StreamKey};
use crate::{DreError, Result};

/// FMNIST label order.
pub const FMNIST_CLASSES: [&str; 10] = [
    "T-shirt/top",
    "Trouser",
    "Pullover",
    "Dress",
    "Coat",
    "Sandal",
    "Shirt",
    "Sneaker",
    "Bag",
    "Ankle boot",
];

#[derive(Debug, Clone, PartialEq)]
pub struct FmnistData {
    pub train: LabeledImages,
    pub test: LabeledImages,
}

impl FmnistData {
    /// Loads the four standard files (`train-images-idx3-ubyte`,
    /// `train-labels-idx1-ubyte`, `t10k-images-idx3-ubyte`,
    /// `t10k-labels-idx1-ubyte`) from `dir`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let train = load_labeled(
            dir.join("train-images-idx3-ubyte"),
            dir.join("train-labels-idx1-ubyte"),
        )?;
        let test = load_labeled(
            dir.join("t10k-images-idx3-ubyte"),
            dir.join("t10k-labels-idx1-ubyte"),
        )?;
        if train.images.pixels.ncols() != test.images.pixels.ncols() {
            return Err(DreError::Idx(format!(
                "train images have {} pixels, test images {}",
                train.images.pixels.ncols(),
                test.images.pixels.ncols()
            )));
        }
        Ok(Self { train, test })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    /// First class of the pair; the second is the next label, wrapping to 0.
    pub pair_index: u8,
    /// Maximum number of training-pool examples drawn per class.
    pub per_class_cap: usize,
    /// Share of each class's drawn examples held out for validation.
    pub valid_fraction: f64,
}

impl Default for PairConfig {
    fn default() -> Self {
        Self {
            pair_index: 0,
            per_class_cap: 2000,
            valid_fraction: 0.2,
        }
    }
}

impl PairConfig {
    pub fn classes(&self) -> (u8, u8) {
        (self.pair_index, (self.pair_index + 1) % 10)
    }
}

fn rows_of(set: &LabeledImages, idx: &[usize]) -> Array2<f64> {
    set.images.pixels.select(Axis(0), idx)
}

/// Builds the binary problem "class i vs class i+1 (mod 10)" with labels
/// 0 and 1. The training pool is capped per class and split per class into
/// train and validation parts, so both labels keep equal counts; all test
/// rows of the two classes form the test part.
pub fn make_binary_pair(data: &FmnistData, cfg: &PairConfig, seed: u64) -> Result<DataSplit> {
    if cfg.pair_index > 9 {
        return Err(DreError::InvalidConfig(format!(
            "pair index must be in 0..=9, got {}",
            cfg.pair_index
        )));
    }
    if cfg.per_class_cap == 0 {
        return Err(DreError::InvalidConfig("per_class_cap must be >= 1".into()));
    }
    if !(cfg.valid_fraction > 0.0 && cfg.valid_fraction < 1.0) {
        return Err(DreError::InvalidConfig(format!(
            "valid_fraction must be in (0, 1), got {}",
            cfg.valid_fraction
        )));
    }
    let (first, second) = cfg.classes();

    let mut train_idx = Vec::new();
    let mut train_y = Vec::new();
    let mut valid_idx = Vec::new();
    let mut valid_y = Vec::new();
    for (target, class) in [(0.0, first), (1.0, second)] {
        let mut pool: Vec<usize> = (0..data.train.labels.len())
            .filter(|&i| data.train.labels[i] == class)
            .collect();
        if pool.is_empty() {
            return Err(DreError::EmptyClass(class));
        }
        pool.shuffle(&mut StreamKey::new(seed, 0, class as u32).rng(Purpose::Subsample));
        pool.truncate(cfg.per_class_cap);
        let n_valid = ((pool.len() as f64 * cfg.valid_fraction).round() as usize).min(pool.len() - 1);
        let (v, t) = pool.split_at(n_valid);
        valid_idx.extend_from_slice(v);
        valid_y.extend(std::iter::repeat_n(target, v.len()));
        train_idx.extend_from_slice(t);
        train_y.extend(std::iter::repeat_n(target, t.len()));
    }

    let mut test_idx = Vec::new();
    let mut test_y = Vec::new();
    for (i, &l) in data.test.labels.iter().enumerate() {
        if l == first || l == second {
            test_idx.push(i);
            test_y.push(if l == first { 0.0 } else { 1.0 });
        }
    }
    if !test_y.contains(&0.0) {
        return Err(DreError::EmptyClass(first));
    }
    if !test_y.contains(&1.0) {
        return Err(DreError::EmptyClass(second));
    }

    let mix = |idx: Vec<usize>, y: Vec<f64>, part: u32| {
        let mut order: Vec<usize> = (0..idx.len()).collect();
        order.shuffle(&mut StreamKey::new(seed, 1, part).rng(Purpose::Shuffle));
        let idx: Vec<usize> = order.iter().map(|&o| idx[o]).collect();
        let y: Array1<f64> = order.iter().map(|&o| y[o]).collect();
        (idx, y)
    };
    let (train_idx, train_y) = mix(train_idx, train_y, 0);
    let (valid_idx, valid_y) = mix(valid_idx, valid_y, 1);

    DataSplit::new(
        rows_of(&data.train, &train_idx),
        train_y,
        rows_of(&data.train, &valid_idx),
        valid_y,
        rows_of(&data.test, &test_idx),
        Array1::from(test_y),
    )
}
