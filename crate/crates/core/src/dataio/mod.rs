//! Datasets: the simulated single-neuron process, FMNIST binary pairs read
//! from IDX files, feature-noise injection and random splits.

mod fmnist;
mod idx;
mod sim;

pub use fmnist::{make_binary_pair, FmnistData, PairConfig, FMNIST_CLASSES};
pub use idx::{
    load_labeled, parse_idx, read_idx, write_idx_images, write_idx_labels, IdxFile, ImageSet,
    LabeledImages,
};
pub use sim::{noise_std_for_level, planted_weights, simulate_single_neuron, Activation, SimConfig};

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

use crate::rng::{stream_rng, Purpose, StreamKey};
use crate::{DreError, Result};

/// Train, validation and test samples sharing one feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSplit {
    x_train: Array2<f64>,
    y_train: Array1<f64>,
    x_valid: Array2<f64>,
    y_valid: Array1<f64>,
    x_test: Array2<f64>,
    y_test: Array1<f64>,
}

impl DataSplit {
    pub fn new(
        x_train: Array2<f64>,
        y_train: Array1<f64>,
        x_valid: Array2<f64>,
        y_valid: Array1<f64>,
        x_test: Array2<f64>,
        y_test: Array1<f64>,
    ) -> Result<Self> {
        let d = x_train.ncols();
        for (name, x, y) in [
            ("train", &x_train, &y_train),
            ("valid", &x_valid, &y_valid),
            ("test", &x_test, &y_test),
        ] {
            if x.ncols() != d {
                return Err(DreError::DimensionMismatch(format!(
                    "{name} features have {} columns, train has {d}",
                    x.ncols()
                )));
            }
            if x.nrows() != y.len() {
                return Err(DreError::DimensionMismatch(format!(
                    "{name} has {} rows but {} labels",
                    x.nrows(),
                    y.len()
                )));
            }
            if !x.iter().chain(y.iter()).all(|v| v.is_finite()) {
                return Err(DreError::NonFinite("data split"));
            }
        }
        Ok(Self {
            x_train,
            y_train,
            x_valid,
            y_valid,
            x_test,
            y_test,
        })
    }

    pub fn dim(&self) -> usize {
        self.x_train.ncols()
    }

    pub fn x_train(&self) -> &Array2<f64> {
        &self.x_train
    }
    pub fn y_train(&self) -> &Array1<f64> {
        &self.y_train
    }
    pub fn x_valid(&self) -> &Array2<f64> {
        &self.x_valid
    }
    pub fn y_valid(&self) -> &Array1<f64> {
        &self.y_valid
    }
    pub fn x_test(&self) -> &Array2<f64> {
        &self.x_test
    }
    pub fn y_test(&self) -> &Array1<f64> {
        &self.y_test
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.y_train.len(), self.y_valid.len(), self.y_test.len())
    }
}

/// Shuffles `0..n` and cuts it into three parts.
///
/// Part sizes use largest-remainder rounding of `n·fraction`; ties on the
/// remainder go to the later part.
pub fn split_indices(n: usize, fractions: [f64; 3], seed: u64) -> Result<[Vec<usize>; 3]> {
    if fractions.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(DreError::InvalidConfig(format!(
            "split fractions must be positive, got {fractions:?}"
        )));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(DreError::InvalidConfig(format!(
            "split fractions must sum to 1, got {total}"
        )));
    }
    let exact = fractions.map(|f| f * n as f64);
    let mut sizes = exact.map(|e| e.floor() as usize);
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    // stable sort by descending remainder, later index first on ties
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.partial_cmp(&ra).unwrap().then(b.cmp(&a))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    if sizes.contains(&0) {
        return Err(DreError::InvalidConfig(format!(
            "{n} samples are too few for three non-empty splits (sizes {sizes:?})"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream_rng(seed, Purpose::Shuffle as u64));
    let valid_start = sizes[0];
    let test_start = sizes[0] + sizes[1];
    Ok([
        idx[..valid_start].to_vec(),
        idx[valid_start..test_start].to_vec(),
        idx[test_start..].to_vec(),
    ])
}

/// Pooled per-feature standard deviation: `sqrt(mean_j var_j)`.
fn pooled_std(x: &Array2<f64>) -> f64 {
    if x.nrows() == 0 || x.ncols() == 0 {
        return 0.0;
    }
    let var = x.var_axis(Axis(0), 0.0);
    var.mean().unwrap_or(0.0).sqrt()
}

/// Adds i.i.d. `N(0, (level·σ)²)` noise to every feature of every split,
/// where σ is the pooled feature standard deviation of the training rows
/// (1.0 if that is zero). Level 0 returns the input unchanged.
pub fn add_feature_noise(split: &DataSplit, level: u32, seed: u64) -> Result<DataSplit> {
    if level == 0 {
        return Ok(split.clone());
    }
    let sigma = match pooled_std(&split.x_train) {
        s if s > 0.0 && s.is_finite() => s,
        _ => 1.0,
    };
    let normal = Normal::new(0.0, level as f64 * sigma)
        .map_err(|e| DreError::InvalidConfig(e.to_string()))?;
    let noisy = |x: &Array2<f64>, part: u32| {
        let mut rng = StreamKey::new(seed, level, part).rng(Purpose::Noise);
        let mut out = x.clone();
        out.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
        out
    };
    DataSplit::new(
        noisy(&split.x_train, 0),
        split.y_train.clone(),
        noisy(&split.x_valid, 1),
        split.y_valid.clone(),
        noisy(&split.x_test, 2),
        split.y_test.clone(),
    )
}
