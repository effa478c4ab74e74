//! Deep regression ensembles (DRE).
//!
//! A DRE network stacks layers of random-feature ridge ensembles. Each layer
//! draws `K` blocks of `P` Gaussian-ReLU random features, fits every block by
//! ridge regression over a grid of `L` penalties, and passes the `K·L`
//! normalized predictions to the next layer. A final ridge regression with a
//! validation-selected penalty produces the output. No gradient descent is
//! involved anywhere.
//!
//! The [`theory`] module evaluates closed-form asymptotic risks of ridge
//! ensembles under the Marcenko-Pastur law and checks them against a
//! finite-sample Monte Carlo oracle.

pub mod dataio;
pub mod error;
pub mod features;
pub mod linalg;
pub mod network;
pub mod ridge;
pub mod rng;
pub mod theory;

pub use error::{DreError, Result};

/// The penalty grid used throughout the experiments (29 values).
pub const DEFAULT_LAMBDAS: [f64; 29] = [
    0.0001, 0.001, 0.01, 0.1, 1.0, 5.1, 10.1, 15.1, 20.1, 25.1, 30.1, 35.1, 40.1, 45.1, 50.1,
    55.1, 60.1, 65.1, 70.1, 75.1, 80.1, 85.1, 90.1, 95.1, 100.1, 1000.0, 2000.0, 5000.0,
    10000.0,
];
