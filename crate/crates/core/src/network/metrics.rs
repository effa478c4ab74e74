use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::{DreError, Result};

/// Out-of-sample scores of one prediction vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    /// `Σ(y−ŷ)² / Σ(y−ȳ_train)²`
    pub one_minus_r2: f64,
    /// Share of correct 0/1 calls at threshold 0.5; only for binary targets.
    pub accuracy: Option<f64>,
}

pub const CLASSIFICATION_THRESHOLD: f64 = 0.5;

pub fn evaluate(
    predictions: ArrayView1<'_, f64>,
    y_test: ArrayView1<'_, f64>,
    y_train_mean: f64,
) -> Result<Metrics> {
    if predictions.len() != y_test.len() {
        return Err(DreError::DimensionMismatch(format!(
            "{} predictions for {} targets",
            predictions.len(),
            y_test.len()
        )));
    }
    if y_test.is_empty() {
        return Err(DreError::DegenerateLabels);
    }
    let sse: f64 = predictions.iter().zip(y_test).map(|(p, y)| (y - p).powi(2)).sum();
    let sst: f64 = y_test.iter().map(|y| (y - y_train_mean).powi(2)).sum();
    if sst <= 0.0 {
        return Err(DreError::DegenerateLabels);
    }
    let binary = y_test.iter().all(|&y| y == 0.0 || y == 1.0);
    let accuracy = binary.then(|| {
        let hits = predictions
            .iter()
            .zip(y_test)
            .filter(|(p, y)| (**p >= CLASSIFICATION_THRESHOLD) == (**y == 1.0))
            .count();
        hits as f64 / y_test.len() as f64
    });
    Ok(Metrics {
        mse: sse / y_test.len() as f64,
        one_minus_r2: sse / sst,
        accuracy,
    })
}

/// Index of the smallest value; the earliest wins ties.
pub fn argmin_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v >= b => {}
            _ if v.is_nan() => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn perfect_and_mean_predictions() {
        let y = array![1.0, 2.0, 4.0];
        let m = evaluate(y.view(), y.view(), 0.0).unwrap();
        assert_eq!(m.one_minus_r2, 0.0);
        assert_eq!(m.accuracy, None);
        let mean = 2.5;
        let flat = array![mean, mean, mean];
        let m = evaluate(flat.view(), y.view(), mean).unwrap();
        assert_eq!(m.one_minus_r2, 1.0);
    }

    #[test]
    fn accuracy_by_hand() {
        let y = array![1.0, 0.0, 1.0];
        let p = array![0.9, 0.2, 0.4];
        let m = evaluate(p.view(), y.view(), 0.5).unwrap();
        assert!((m.accuracy.unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_and_mismatch() {
        let y = array![1.0, 1.0];
        assert!(matches!(
            evaluate(y.view(), y.view(), 1.0),
            Err(DreError::DegenerateLabels)
        ));
        assert!(evaluate(array![1.0].view(), y.view(), 0.0).is_err());
    }

    #[test]
    fn argmin_ties_go_first() {
        assert_eq!(argmin_first(&[3.0, 1.0, 1.0, 2.0]), Some(1));
        assert_eq!(argmin_first(&[f64::NAN, 2.0]), Some(1));
        assert_eq!(argmin_first(&[]), None);
    }
}
