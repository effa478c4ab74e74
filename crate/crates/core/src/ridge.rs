//! Ridge regression over a whole penalty grid from a single spectral
//! decomposition.
//!
//! With `G = n⁻¹ZᵀZ = U diag(μ) Uᵀ` the coefficients for every penalty are
//! `β(λ) = U diag(μ + λ)⁻¹ Uᵀ n⁻¹Zᵀy`, so one eigendecomposition serves the
//! whole grid. When there are more features than rows the `n × n` dual Gram
//! `n⁻¹ZZᵀ` is decomposed instead and coefficients are recovered through
//! `Zᵀ`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::linalg::{matmul, matmul_nt, matmul_tn, sym_eigen};
use crate::{DreError, Result};

/// Eigenvalues below this fraction of the largest are raised to it.
pub const EIGEN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Primal,
    Dual,
}

impl SolveMode {
    /// Dual whenever there are more features than observations.
    pub fn auto(n: usize, p: usize) -> Self {
        if p > n {
            SolveMode::Dual
        } else {
            SolveMode::Primal
        }
    }
}

/// Ridge coefficients for one design matrix across a penalty grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeGridFit {
    lambdas: Vec<f64>,
    /// `P × L`, column `l` is `β(λ_l)`.
    betas: Array2<f64>,
    mode: SolveMode,
}

/// Checks that a penalty grid is non-empty, positive, finite and strictly
/// increasing.
pub fn validate_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(DreError::InvalidConfig("penalty grid is empty".into()));
    }
    for &l in lambdas {
        if !(l.is_finite() && l > 0.0) {
            return Err(DreError::InvalidPenalty(l));
        }
    }
    if let Some(w) = lambdas.windows(2).find(|w| w[1] <= w[0]) {
        return Err(DreError::InvalidConfig(format!(
            "penalty grid must be strictly increasing, found {} followed by {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

fn check_finite(values: impl IntoIterator<Item = f64>, what: &'static str) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(DreError::NonFinite(what))
    }
}

/// Fits the grid, choosing the primal or dual route from the shape of `z`.
pub fn fit_grid(z: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, lambdas: &[f64]) -> Result<RidgeGridFit> {
    fit_grid_with_mode(z, y, lambdas, SolveMode::auto(z.nrows(), z.ncols()))
}

pub fn fit_grid_with_mode(
    z: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambdas: &[f64],
    mode: SolveMode,
) -> Result<RidgeGridFit> {
    let (n, p) = z.dim();
    if n == 0 || p == 0 {
        return Err(DreError::DimensionMismatch(format!(
            "ridge needs at least one row and one column, got {n}x{p}"
        )));
    }
    if y.len() != n {
        return Err(DreError::DimensionMismatch(format!(
            "design has {n} rows but target has {} entries",
            y.len()
        )));
    }
    validate_lambdas(lambdas)?;
    check_finite(z.iter().copied(), "design matrix")?;
    check_finite(y.iter().copied(), "target vector")?;

    let inv_n = 1.0 / n as f64;
    let betas = match mode {
        SolveMode::Primal => {
            let mut gram = matmul_tn(z, z);
            gram.mapv_inplace(|g| g * inv_n);
            let eig = sym_eigen(gram.view())?;
            let mu = floored(&eig.values);
            let zty = z.t().dot(&y) * inv_n;
            let rotated = eig.vectors.t().dot(&zty);
            let scaled = shrink(&rotated, &mu, lambdas);
            matmul(eig.vectors.view(), scaled.view())
        }
        SolveMode::Dual => {
            let mut gram = matmul_nt(z, z);
            gram.mapv_inplace(|g| g * inv_n);
            let eig = sym_eigen(gram.view())?;
            let mu = floored(&eig.values);
            let rotated = eig.vectors.t().dot(&y);
            let scaled = shrink(&rotated, &mu, lambdas);
            let mut alpha = matmul(eig.vectors.view(), scaled.view());
            alpha.mapv_inplace(|a| a * inv_n);
            matmul_tn(z, alpha.view())
        }
    };
    check_finite(betas.iter().copied(), "ridge coefficients")?;
    Ok(RidgeGridFit {
        lambdas: lambdas.to_vec(),
        betas,
        mode,
    })
}

fn floored(values: &Array1<f64>) -> Array1<f64> {
    let top = values.iter().copied().fold(0.0_f64, f64::max);
    let floor = EIGEN_FLOOR * top;
    values.mapv(|v| v.max(floor))
}

/// `out[i, l] = v[i] / (μ[i] + λ_l)`
fn shrink(v: &Array1<f64>, mu: &Array1<f64>, lambdas: &[f64]) -> Array2<f64> {
    Array2::from_shape_fn((v.len(), lambdas.len()), |(i, l)| v[i] / (mu[i] + lambdas[l]))
}

impl RidgeGridFit {
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn betas(&self) -> &Array2<f64> {
        &self.betas
    }

    pub fn beta(&self, index: usize) -> ArrayView1<'_, f64> {
        self.betas.column(index)
    }

    pub fn mode(&self) -> SolveMode {
        self.mode
    }

    pub fn n_features(&self) -> usize {
        self.betas.nrows()
    }

    pub fn n_lambdas(&self) -> usize {
        self.lambdas.len()
    }

    /// Rebuilds a fit from stored parts (used when loading models).
    pub fn from_parts(lambdas: Vec<f64>, betas: Array2<f64>, mode: SolveMode) -> Result<Self> {
        validate_lambdas(&lambdas)?;
        if betas.ncols() != lambdas.len() {
            return Err(DreError::DimensionMismatch(format!(
                "{} coefficient columns for {} penalties",
                betas.ncols(),
                lambdas.len()
            )));
        }
        check_finite(betas.iter().copied(), "ridge coefficients")?;
        Ok(Self { lambdas, betas, mode })
    }

    /// Predictions for every penalty, `n_new × L`.
    pub fn predict(&self, z_new: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_width(z_new)?;
        Ok(matmul(z_new, self.betas.view()))
    }

    /// Predictions for a single penalty index.
    pub fn predict_one(&self, z_new: ArrayView2<'_, f64>, index: usize) -> Result<Array1<f64>> {
        self.check_width(z_new)?;
        Ok(z_new.dot(&self.betas.column(index)))
    }

    fn check_width(&self, z_new: ArrayView2<'_, f64>) -> Result<()> {
        if z_new.ncols() != self.betas.nrows() {
            return Err(DreError::DimensionMismatch(format!(
                "fit has {} features but input has {} columns",
                self.betas.nrows(),
                z_new.ncols()
            )));
        }
        Ok(())
    }
}

/// Uncentered standard deviation of each column, `sqrt(mean(x²))`, with
/// zero columns mapped to 1.
pub fn column_scales(yhat: ArrayView2<'_, f64>) -> Array1<f64> {
    let n = yhat.nrows().max(1) as f64;
    yhat.map_axis(Axis(0), |col| {
        let s = (col.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        if s > 0.0 && s.is_finite() {
            s
        } else {
            1.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random(n: usize, p: usize, seed: u64) -> (Array2<f64>, Array1<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = Array::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng));
        let y = Array::from_shape_fn(n, |_| StandardNormal.sample(&mut rng));
        (z, y)
    }

    #[test]
    fn identity_design_closed_form() {
        let n = 5;
        let z = Array2::<f64>::eye(n);
        let y = array![1.0, -2.0, 0.5, 3.0, 0.0];
        let lambdas = [0.01, 1.0, 7.0];
        let fit = fit_grid(z.view(), y.view(), &lambdas).unwrap();
        assert_eq!(fit.mode(), SolveMode::Primal);
        for (l, &lam) in lambdas.iter().enumerate() {
            let expect = &y / (n as f64 * (lam + 1.0 / n as f64));
            for (a, b) in fit.beta(l).iter().zip(expect.iter()) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn heavy_penalty_bound() {
        let (z, y) = random(30, 10, 3);
        let fit = fit_grid(z.view(), y.view(), &[1e6]).unwrap();
        let q = z.t().dot(&y) / 30.0;
        let qn = q.dot(&q).sqrt();
        let bn = fit.beta(0).dot(&fit.beta(0)).sqrt();
        assert!(bn <= qn / 1e6);
    }

    #[test]
    fn rejects_bad_penalties_and_inputs() {
        let (z, y) = random(4, 3, 1);
        assert!(matches!(
            fit_grid(z.view(), y.view(), &[0.0, 1.0]),
            Err(DreError::InvalidPenalty(_))
        ));
        assert!(matches!(
            fit_grid(z.view(), y.view(), &[-1.0]),
            Err(DreError::InvalidPenalty(_))
        ));
        assert!(fit_grid(z.view(), y.view(), &[2.0, 1.0]).is_err());
        let mut bad = z.clone();
        bad[[0, 0]] = f64::NAN;
        assert!(matches!(
            fit_grid(bad.view(), y.view(), &[1.0]),
            Err(DreError::NonFinite(_))
        ));
        assert!(fit_grid(z.view(), y.slice(ndarray::s![..3]), &[1.0]).is_err());
    }

    #[test]
    fn predict_zero_and_width() {
        let (z, y) = random(20, 6, 2);
        let fit = fit_grid(z.view(), y.view(), &[0.1, 1.0]).unwrap();
        let p = fit.predict(Array2::zeros((3, 6)).view()).unwrap();
        assert!(p.iter().all(|&v| v == 0.0));
        assert!(fit.predict(Array2::zeros((3, 5)).view()).is_err());
        let one = fit.predict_one(z.view(), 1).unwrap();
        let all = fit.predict(z.view()).unwrap();
        for (a, b) in one.iter().zip(all.column(1)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_limit() {
        let (z, y) = random(8, 8, 5);
        let fit = fit_grid(z.view(), y.view(), &[1e-10]).unwrap();
        let p = fit.predict(z.view()).unwrap();
        for (a, b) in p.column(0).iter().zip(y.iter()) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn scales() {
        let y = array![[2.0, 0.0, 3.0], [2.0, 0.0, 4.0]];
        let s = column_scales(y.view());
        assert_eq!(s[0], 2.0);
        assert_eq!(s[1], 1.0);
        assert!((s[2] - 12.5_f64.sqrt()).abs() < 1e-15);
    }
}
