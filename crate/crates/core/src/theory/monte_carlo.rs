//! Finite-sample simulation of the risks above: Gaussian design with
//! identity covariance, Gaussian coefficients per group and unit noise.

use ndarray::{s, Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{matmul_tn, sym_eigen};
use crate::ridge::{fit_grid, RidgeGridFit};
use crate::rng::{Purpose, StreamKey};
use crate::{DreError, Result};

/// Upper bound on `n · Σp(k)` for one replication.
pub const MAX_DESIGN_ENTRIES: usize = 50_000_000;

/// An estimator whose risk `‖β̂ − β‖²` is simulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Estimator {
    /// `β̂ = 0`
    Zero,
    /// `α β̂(λ; k)` fitted on group k alone, scored against `β(k)`.
    SubModel { k: usize, lambda: f64, alpha: f64 },
    /// `Σ_k α_k β̂(λ_k; k)`, scored against the full β.
    Ensemble { lambdas: Vec<f64>, alphas: Vec<f64> },
    /// `a β̂_flat(λ)` on all features.
    Flat { lambda: f64, a: f64 },
    /// `Σ_ℓ w_ℓ β̂_flat(λ_ℓ)`
    MultiPenalty { lambdas: Vec<f64>, weights: Vec<f64> },
}

impl Estimator {
    pub fn label(&self) -> String {
        match self {
            Estimator::Zero => "zero".into(),
            Estimator::SubModel { k, .. } => format!("sub_model_{k}"),
            Estimator::Ensemble { .. } => "ensemble".into(),
            Estimator::Flat { .. } => "flat".into(),
            Estimator::MultiPenalty { .. } => "multi_penalty".into(),
        }
    }
}

/// Sample size, group sizes `p(k)` and signal strengths `b*(k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub n: usize,
    pub p: Vec<usize>,
    pub b: Vec<f64>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p.is_empty() || self.p.contains(&0) {
            return Err(DreError::InvalidConfig("scenario needs n >= 1 and p(k) >= 1 for every group".into()));
        }
        if self.p.len() != self.b.len() {
            return Err(DreError::DimensionMismatch(format!(
                "{} group sizes for {} signal strengths",
                self.p.len(),
                self.b.len()
            )));
        }
        if self.b.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(DreError::InvalidConfig("signal strengths must be finite and >= 0".into()));
        }
        let entries = self.n.saturating_mul(self.total_p());
        if entries > MAX_DESIGN_ENTRIES {
            return Err(DreError::ResourceLimit(format!(
                "design of {} x {} exceeds {MAX_DESIGN_ENTRIES} entries",
                self.n,
                self.total_p()
            )));
        }
        Ok(())
    }

    pub fn total_p(&self) -> usize {
        self.p.iter().sum()
    }

    /// Aspect ratios `p(k)/n`.
    pub fn ratios(&self) -> Vec<f64> {
        self.p.iter().map(|&p| p as f64 / self.n as f64).collect()
    }

    fn offsets(&self) -> Vec<usize> {
        let mut out = vec![0];
        for p in &self.p {
            out.push(out.last().unwrap() + p);
        }
        out
    }
}

fn check_estimator(est: &Estimator, scenario: &Scenario) -> Result<()> {
    let bad_lambda = |l: &f64| !(l.is_finite() && *l > 0.0);
    match est {
        Estimator::Zero => Ok(()),
        Estimator::SubModel { k, lambda, .. } => {
            if *k >= scenario.p.len() {
                return Err(DreError::InvalidConfig(format!("sub-model group {k} out of range")));
            }
            if bad_lambda(lambda) {
                return Err(DreError::InvalidPenalty(*lambda));
            }
            Ok(())
        }
        Estimator::Ensemble { lambdas, alphas } => {
            if lambdas.len() != scenario.p.len() || alphas.len() != scenario.p.len() {
                return Err(DreError::DimensionMismatch("ensemble needs one penalty and weight per group".into()));
            }
            match lambdas.iter().find(|l| bad_lambda(l)) {
                Some(l) => Err(DreError::InvalidPenalty(*l)),
                None => Ok(()),
            }
        }
        Estimator::Flat { lambda, .. } => {
            if bad_lambda(lambda) {
                return Err(DreError::InvalidPenalty(*lambda));
            }
            Ok(())
        }
        Estimator::MultiPenalty { lambdas, weights } => {
            if lambdas.len() != weights.len() || lambdas.is_empty() {
                return Err(DreError::DimensionMismatch("multi-penalty needs one weight per penalty".into()));
            }
            match lambdas.iter().find(|l| bad_lambda(l)) {
                Some(l) => Err(DreError::InvalidPenalty(*l)),
                None => Ok(()),
            }
        }
    }
}

/// Mean and standard error of one estimator's simulated risk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub estimator: String,
    pub risk: f64,
    pub stderr: f64,
}

/// Sorted, deduplicated penalty grids per group and for the flat fit.
struct Grids {
    groups: Vec<Vec<f64>>,
    flat: Vec<f64>,
}

fn push_grid(grid: &mut Vec<f64>, lambda: f64) {
    grid.push(lambda);
}

fn finish_grid(grid: &mut Vec<f64>) {
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();
}

fn grids(estimators: &[Estimator], groups: usize) -> Grids {
    let mut g = Grids {
        groups: vec![Vec::new(); groups],
        flat: Vec::new(),
    };
    for est in estimators {
        match est {
            Estimator::Zero => {}
            Estimator::SubModel { k, lambda, .. } => push_grid(&mut g.groups[*k], *lambda),
            Estimator::Ensemble { lambdas, .. } => {
                for (k, l) in lambdas.iter().enumerate() {
                    push_grid(&mut g.groups[k], *l);
                }
            }
            Estimator::Flat { lambda, .. } => push_grid(&mut g.flat, *lambda),
            Estimator::MultiPenalty { lambdas, .. } => lambdas.iter().for_each(|l| push_grid(&mut g.flat, *l)),
        }
    }
    g.groups.iter_mut().for_each(finish_grid);
    finish_grid(&mut g.flat);
    g
}

fn beta_at(fit: &RidgeGridFit, lambda: f64) -> ndarray::ArrayView1<'_, f64> {
    let idx = fit
        .lambdas()
        .binary_search_by(|l| l.total_cmp(&lambda))
        .expect("penalty present in grid");
    fit.beta(idx)
}

fn sq_dist(a: impl Iterator<Item = f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    a.zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn replicate(scenario: &Scenario, estimators: &[Estimator], grids: &Grids, seed: u64, rep: u32) -> Result<Vec<f64>> {
    let key = StreamKey::new(seed, rep, 0);
    let mut rng = key.rng(Purpose::MonteCarlo);
    let (n, p) = (scenario.n, scenario.total_p());
    let offsets = scenario.offsets();
    let mut beta = Array1::zeros(p);
    for (k, &pk) in scenario.p.iter().enumerate() {
        let sd = (scenario.b[k] / pk as f64).sqrt();
        for j in offsets[k]..offsets[k + 1] {
            let z: f64 = StandardNormal.sample(&mut rng);
            beta[j] = sd * z;
        }
    }
    let x = Array2::from_shape_simple_fn((n, p), || rng.sample::<f64, _>(StandardNormal));
    let noise = Array1::from_shape_simple_fn(n, || rng.sample::<f64, _>(StandardNormal));
    let y = x.dot(&beta) + noise;

    let group_fits = grids
        .groups
        .iter()
        .enumerate()
        .map(|(k, grid)| {
            if grid.is_empty() {
                return Ok(None);
            }
            let xk = x.slice(s![.., offsets[k]..offsets[k + 1]]);
            fit_grid(xk, y.view(), grid).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    let flat_fit = if grids.flat.is_empty() {
        None
    } else {
        Some(fit_grid(x.view(), y.view(), &grids.flat)?)
    };
    let group_beta = |k: usize| beta.slice(s![offsets[k]..offsets[k + 1]]);

    Ok(estimators
        .iter()
        .map(|est| match est {
            Estimator::Zero => beta.dot(&beta),
            Estimator::SubModel { k, lambda, alpha } => {
                let fit = group_fits[*k].as_ref().expect("grid built for group");
                sq_dist(beta_at(fit, *lambda).iter().map(|b| alpha * b), group_beta(*k))
            }
            Estimator::Ensemble { lambdas, alphas } => (0..scenario.p.len())
                .map(|k| {
                    let fit = group_fits[k].as_ref().expect("grid built for group");
                    sq_dist(beta_at(fit, lambdas[k]).iter().map(|b| alphas[k] * b), group_beta(k))
                })
                .sum(),
            Estimator::Flat { lambda, a } => {
                let fit = flat_fit.as_ref().expect("flat grid built");
                sq_dist(beta_at(fit, *lambda).iter().map(|b| a * b), beta.view())
            }
            Estimator::MultiPenalty { lambdas, weights } => {
                let fit = flat_fit.as_ref().expect("flat grid built");
                let mut mix = Array1::zeros(p);
                for (l, w) in lambdas.iter().zip(weights) {
                    mix.scaled_add(*w, &beta_at(fit, *l));
                }
                sq_dist(mix.iter().copied(), beta.view())
            }
        })
        .collect())
}

/// Simulated risk of every estimator over `replications` independent draws.
/// Replication `r` uses its own random stream, so results do not depend on
/// the thread schedule.
pub fn monte_carlo_risk(
    scenario: &Scenario,
    estimators: &[Estimator],
    replications: usize,
    seed: u64,
) -> Result<Vec<RiskEstimate>> {
    scenario.validate()?;
    if replications < 2 {
        return Err(DreError::InvalidConfig("need at least 2 replications for a standard error".into()));
    }
    for est in estimators {
        check_estimator(est, scenario)?;
    }
    let grids = grids(estimators, scenario.p.len());
    let draws = (0..replications)
        .into_par_iter()
        .map(|r| replicate(scenario, estimators, &grids, seed, r as u32))
        .collect::<Result<Vec<_>>>()?;
    let reps = replications as f64;
    Ok(estimators
        .iter()
        .enumerate()
        .map(|(i, est)| {
            let mean = draws.iter().map(|d| d[i]).sum::<f64>() / reps;
            let var = draws.iter().map(|d| (d[i] - mean).powi(2)).sum::<f64>() / (reps - 1.0);
            RiskEstimate {
                estimator: est.label(),
                risk: mean,
                stderr: (var / reps).sqrt(),
            }
        })
        .collect())
}

/// Empirical resolvent traces of `Σ̂ = XᵀX/n` with standard-normal X.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolventTrace {
    pub lambda: f64,
    /// Mean of `p⁻¹ tr((λI + Σ̂)⁻¹)`.
    pub m: f64,
    pub m_stderr: f64,
    /// Mean of `p⁻¹ tr(Σ̂ (λI + Σ̂)⁻¹)`.
    pub nu: f64,
    pub nu_stderr: f64,
}

/// Averages resolvent traces over `draws` independent `n × p` designs.
pub fn resolvent_traces(n: usize, p: usize, lambdas: &[f64], draws: usize, seed: u64) -> Result<Vec<ResolventTrace>> {
    if n == 0 || p == 0 || draws < 2 {
        return Err(DreError::InvalidConfig("need n, p >= 1 and at least 2 draws".into()));
    }
    if n.saturating_mul(p) > MAX_DESIGN_ENTRIES {
        return Err(DreError::ResourceLimit(format!("design of {n} x {p} is too large")));
    }
    if let Some(l) = lambdas.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(DreError::InvalidPenalty(*l));
    }
    let spectra = (0..draws)
        .into_par_iter()
        .map(|d| {
            let mut rng = StreamKey::new(seed, d as u32, 1).rng(Purpose::MonteCarlo);
            let x = Array2::from_shape_simple_fn((n, p), || rng.sample::<f64, _>(StandardNormal));
            let mut cov = matmul_tn(x.view(), x.view());
            cov.mapv_inplace(|v| v / n as f64);
            Ok(sym_eigen(cov.view())?.values.mapv(|v| v.max(0.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_se = |vals: Vec<f64>| {
        let k = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / k;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (mean, (var / k).sqrt())
    };
    Ok(lambdas
        .iter()
        .map(|&lambda| {
            let (m, m_stderr) = mean_se(spectra.iter().map(|e| e.mapv(|v| 1.0 / (lambda + v)).mean().unwrap()).collect());
            let (nu, nu_stderr) =
                mean_se(spectra.iter().map(|e| e.mapv(|v| v / (lambda + v)).mean().unwrap()).collect());
            ResolventTrace {
                lambda,
                m,
                m_stderr,
                nu,
                nu_stderr,
            }
        })
        .collect())
}
