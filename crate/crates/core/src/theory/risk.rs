//! Asymptotic prediction risks of group-wise ridge ensembles and of the
//! flat ridge over all features.

use serde::Serialize;

use super::stieltjes::{nu_family, Nu};
use super::TheoryParams;
use crate::{DreError, Result};

fn nu_k(lambda: f64, params: &TheoryParams, k: usize) -> Result<Nu> {
    params.check_group(k)?;
    nu_family(lambda, params.c[k], params.sigma1)
}

/// Effective noise seen by sub-model k: unit noise plus the other groups' signal.
fn noise_k(params: &TheoryParams, k: usize) -> f64 {
    1.0 + params.b_bar() - params.b[k] * params.sigma1
}

/// Risk of `α β̂(λ; k)` against `β(k)`:
/// `bσ − 2αbν + α²(bν̂ − cν'(1 + b̄ − bσ))`.
pub fn sub_model_risk(alpha: f64, lambda: f64, k: usize, params: &TheoryParams) -> Result<f64> {
    let nu = nu_k(lambda, params, k)?;
    let (b, c, s) = (params.b[k], params.c[k], params.sigma1);
    Ok(b * s - 2.0 * alpha * b * nu.nu
        + alpha * alpha * (b * nu.nu_hat - c * nu.nu_prime * noise_k(params, k)))
}

/// Risk of the group ensemble `Σ_k α_k β̂(λ_k; k)`; cross-group terms vanish.
pub fn ensemble_risk(alphas: &[f64], lambdas: &[f64], params: &TheoryParams) -> Result<f64> {
    if alphas.len() != params.groups() || lambdas.len() != params.groups() {
        return Err(DreError::DimensionMismatch(format!(
            "{} groups but {} weights and {} penalties",
            params.groups(),
            alphas.len(),
            lambdas.len()
        )));
    }
    (0..params.groups()).map(|k| sub_model_risk(alphas[k], lambdas[k], k, params)).sum()
}

/// `λ*_k = c(k)(1 + b̄* − b*(k)σ₁)/b*(k)`
pub fn optimal_lambda_k(params: &TheoryParams, k: usize) -> Result<f64> {
    params.check_group(k)?;
    Ok(params.c[k] * noise_k(params, k) / params.b[k])
}

/// Weight minimizing the sub-model risk at a fixed λ:
/// `α*_k = bν / (bν̂ − cν'(1 + b̄ − bσ))`.
pub fn optimal_alpha_k(lambda: f64, params: &TheoryParams, k: usize) -> Result<f64> {
    let nu = nu_k(lambda, params, k)?;
    let (b, c) = (params.b[k], params.c[k]);
    Ok(b * nu.nu / (b * nu.nu_hat - c * nu.nu_prime * noise_k(params, k)))
}

fn flat_nu(lambda: f64, params: &TheoryParams) -> Result<(Nu, f64)> {
    params.check_equal_sizes()?;
    let ck = params.c_total();
    Ok((nu_family(lambda, ck, params.sigma1)?, ck))
}

/// Risk of `a β̂_flat(λ)`: `b̄ − 2ab̄ν + a²(b̄ν̂ − cKν')` with ν at ratio cK.
pub fn flat_risk(a: f64, lambda: f64, params: &TheoryParams) -> Result<f64> {
    let (nu, ck) = flat_nu(lambda, params)?;
    let bb = params.b_bar();
    Ok(bb - 2.0 * a * bb * nu.nu + a * a * (bb * nu.nu_hat - ck * nu.nu_prime))
}

/// `λ̄* = cK/b̄*`
pub fn flat_optimal_lambda(params: &TheoryParams) -> Result<f64> {
    params.check_equal_sizes()?;
    Ok(params.c_total() / params.b_bar())
}

/// `ā*(λ) = b̄ν / (b̄ν̂ − cKν')`
pub fn flat_optimal_a(lambda: f64, params: &TheoryParams) -> Result<f64> {
    let (nu, ck) = flat_nu(lambda, params)?;
    let bb = params.b_bar();
    Ok(bb * nu.nu / (bb * nu.nu_hat - ck * nu.nu_prime))
}

/// `(λ̄*, ā*(λ))`, with λ defaulting to λ̄*.
pub fn flat_optima(params: &TheoryParams, lambda: Option<f64>) -> Result<(f64, f64)> {
    let lambda_bar = flat_optimal_lambda(params)?;
    Ok((lambda_bar, flat_optimal_a(lambda.unwrap_or(lambda_bar), params)?))
}

/// Ensemble with each group at its own optimum: `b̄* − Σ_k b*(k) ν(λ*_k; c(k))`.
pub fn optimal_ensemble_risk(params: &TheoryParams) -> Result<f64> {
    let mut risk = params.b_bar();
    for k in 0..params.groups() {
        risk -= params.b[k] * nu_k(optimal_lambda_k(params, k)?, params, k)?.nu;
    }
    Ok(risk)
}

/// Flat model at its own optimum: `b̄*(1 − ν(λ̄*; cK))`.
pub fn optimal_flat_risk(params: &TheoryParams) -> Result<f64> {
    let (nu, _) = flat_nu(flat_optimal_lambda(params)?, params)?;
    Ok(params.b_bar() * (1.0 - nu.nu))
}

/// Ensemble sharing one penalty λ with per-group optimal weights:
/// `b̄* − Σ_k (bν)² / (bν̂ − cν'(1 + b̄* − bσ))`.
pub fn common_penalty_ensemble_risk(lambda: f64, params: &TheoryParams) -> Result<f64> {
    let mut risk = params.b_bar();
    for k in 0..params.groups() {
        let nu = nu_k(lambda, params, k)?;
        let (b, c) = (params.b[k], params.c[k]);
        risk -= (b * nu.nu).powi(2) / (b * nu.nu_hat - c * nu.nu_prime * noise_k(params, k));
    }
    Ok(risk)
}

/// Summary of the optimal penalties, weights and risks of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub flat_risk: f64,
    pub ensemble_optimal_risk: f64,
    pub ensemble_suboptimal_risk: f64,
    pub lambda_star: Vec<f64>,
    pub alpha_star: Vec<f64>,
    pub lambda_bar_star: f64,
    pub a_bar_star: f64,
}

pub fn risk_report(params: &TheoryParams) -> Result<RiskReport> {
    let lambda_star = (0..params.groups())
        .map(|k| optimal_lambda_k(params, k))
        .collect::<Result<Vec<_>>>()?;
    let alpha_star = lambda_star
        .iter()
        .enumerate()
        .map(|(k, &l)| optimal_alpha_k(l, params, k))
        .collect::<Result<Vec<_>>>()?;
    let (lambda_bar_star, a_bar_star) = flat_optima(params, None)?;
    Ok(RiskReport {
        flat_risk: optimal_flat_risk(params)?,
        ensemble_optimal_risk: optimal_ensemble_risk(params)?,
        ensemble_suboptimal_risk: common_penalty_ensemble_risk(lambda_bar_star, params)?,
        lambda_star,
        alpha_star,
        lambda_bar_star,
        a_bar_star,
    })
}

/// One row of the risk-versus-complexity table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskCurvePoint {
    pub c: f64,
    pub flat: f64,
    pub ensemble_optimal: f64,
    pub ensemble_suboptimal: f64,
}

/// For every per-group ratio in `c_grid`: the optimally tuned flat risk,
/// the optimal ensemble risk and the ensemble risk at the flat model's λ̄*.
pub fn risk_curves(b: &[f64], c_grid: &[f64]) -> Result<Vec<RiskCurvePoint>> {
    c_grid
        .iter()
        .map(|&c| {
            let params = TheoryParams::uniform(c, b.to_vec())?;
            let report = risk_report(&params)?;
            Ok(RiskCurvePoint {
                c,
                flat: report.flat_risk,
                ensemble_optimal: report.ensemble_optimal_risk,
                ensemble_suboptimal: report.ensemble_suboptimal_risk,
            })
        })
        .collect()
}
