//! Asymptotic risk formulas for ridge ensembles over feature groups under
//! identity covariance, and a Monte Carlo oracle to check them.

mod monte_carlo;
mod params;
mod penalty;
mod risk;
mod stieltjes;

pub use monte_carlo::{
    monte_carlo_risk, resolvent_traces, Estimator, ResolventTrace, RiskEstimate, Scenario, MAX_DESIGN_ENTRIES,
};
pub use params::TheoryParams;
pub use penalty::{hetero_penalty_solution, HeteroPenaltySolution, NEAR_DIAGONAL};
pub use risk::{
    common_penalty_ensemble_risk, ensemble_risk, flat_optima, flat_optimal_a, flat_optimal_lambda, flat_risk,
    optimal_alpha_k, optimal_ensemble_risk, optimal_flat_risk, optimal_lambda_k, risk_curves, risk_report,
    sub_model_risk, RiskCurvePoint, RiskReport,
};
pub use stieltjes::{mp_stieltjes, mp_stieltjes_deriv, nu_family, xi, xi_deriv, xi_scaled, Nu};
