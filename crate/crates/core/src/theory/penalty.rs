//! Optimal mixing of one ridge model across several penalties.

use ndarray::{Array1, Array2};

use super::stieltjes::{nu_family, xi_scaled};
use super::TheoryParams;
use crate::linalg::solve;
use crate::{DreError, Result};

/// Relative gap below which two penalties use the diagonal limit of Γ.
pub const NEAR_DIAGONAL: f64 = 1e-6;

/// Optimal weights `w = Γ⁻¹γ` over a penalty grid and the resulting risk.
#[derive(Debug, Clone, PartialEq)]
pub struct HeteroPenaltySolution {
    pub lambdas: Vec<f64>,
    pub weights: Array1<f64>,
    pub gram: Array2<f64>,
    pub gamma_vec: Array1<f64>,
    pub optimal_risk: f64,
}

/// Multi-penalty mixing for a single group (use [`TheoryParams::flattened`]
/// for a flat model over several groups).
///
/// `Γ(λ₁,λ₂) = b(σ₁ + (λ₁²ξ₁ − λ₂²ξ₂)/(c(λ₂−λ₁))) + (λ₂ξ₂ − λ₁ξ₁)/(λ₂−λ₁)`,
/// with the λ₂ → λ₁ limit `b(σ₁ − (2λξ + λ²ξ')/c) + ξ + λξ'` on and near the
/// diagonal, and `γ_ℓ = b ν(λ_ℓ)`.
pub fn hetero_penalty_solution(params: &TheoryParams, lambdas: &[f64]) -> Result<HeteroPenaltySolution> {
    if params.groups() != 1 {
        return Err(DreError::InvalidConfig(format!(
            "penalty mixing needs a single group, got {}; flatten the parameters first",
            params.groups()
        )));
    }
    if lambdas.is_empty() {
        return Err(DreError::InvalidConfig("penalty grid is empty".into()));
    }
    for (i, &a) in lambdas.iter().enumerate() {
        if !(a.is_finite() && a > 0.0) {
            return Err(DreError::InvalidPenalty(a));
        }
        if let Some(j) = lambdas[..i].iter().position(|&b| b == a) {
            return Err(DreError::SingularGram {
                first: j,
                second: i,
                first_value: a,
                second_value: a,
            });
        }
    }
    let (c, b, s) = (params.c[0], params.b[0], params.sigma1);
    let xis = lambdas
        .iter()
        .map(|&l| xi_scaled(l, c, s))
        .collect::<Result<Vec<_>>>()?;
    let l = lambdas.len();
    let gram = Array2::from_shape_fn((l, l), |(i, j)| {
        let (l1, l2) = (lambdas[i], lambdas[j]);
        let ((x1, d1), (x2, _)) = (xis[i], xis[j]);
        if (l2 - l1).abs() < NEAR_DIAGONAL * l1 {
            b * (s - (2.0 * l1 * x1 + l1 * l1 * d1) / c) + x1 + l1 * d1
        } else {
            let gap = l2 - l1;
            b * (s + (l1 * l1 * x1 - l2 * l2 * x2) / (c * gap)) + (l2 * x2 - l1 * x1) / gap
        }
    });
    let gamma_vec = lambdas
        .iter()
        .map(|&l| Ok(b * nu_family(l, c, s)?.nu))
        .collect::<Result<Array1<f64>>>()?;
    let weights = solve(gram.view(), &gamma_vec);
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(DreError::Decomposition);
    }
    let optimal_risk = b * s - gamma_vec.dot(&weights);
    Ok(HeteroPenaltySolution {
        lambdas: lambdas.to_vec(),
        weights,
        gram,
        gamma_vec,
        optimal_risk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::{flat_optimal_a, flat_risk};
    use crate::DEFAULT_LAMBDAS;

    #[test]
    fn single_penalty_reduces_to_scalar_optimum() {
        let p = TheoryParams::uniform(0.8, vec![1.7]).unwrap();
        for lambda in [0.01, 0.5, 3.0] {
            let sol = hetero_penalty_solution(&p, &[lambda]).unwrap();
            let a = flat_optimal_a(lambda, &p).unwrap();
            assert!((sol.weights[0] - a).abs() < 1e-8);
            assert!((sol.optimal_risk - flat_risk(a, lambda, &p).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn gram_is_symmetric_and_continuous_at_the_diagonal() {
        let p = TheoryParams::uniform(1.0, vec![2.0]).unwrap();
        let sol = hetero_penalty_solution(&p, &[0.5, 1.0, 4.0]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((sol.gram[[i, j]] - sol.gram[[j, i]]).abs() < 1e-12);
            }
        }
        let near = hetero_penalty_solution(&p, &[1.0, 1.0 + 1e-4]).unwrap();
        assert!((near.gram[[0, 1]] - near.gram[[0, 0]]).abs() < 1e-3);
    }

    #[test]
    fn mixing_beats_every_single_penalty() {
        let p = TheoryParams::uniform(1.0, vec![10.0]).unwrap();
        let grid: Vec<f64> = DEFAULT_LAMBDAS.iter().step_by(4).copied().collect();
        let sol = hetero_penalty_solution(&p, &grid).unwrap();
        let quad = sol.gamma_vec.dot(&sol.weights);
        for (i, &l) in grid.iter().enumerate() {
            let single = flat_risk(flat_optimal_a(l, &p).unwrap(), l, &p).unwrap();
            assert!(sol.optimal_risk <= single + 1e-10);
            assert!(quad >= sol.gamma_vec[i].powi(2) / sol.gram[[i, i]] - 1e-10);
        }
    }

    #[test]
    fn duplicate_penalty_is_singular() {
        let p = TheoryParams::uniform(1.0, vec![1.0]).unwrap();
        match hetero_penalty_solution(&p, &[0.1, 1.0, 0.1]) {
            Err(DreError::SingularGram { first, second, .. }) => assert_eq!((first, second), (0, 2)),
            other => panic!("expected singular gram, got {other:?}"),
        }
        let two = TheoryParams::uniform(1.0, vec![1.0, 1.0]).unwrap();
        assert!(hetero_penalty_solution(&two, &[1.0]).is_err());
        assert!(hetero_penalty_solution(&p, &[]).is_err());
    }
}
