//! Closed-form resolvent functionals for identity (or scaled identity)
//! population covariance. Every derivative is taken with respect to the
//! penalty λ > 0.

use crate::{DreError, Result};

fn check_args(lambda: f64, c: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(DreError::InvalidConfig(format!("penalty must be finite and > 0, got {lambda}")));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(DreError::InvalidConfig(format!("aspect ratio must be finite and > 0, got {c}")));
    }
    Ok(())
}

fn m_unchecked(lambda: f64, c: f64) -> f64 {
    let t = 1.0 - c + lambda;
    let root = (t * t + 4.0 * c * lambda).sqrt();
    // For t < 0 the conjugate form avoids cancellation in root + t.
    if t >= 0.0 {
        2.0 / (root + t)
    } else {
        (root - t) / (2.0 * c * lambda)
    }
}

fn m_deriv_unchecked(lambda: f64, c: f64, m: f64) -> f64 {
    (c * m * m + m) / (2.0 * c * lambda * m + 1.0 - c + lambda)
}

/// Limiting normalized trace `p⁻¹ tr((λI + Σ̂)⁻¹)` under the
/// Marchenko-Pastur law with ratio `c = p/n`.
pub fn mp_stieltjes(lambda: f64, c: f64) -> Result<f64> {
    check_args(lambda, c)?;
    Ok(m_unchecked(lambda, c))
}

/// `m' = (c m² + m) / (2cλm + 1 − c + λ)`, which equals `−dm/dλ` and is
/// therefore positive.
pub fn mp_stieltjes_deriv(lambda: f64, c: f64) -> Result<f64> {
    check_args(lambda, c)?;
    Ok(m_deriv_unchecked(lambda, c, m_unchecked(lambda, c)))
}

/// ξ and dξ/dλ for `Σ = sI`.
fn xi_pair(lambda: f64, c: f64, scale: f64) -> Result<(f64, f64)> {
    check_args(lambda, c)?;
    let u = lambda / scale;
    let m = m_unchecked(u, c);
    let xi = c * m;
    // The fixed-point form (1 − λm)/(1/c − 1 + λm) must agree with c·m.
    let alt = (1.0 - u * m) / (1.0 / c - 1.0 + u * m);
    if (alt - xi).abs() > 1e-7 * xi.max(1e-300) && 1.0 - u * m > 1e-6 {
        return Err(DreError::Consistency(format!(
            "xi forms disagree at lambda={lambda}, c={c}: {xi} vs {alt}"
        )));
    }
    let dxi = -c * m_deriv_unchecked(u, c, m) / scale;
    Ok((xi, dxi))
}

/// `ξ(λ) = c·m(λ; c)` for `Σ = I`.
pub fn xi(lambda: f64, c: f64) -> Result<f64> {
    Ok(xi_pair(lambda, c, 1.0)?.0)
}

/// `dξ/dλ`, negative.
pub fn xi_deriv(lambda: f64, c: f64) -> Result<f64> {
    Ok(xi_pair(lambda, c, 1.0)?.1)
}

/// `ξ` and `dξ/dλ` for the scaled identity `Σ = σ₁ I`.
pub fn xi_scaled(lambda: f64, c: f64, sigma1: f64) -> Result<(f64, f64)> {
    if !(sigma1.is_finite() && sigma1 > 0.0) {
        return Err(DreError::InvalidConfig(format!("sigma1 must be > 0, got {sigma1}")));
    }
    xi_pair(lambda, c, sigma1)
}

/// The ν family at one penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nu {
    /// `ν = σ₁ − λξ/c`
    pub nu: f64,
    /// `ν' = dν/dλ = −(ξ + λ dξ/dλ)/c`
    pub nu_prime: f64,
    /// `ν̂ = ν + λν'`
    pub nu_hat: f64,
}

/// Evaluates (ν, ν', ν̂) and checks the sign pattern ν > 0, ν' < 0, ν̂ > 0.
pub fn nu_family(lambda: f64, c: f64, sigma1: f64) -> Result<Nu> {
    let (xi, dxi) = xi_scaled(lambda, c, sigma1)?;
    let nu = sigma1 - lambda * xi / c;
    let nu_prime = -(xi + lambda * dxi) / c;
    let nu_hat = sigma1 - (2.0 * lambda * xi + lambda * lambda * dxi) / c;
    if !(nu > 0.0 && nu_prime < 0.0 && nu_hat > 0.0) {
        return Err(DreError::Consistency(format!(
            "nu sign pattern violated at lambda={lambda}, c={c}: nu={nu}, nu'={nu_prime}, nu_hat={nu_hat}"
        )));
    }
    Ok(Nu { nu, nu_prime, nu_hat })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: f64 = 0.618_033_988_749_894_8;

    #[test]
    fn golden_ratio_point() {
        let m = mp_stieltjes(1.0, 1.0).unwrap();
        assert!((m - GOLDEN).abs() < 1e-12);
        assert!((m - 1.0 / (1.0 + m)).abs() < 1e-12);
        assert!((xi(1.0, 1.0).unwrap() - GOLDEN).abs() < 1e-12);
        let nu = nu_family(1.0, 1.0, 1.0).unwrap();
        assert!((nu.nu - (1.0 - GOLDEN)).abs() < 1e-12);
    }

    #[test]
    fn limits() {
        for lambda in [0.1, 1.0, 7.0] {
            let m = mp_stieltjes(lambda, 1e-9).unwrap();
            assert!((m - 1.0 / (1.0 + lambda)).abs() < 1e-7);
            let d = mp_stieltjes_deriv(lambda, 1e-9).unwrap();
            assert!((d - 1.0 / (1.0 + lambda).powi(2)).abs() < 1e-7);
            assert!(xi(lambda, 1e-9).unwrap() < 1e-8);
        }
        for c in [0.3, 1.0, 4.0] {
            let lambda = 1e7;
            assert!((lambda * mp_stieltjes(lambda, c).unwrap() - 1.0).abs() < 1e-5);
            assert!((xi(lambda, c).unwrap() * lambda / c - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for &c in &[0.1, 0.5, 1.0, 2.0, 10.0] {
            for &lambda in &[0.01, 0.3, 1.0, 5.0, 100.0] {
                let h = 1e-6 * lambda;
                let fd = -(mp_stieltjes(lambda + h, c).unwrap() - mp_stieltjes(lambda - h, c).unwrap()) / (2.0 * h);
                let d = mp_stieltjes_deriv(lambda, c).unwrap();
                assert!(d > 0.0);
                assert!(((d - fd) / d).abs() < 1e-5, "c={c} lambda={lambda}: {d} vs {fd}");

                let fd_xi = (xi(lambda + h, c).unwrap() - xi(lambda - h, c).unwrap()) / (2.0 * h);
                let dxi = xi_deriv(lambda, c).unwrap();
                assert!(((dxi - fd_xi) / dxi).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn fixed_point_forms_agree() {
        for &c in &[0.05, 0.5, 1.0, 3.0, 20.0] {
            for &lambda in &[1e-3, 0.1, 1.0, 10.0, 100.0] {
                let m = mp_stieltjes(lambda, c).unwrap();
                let alt = (1.0 - lambda * m) / (1.0 / c - 1.0 + lambda * m);
                let x = xi(lambda, c).unwrap();
                assert!(((x - alt) / x).abs() < 1e-10, "c={c} lambda={lambda}");
            }
        }
    }

    #[test]
    fn sign_pattern_sweep() {
        for i in 0..=28 {
            let lambda = 10f64.powf(-3.0 + 7.0 * i as f64 / 28.0);
            for j in 0..=16 {
                let c = 0.05 * 400f64.powf(j as f64 / 16.0);
                nu_family(lambda, c, 1.0).unwrap();
            }
        }
    }

    #[test]
    fn scaled_identity_matches_rescaled_resolvent() {
        let (s, c, lambda) = (2.5, 0.7, 1.3);
        let (x, _) = xi_scaled(lambda, c, s).unwrap();
        // tr((λ + sΣ̂₀)⁻¹)/p = m(λ/s)/s, and ν = s − λ m(λ/s)
        let m0 = mp_stieltjes(lambda / s, c).unwrap();
        let nu = nu_family(lambda, c, s).unwrap();
        assert!((nu.nu - (s - lambda * m0)).abs() < 1e-12);
        assert!((x - c * m0).abs() < 1e-12);
    }

    #[test]
    fn invalid_arguments() {
        assert!(mp_stieltjes(0.0, 1.0).is_err());
        assert!(mp_stieltjes(1.0, -1.0).is_err());
        assert!(mp_stieltjes_deriv(f64::NAN, 1.0).is_err());
        assert!(xi_scaled(1.0, 1.0, 0.0).is_err());
    }
}
