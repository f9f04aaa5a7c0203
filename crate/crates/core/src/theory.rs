//! Closed-form constants and bounds for the accelerated gossip iterations:
//! momentum, contraction rates, the momentum-matrix norms, the compression
//! feasibility bound and the lazy spectral-gap lower bound.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
}

fn check_n(n: usize) -> Result<(), TheoryError> {
    if n < 2 {
        return Err(TheoryError::OutOfRange {
            name: "n",
            value: n as f64,
            range: "[2, inf)",
        });
    }
    Ok(())
}

fn check_accelerated_gamma(gamma: f64) -> Result<(), TheoryError> {
    if !(gamma > 0.0 && gamma <= 0.5) {
        return Err(TheoryError::OutOfRange {
            name: "gamma",
            value: gamma,
            range: "(0, 1/2]",
        });
    }
    Ok(())
}

/// `p = 5n / sqrt(gamma)`.
pub fn momentum_p(n: usize, gamma: f64) -> Result<f64, TheoryError> {
    check_n(n)?;
    check_accelerated_gamma(gamma)?;
    Ok(5.0 * n as f64 / gamma.sqrt())
}

/// `sigma = (5n - sqrt(gamma)) / (5n + sqrt(gamma))`.
pub fn momentum_sigma(n: usize, gamma: f64) -> Result<f64, TheoryError> {
    check_n(n)?;
    check_accelerated_gamma(gamma)?;
    let five_n = 5.0 * n as f64;
    let root = gamma.sqrt();
    Ok((five_n - root) / (five_n + root))
}

/// `lambda = 1 - sqrt(gamma) / (5n)`, the exact-communication rate.
pub fn rate_lambda(n: usize, gamma: f64) -> Result<f64, TheoryError> {
    check_n(n)?;
    check_accelerated_gamma(gamma)?;
    Ok(1.0 - gamma.sqrt() / (5.0 * n as f64))
}

/// `lambda~ = 1 - sqrt(gamma) / (10n)`, the compressed-communication rate.
pub fn rate_lambda_tilde(n: usize, gamma: f64) -> Result<f64, TheoryError> {
    check_n(n)?;
    check_accelerated_gamma(gamma)?;
    Ok(1.0 - gamma.sqrt() / (10.0 * n as f64))
}

fn check_sigma(sigma: f64) -> Result<(), TheoryError> {
    if !(0.0..1.0).contains(&sigma) {
        return Err(TheoryError::OutOfRange {
            name: "sigma",
            value: sigma,
            range: "[0, 1)",
        });
    }
    Ok(())
}

/// `(kappa2, kappa3) = (sqrt(2s^2 + 2s + 1), sqrt(2s^2 + 2))`.
pub fn kappa_constants(sigma: f64) -> Result<(f64, f64), TheoryError> {
    check_sigma(sigma)?;
    let s2 = sigma * sigma;
    Ok(((2.0 * s2 + 2.0 * sigma + 1.0).sqrt(), (2.0 * s2 + 2.0).sqrt()))
}

/// Companion matrix `[[1 + s, -s], [1, 0]]` of the momentum recursion.
pub fn momentum_t1(sigma: f64) -> Matrix2<f64> {
    Matrix2::new(1.0 + sigma, -sigma, 1.0, 0.0)
}

/// `[[1 + s, -s], [0, 0]]`; its spectral norm is `kappa2`.
pub fn momentum_t2(sigma: f64) -> Matrix2<f64> {
    Matrix2::new(1.0 + sigma, -sigma, 0.0, 0.0)
}

/// `[[s, -s], [1, -1]]`; its spectral norm is `kappa3`.
pub fn momentum_t3(sigma: f64) -> Matrix2<f64> {
    Matrix2::new(sigma, -sigma, 1.0, -1.0)
}

/// Largest `omega` for which compressed accelerated gossip provably
/// converges:
/// `1 / (2 (k3 + g b k2) (lambda^-1/2 + g b k2 C lambda^-1 (1 - lambda^1/2)^-2))`.
pub fn omega_feasibility_bound(
    gamma: f64,
    beta: f64,
    sigma: f64,
    lambda: f64,
    c: f64,
) -> Result<f64, TheoryError> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(TheoryError::OutOfRange {
            name: "lambda",
            value: lambda,
            range: "(0, 1)",
        });
    }
    if !(c > 0.0) {
        return Err(TheoryError::OutOfRange {
            name: "C",
            value: c,
            range: "(0, inf)",
        });
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(TheoryError::OutOfRange {
            name: "gamma",
            value: gamma,
            range: "(0, 1]",
        });
    }
    if !(0.0..=2.0).contains(&beta) {
        return Err(TheoryError::OutOfRange {
            name: "beta",
            value: beta,
            range: "[0, 2]",
        });
    }
    let (kappa2, kappa3) = kappa_constants(sigma)?;
    let gbk = gamma * beta * kappa2;
    let root = lambda.sqrt();
    let first = kappa3 + gbk;
    let second = 1.0 / root + gbk * c / (lambda * (1.0 - root).powi(2));
    Ok(1.0 / (2.0 * first * second))
}

/// `gamma / (25 n^2)`, a lower bound on the spectral gap of the lazy
/// Metropolis–Hastings matrix.
pub fn gap_lower_bound(n: usize, gamma: f64) -> Result<f64, TheoryError> {
    check_n(n)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(TheoryError::OutOfRange {
            name: "gamma",
            value: gamma,
            range: "(0, 1]",
        });
    }
    let n = n as f64;
    Ok(gamma / (25.0 * n * n))
}

/// Parameters of the augmented-matrix contraction for a matrix whose second
/// eigenvalue is `lambda2`: the smallest `p` with `lambda2 <= 1 - 1/p^2`,
/// `lambda = 1 - 1/p` and `sigma = (p - 1) / (p + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionParams {
    pub p: f64,
    pub lambda: f64,
    pub sigma: f64,
}

impl ContractionParams {
    pub fn from_p(p: f64) -> Result<Self, TheoryError> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(TheoryError::OutOfRange {
                name: "p",
                value: p,
                range: "(1, inf)",
            });
        }
        Ok(Self {
            p,
            lambda: 1.0 - 1.0 / p,
            sigma: (p - 1.0) / (p + 1.0),
        })
    }

    pub fn tightest(lambda2: f64) -> Result<Self, TheoryError> {
        if !(0.0..1.0).contains(&lambda2) {
            return Err(TheoryError::OutOfRange {
                name: "lambda2",
                value: lambda2,
                range: "[0, 1)",
            });
        }
        Self::from_p(1.0 / (1.0 - lambda2).sqrt())
    }
}

/// Smallest decay `lambda^t` that an `f64` power iteration can still resolve.
/// Below it the iterates sit on a rounding floor near `1e-16 ||v||`.
pub const RESOLVABLE_DECAY: f64 = 1e-10;

/// Largest `t` with `lambda^t >= RESOLVABLE_DECAY`, capped at `t_max`.
pub fn resolvable_horizon(lambda: f64, t_max: usize) -> usize {
    if !(lambda > 0.0 && lambda < 1.0) {
        return t_max;
    }
    let t = (RESOLVABLE_DECAY.ln() / lambda.ln()).floor();
    if t >= t_max as f64 {
        t_max
    } else {
        t as usize
    }
}

/// Largest `||B^t v|| / (t lambda^t)` over `t` in `1..norms.len()`, with
/// `norms[t] = ||B^t v||`.
pub fn fitted_growth_constant(norms: &[f64], lambda: f64) -> f64 {
    running_growth_sup(norms, lambda)
        .last()
        .copied()
        .unwrap_or(0.0)
}

/// Running supremum `S(t) = max_{1 <= s <= t} ||B^s v|| / (s lambda^s)`;
/// entry `t - 1` holds `S(t)`.
pub fn running_growth_sup(norms: &[f64], lambda: f64) -> Vec<f64> {
    let mut best = 0.0f64;
    norms
        .iter()
        .enumerate()
        .skip(1)
        .map(|(t, &norm)| {
            let t = t as f64;
            // t * lambda^t underflows long after the norms do; compare in logs.
            let ratio = if norm == 0.0 {
                0.0
            } else {
                (norm.ln() - t.ln() - t * lambda.ln()).exp()
            };
            best = best.max(ratio);
            best
        })
        .collect()
}

/// Every closed-form quantity for one `(n, gamma)` instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryBundle {
    pub n: usize,
    pub gamma: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub lambda_tilde: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    /// `||W - I||_2` of the mixing matrix.
    pub beta: f64,
    pub gap_lower_bound: f64,
    /// Constant used in the omega bound; not determined by the analysis.
    pub c: f64,
    pub omega_bound: f64,
}

impl TheoryBundle {
    pub fn compute(n: usize, gamma: f64, beta: f64, c: f64) -> Result<Self, TheoryError> {
        let sigma = momentum_sigma(n, gamma)?;
        let lambda = rate_lambda(n, gamma)?;
        let (kappa2, kappa3) = kappa_constants(sigma)?;
        Ok(Self {
            n,
            gamma,
            sigma,
            lambda,
            lambda_tilde: rate_lambda_tilde(n, gamma)?,
            kappa2,
            kappa3,
            beta,
            gap_lower_bound: gap_lower_bound(n, gamma)?,
            c,
            omega_bound: omega_feasibility_bound(gamma, beta, sigma, lambda, c)?,
        })
    }
}
