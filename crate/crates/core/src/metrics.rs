//! Consensus error, run traces, and empirical rate fits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::AgentMatrix;
use crate::compression::CompressorSpec;
use crate::consensus::Variant;

/// Fraction of leading rounds dropped before fitting a rate.
pub const BURN_IN_FRACTION: f64 = 0.1;
pub const MIN_FIT_ROWS: usize = 20;
pub const MIN_SCALING_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("need at least {needed} rows with psi > 0, got {available}")]
    InsufficientData { needed: usize, available: usize },
    #[error("need at least {needed} scaling points, got {available}")]
    TooFewPoints { needed: usize, available: usize },
    #[error("scaling point n = {n} did not converge")]
    NotConverged { n: usize },
    #[error("scaling point n = {n} has non-positive value {value}")]
    NonPositive { n: usize, value: f64 },
}

/// `Psi(X) = ||X - 1 x_bar^T||_F`, the Frobenius distance to the matrix of
/// replicated column means.
pub fn psi(x: &AgentMatrix) -> f64 {
    let means = x.column_means();
    let mut total = 0.0;
    for i in 0..x.rows() {
        for (v, m) in x.row(i).iter().zip(&means) {
            let dev = v - m;
            total += dev * dev;
        }
    }
    total.sqrt()
}

/// Configuration echoed alongside every trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub variant: Variant,
    pub topology: String,
    pub n: usize,
    pub d: usize,
    pub gamma: f64,
    pub sigma: f64,
    pub sigma_overridden: bool,
    pub compressor: CompressorSpec,
    pub omega: f64,
    pub message_bits: u64,
    pub edges: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub max_rounds: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: u64,
    pub psi: f64,
    pub bits_cumulative: u64,
}

/// Per-round consensus error of one run. Every round transmits the same
/// number of bits, so cumulative bits are `t * bits_per_round`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub meta: RunMetadata,
    /// `psi[t]` is `Psi_x(t)`, starting at `t = 0`.
    pub psi: Vec<f64>,
    pub bits_per_round: u64,
    pub converged: bool,
    pub rounds_to_eps: Option<u64>,
}

impl RunTrace {
    pub fn rows(&self) -> impl Iterator<Item = TraceRow> + '_ {
        self.psi.iter().enumerate().map(|(t, &psi)| TraceRow {
            t: t as u64,
            psi,
            bits_cumulative: t as u64 * self.bits_per_round,
        })
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    /// Index of the last recorded round.
    pub fn final_round(&self) -> u64 {
        self.psi.len().saturating_sub(1) as u64
    }

    pub fn final_psi(&self) -> f64 {
        self.psi.last().copied().unwrap_or(f64::NAN)
    }

    pub fn bits_to_eps(&self) -> Option<u64> {
        self.rounds_to_eps.map(|t| t * self.bits_per_round)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Fitted per-round contraction factor `exp(slope)`.
    pub rho: f64,
    pub r_squared: f64,
    /// Rounds excluded from the front of the trace.
    pub burn_in: usize,
    pub points: usize,
}

pub fn fit_linear_rate(trace: &RunTrace) -> Result<RateFit, MetricsError> {
    fit_log_linear(&trace.psi)
}

/// Least-squares slope of `ln psi[t]` against `t`, skipping the first 10% of
/// rounds and any exact zeros.
pub fn fit_log_linear(psi: &[f64]) -> Result<RateFit, MetricsError> {
    let available = psi.iter().filter(|p| **p > 0.0).count();
    if available < MIN_FIT_ROWS {
        return Err(MetricsError::InsufficientData {
            needed: MIN_FIT_ROWS,
            available,
        });
    }
    let burn_in = (psi.len() as f64 * BURN_IN_FRACTION).floor() as usize;
    let points: Vec<(f64, f64)> = psi
        .iter()
        .enumerate()
        .skip(burn_in)
        .filter(|(_, p)| **p > 0.0)
        .map(|(t, p)| (t as f64, p.ln()))
        .collect();
    let line = least_squares(&points);
    Ok(RateFit {
        rho: line.slope.exp(),
        r_squared: line.r_squared,
        burn_in,
        points: points.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares on `(x, y)` pairs. A perfect fit, including a
/// constant `y`, reports `r_squared = 1`.
pub fn least_squares(points: &[(f64, f64)]) -> LineFit {
    let m = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / m;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = points
        .iter()
        .map(|&(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    LineFit {
        slope,
        intercept,
        r_squared,
    }
}

/// One point of a rounds-versus-size sweep; `rounds` is `None` when the
/// cell failed to reach epsilon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub rounds: Option<f64>,
}

/// Slope of `ln rounds` against `ln n`.
pub fn scaling_exponent(points: &[ScalingPoint]) -> Result<f64, MetricsError> {
    if points.len() < MIN_SCALING_POINTS {
        return Err(MetricsError::TooFewPoints {
            needed: MIN_SCALING_POINTS,
            available: points.len(),
        });
    }
    let mut logs = Vec::with_capacity(points.len());
    for p in points {
        let rounds = p.rounds.ok_or(MetricsError::NotConverged { n: p.n })?;
        if rounds <= 0.0 || p.n == 0 {
            return Err(MetricsError::NonPositive { n: p.n, value: rounds });
        }
        logs.push(((p.n as f64).ln(), rounds.ln()));
    }
    Ok(least_squares(&logs).slope)
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
    Some((mean, var.sqrt()))
}
