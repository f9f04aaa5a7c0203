//! Closed-form constants for concrete networks.

use compressed_gossip::theory::TheoryBundle;
use compressed_gossip::MixingMatrix;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub topology: String,
    #[serde(flatten)]
    pub bundle: TheoryBundle,
    /// Spectral gap of the lazy Metropolis–Hastings matrix, for comparison
    /// with `gap_lower_bound`.
    pub measured_gap: f64,
}

/// Theory constants for `topology(n)` with Metropolis–Hastings weights;
/// `beta` is measured as `||W - I||_2`.
pub fn bounds_for(
    cfg: &ExperimentConfig,
    n: usize,
    gamma: f64,
) -> Result<BoundsReport, HarnessError> {
    let graph = cfg.topology.build(n)?;
    let w = MixingMatrix::metropolis_hastings(&graph)?;
    let beta = w.deviation_norm()?;
    let bundle = TheoryBundle::compute(graph.n(), gamma, beta, cfg.c)?;
    let measured_gap = w.lazy(gamma)?.spectrum()?.spectral_gap;
    Ok(BoundsReport {
        topology: cfg.topology.label(),
        bundle,
        measured_gap,
    })
}

/// One report per (n, gamma) pair of the config, n-major.
pub fn bounds(cfg: &ExperimentConfig) -> Result<Vec<BoundsReport>, HarnessError> {
    cfg.validate()?;
    let mut out = Vec::new();
    for n in cfg.sizes()? {
        for &gamma in &cfg.gamma {
            out.push(bounds_for(cfg, n, gamma)?);
        }
    }
    Ok(out)
}
