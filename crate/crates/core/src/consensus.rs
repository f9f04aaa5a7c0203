//! Synchronous compressed gossip with optional heavy-ball momentum.
//!
//! One round, in stacked-matrix form:
//!
//! ```text
//! Xhat(t+1) = Xhat(t) + Q(X(t) - Xhat(t))
//! Y(t+1)    = X(t) + gamma (W - I) Xhat(t+1)
//! X(t+1)    = (1 + sigma) Y(t+1) - sigma Y(t)
//! ```
//!
//! with `Y(0) = X(0)` and `Xhat(0) = 0`. Exact gossip (EG), compressed gossip
//! (CG), scalable exact gossip (SEG) and scalable compressed gossip (SCG) are
//! parameter choices of the same recursion: `sigma = 0` for EG/CG, the
//! identity compressor for EG/SEG.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::AgentMatrix;
use crate::compression::{CompressionError, Compressor, CompressorSpec};
use crate::graph::Graph;
use crate::metrics::{psi, RunMetadata, RunTrace};
use crate::mixing::{check_invariants, MixingError, MixingMatrix};
use crate::seeding::agent_seed;
use crate::theory::{self, TheoryError};

/// A run diverges once `Psi` exceeds this multiple of `Psi(0)`.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConsensusError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Compression(#[from] CompressionError),
    #[error(transparent)]
    Mixing(#[from] MixingError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("diverged at round {round} (psi = {psi})")]
    Diverged {
        round: u64,
        psi: f64,
        /// Everything recorded up to and including the divergent round.
        trace: Box<RunTrace>,
    },
    #[error("run() needs a fresh state, this one is at round {0}")]
    NotFresh(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "EG")]
    ExactGossip,
    #[serde(rename = "CG")]
    CompressedGossip,
    #[serde(rename = "SEG")]
    ScalableExactGossip,
    #[serde(rename = "SCG")]
    ScalableCompressedGossip,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Self::ExactGossip,
        Self::CompressedGossip,
        Self::ScalableExactGossip,
        Self::ScalableCompressedGossip,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::ExactGossip => "EG",
            Self::CompressedGossip => "CG",
            Self::ScalableExactGossip => "SEG",
            Self::ScalableCompressedGossip => "SCG",
        }
    }

    /// Uses momentum.
    pub fn is_scalable(self) -> bool {
        matches!(self, Self::ScalableExactGossip | Self::ScalableCompressedGossip)
    }

    /// Accepts a non-identity compressor.
    pub fn is_compressed(self) -> bool {
        matches!(self, Self::CompressedGossip | Self::ScalableCompressedGossip)
    }

    /// Largest admissible step size.
    pub fn max_gamma(self) -> f64 {
        if self.is_scalable() {
            0.5
        } else {
            1.0
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Variant {
    type Err = ConsensusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ConsensusError::Config(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub variant: Variant,
    pub gamma: f64,
    pub compressor: CompressorSpec,
    /// Replaces the default momentum of SEG/SCG.
    pub sigma_override: Option<f64>,
}

impl AlgorithmConfig {
    pub fn new(variant: Variant, gamma: f64, compressor: CompressorSpec) -> Self {
        Self {
            variant,
            gamma,
            compressor,
            sigma_override: None,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma_override = Some(sigma);
        self
    }

    pub fn validate(&self, d: usize) -> Result<(), ConsensusError> {
        let max_gamma = self.variant.max_gamma();
        if !(self.gamma > 0.0 && self.gamma <= max_gamma) {
            return Err(ConsensusError::Config(format!(
                "{} needs gamma in (0, {max_gamma}], got {}",
                self.variant, self.gamma
            )));
        }
        if !self.variant.is_compressed() && !self.compressor.is_identity() {
            return Err(ConsensusError::Config(format!(
                "{} communicates exactly; compressor {} is not allowed",
                self.variant, self.compressor
            )));
        }
        if let Some(sigma) = self.sigma_override {
            if !self.variant.is_scalable() {
                return Err(ConsensusError::Config(format!(
                    "{} has no momentum to override",
                    self.variant
                )));
            }
            if !(0.0..1.0).contains(&sigma) {
                return Err(ConsensusError::Config(format!(
                    "sigma must lie in [0, 1), got {sigma}"
                )));
            }
        }
        self.compressor.validate(d)?;
        Ok(())
    }

    /// Momentum used on a network of `n` agents.
    pub fn sigma(&self, n: usize) -> Result<f64, ConsensusError> {
        match (self.variant.is_scalable(), self.sigma_override) {
            (false, _) => Ok(0.0),
            (true, Some(sigma)) => Ok(sigma),
            (true, None) => Ok(theory::momentum_sigma(n, self.gamma)?),
        }
    }
}

/// Observables of one completed round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub t: u64,
    pub psi: f64,
    /// One message per direction on every edge.
    pub bits_sent_total: u64,
}

#[derive(Debug, Clone)]
pub struct ConsensusState {
    t: u64,
    x: AgentMatrix,
    y: AgentMatrix,
    xhat: AgentMatrix,
    y_next: AgentMatrix,
    target_mean: Vec<f64>,
    psi0: f64,
    gamma: f64,
    sigma: f64,
    neighbors: Vec<Vec<(usize, f64)>>,
    compressors: Vec<Compressor>,
    diff: Vec<f64>,
    q: Vec<f64>,
    bits_per_round: u64,
    meta: RunMetadata,
}

impl ConsensusState {
    /// Sets `Y(0) = X(0)`, `Xhat(0) = 0` and gives agent `i` a compressor
    /// stream seeded with `seed ^ i`.
    pub fn init(
        x0: AgentMatrix,
        graph: &Graph,
        mixing: &MixingMatrix,
        cfg: AlgorithmConfig,
        seed: u64,
    ) -> Result<Self, ConsensusError> {
        let (n, d) = (x0.rows(), x0.cols());
        if n != graph.n() || mixing.n() != graph.n() {
            return Err(ConsensusError::Dimension(format!(
                "x0 has {n} rows, graph {} nodes, mixing matrix size {}",
                graph.n(),
                mixing.n()
            )));
        }
        if d == 0 {
            return Err(ConsensusError::Dimension("d must be at least 1".into()));
        }
        check_invariants(mixing.entries(), graph)?;
        cfg.validate(d)?;
        let sigma = if n >= 2 { cfg.sigma(n)? } else { 0.0 };
        let compressors = (0..n)
            .map(|i| Compressor::new(cfg.compressor, d, agent_seed(seed, i)))
            .collect::<Result<Vec<_>, _>>()?;
        let message_bits = cfg.compressor.message_bits(d)?;
        let bits_per_round = 2 * graph.edge_count() as u64 * message_bits;
        let meta = RunMetadata {
            variant: cfg.variant,
            topology: "custom".into(),
            n,
            d,
            gamma: cfg.gamma,
            sigma,
            sigma_overridden: cfg.sigma_override.is_some(),
            compressor: cfg.compressor,
            omega: cfg.compressor.omega(d)?,
            message_bits,
            edges: graph.edge_count(),
            seed,
            epsilon: f64::NAN,
            max_rounds: 0,
        };
        Ok(Self {
            t: 0,
            target_mean: x0.column_means(),
            psi0: psi(&x0),
            y: x0.clone(),
            xhat: AgentMatrix::zeros(n, d),
            y_next: AgentMatrix::zeros(n, d),
            x: x0,
            gamma: cfg.gamma,
            sigma,
            neighbors: mixing.off_diagonal_rows(),
            compressors,
            diff: vec![0.0; d],
            q: vec![0.0; d],
            bits_per_round,
            meta,
        })
    }

    /// Names the topology in the metadata of traces produced by [`run`](Self::run).
    pub fn set_topology_label(&mut self, label: impl Into<String>) {
        self.meta.topology = label.into();
    }

    pub fn round(&self) -> u64 {
        self.t
    }

    pub fn x(&self) -> &AgentMatrix {
        &self.x
    }

    pub fn y(&self) -> &AgentMatrix {
        &self.y
    }

    pub fn xhat(&self) -> &AgentMatrix {
        &self.xhat
    }

    /// Column means of `X(0)`.
    pub fn target_mean(&self) -> &[f64] {
        &self.target_mean
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn psi(&self) -> f64 {
        psi(&self.x)
    }

    pub fn bits_per_round(&self) -> u64 {
        self.bits_per_round
    }

    pub fn metadata(&self) -> &RunMetadata {
        &self.meta
    }

    /// Advances one synchronous round.
    pub fn step(&mut self) -> Result<RoundReport, ConsensusError> {
        let n = self.x.rows();
        for i in 0..n {
            for ((dst, x), xh) in self.diff.iter_mut().zip(self.x.row(i)).zip(self.xhat.row(i)) {
                *dst = x - xh;
            }
            self.compressors[i].compress_into(&self.diff, &mut self.q)?;
            for (xh, q) in self.xhat.row_mut(i).iter_mut().zip(&self.q) {
                *xh += q;
            }
        }

        for i in 0..n {
            let out = self.y_next.row_mut(i);
            out.copy_from_slice(self.x.row(i));
            let own = self.xhat.row(i);
            for &(j, w) in &self.neighbors[i] {
                let scale = self.gamma * w;
                for ((o, xj), xi) in out.iter_mut().zip(self.xhat.row(j)).zip(own) {
                    *o += scale * (xj - xi);
                }
            }
        }

        let (ahead, behind) = (1.0 + self.sigma, self.sigma);
        for ((x, y_new), y_old) in self
            .x
            .as_mut_slice()
            .iter_mut()
            .zip(self.y_next.as_slice())
            .zip(self.y.as_slice())
        {
            *x = ahead * y_new - behind * y_old;
        }
        std::mem::swap(&mut self.y, &mut self.y_next);
        self.t += 1;

        Ok(RoundReport {
            t: self.t,
            psi: self.psi(),
            bits_sent_total: self.bits_per_round,
        })
    }

    fn is_divergent(&self, psi: f64) -> bool {
        !psi.is_finite() || (self.psi0 > 0.0 && psi > DIVERGENCE_FACTOR * self.psi0)
    }

    /// Steps until `Psi <= epsilon` or `max_rounds` rounds have run.
    pub fn run(&mut self, epsilon: f64, max_rounds: u64) -> Result<RunTrace, ConsensusError> {
        if self.t != 0 {
            return Err(ConsensusError::NotFresh(self.t));
        }
        if !(epsilon > 0.0) {
            return Err(ConsensusError::Config(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let mut meta = self.meta.clone();
        meta.epsilon = epsilon;
        meta.max_rounds = max_rounds;
        let mut trace = RunTrace {
            meta,
            psi: vec![self.psi0],
            bits_per_round: self.bits_per_round,
            converged: false,
            rounds_to_eps: None,
        };
        if self.psi0 <= epsilon {
            trace.converged = true;
            trace.rounds_to_eps = Some(0);
            return Ok(trace);
        }
        while self.t < max_rounds {
            let report = self.step()?;
            trace.psi.push(report.psi);
            if self.is_divergent(report.psi) {
                return Err(ConsensusError::Diverged {
                    round: report.t,
                    psi: report.psi,
                    trace: Box::new(trace),
                });
            }
            if report.psi <= epsilon {
                trace.converged = true;
                trace.rounds_to_eps = Some(report.t);
                break;
            }
        }
        Ok(trace)
    }
}
