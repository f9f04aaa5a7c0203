//! Decentralized average consensus with compressed communication.
//!
//! The crate simulates the gossip family EG / CG / SEG / SCG on static
//! undirected networks and provides the analysis pieces around it:
//!
//! * [`graph`]: path, ring, complete and edge-list topologies.
//! * [`mixing`]: Metropolis–Hastings weights, lazy matrices, spectra and the
//!   augmented momentum matrix.
//! * [`compression`]: `rand_k`, `top_k`, `qsgd_k` and bit accounting.
//! * [`consensus`]: the synchronous round and run loop.
//! * [`theory`]: closed-form rates and bounds.
//! * [`metrics`]: consensus error, traces and rate fits.

pub mod agents;
pub mod compression;
pub mod consensus;
pub mod graph;
pub mod metrics;
pub mod mixing;
pub mod seeding;
pub mod theory;

pub use agents::{AgentMatrix, InitDistribution};
pub use compression::{Compressor, CompressorSpec};
pub use consensus::{AlgorithmConfig, ConsensusError, ConsensusState, RoundReport, Variant};
pub use graph::Graph;
pub use metrics::{RunMetadata, RunTrace};
pub use mixing::{AugmentedMatrix, MixingMatrix, Spectrum};
