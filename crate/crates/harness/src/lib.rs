//! Experiment harness for compressed gossip: configuration, seeded sweeps,
//! step-size tuning, self-checks, and CSV/JSON persistence.

use std::path::PathBuf;

use compressed_gossip::compression::CompressionError;
use compressed_gossip::graph::GraphError;
use compressed_gossip::mixing::MixingError;
use compressed_gossip::theory::TheoryError;
use compressed_gossip::ConsensusError;
use thiserror::Error;

pub mod bounds;
pub mod config;
pub mod experiment;
pub mod output;
pub mod verify;

pub use config::{ExperimentConfig, ExperimentKind, Topology};
pub use experiment::{
    run_experiment, tune_gamma, CellResult, CellSpec, ExperimentOutput, SummaryRow, TrialRecord,
    TrialStatus, TuneOutcome,
};
pub use verify::{verify_suite, Fault, VerifyReport};

pub use compressed_gossip;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Mixing(#[from] MixingError),
    #[error(transparent)]
    Compression(#[from] CompressionError),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
