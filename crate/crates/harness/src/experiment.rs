//! Seeded experiment cells, step-size tuning, and per-cell aggregates.

use compressed_gossip::metrics::{fit_linear_rate, mean_std, RateFit};
use compressed_gossip::seeding::{init_seed, trial_seed};
use compressed_gossip::{
    CompressorSpec, ConsensusError, ConsensusState, Graph, MixingMatrix, RunTrace, Variant,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::HarnessError;

/// A network instance shared by every cell with the same topology and size.
#[derive(Debug, Clone)]
pub struct Network {
    pub label: String,
    pub graph: Graph,
    pub mixing: MixingMatrix,
}

impl Network {
    pub fn build(cfg: &ExperimentConfig, n: usize) -> Result<Self, HarnessError> {
        let graph = cfg.topology.build(n)?;
        let mixing = MixingMatrix::metropolis_hastings(&graph)?;
        Ok(Self {
            label: cfg.topology.label(),
            graph,
            mixing,
        })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }
}

/// One (variant, network, d, gamma) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub variant: Variant,
    pub topology: String,
    pub n: usize,
    pub d: usize,
    pub gamma: f64,
    pub sigma: f64,
    pub compressor: CompressorSpec,
    pub epsilon: f64,
}

impl CellSpec {
    pub fn id(&self) -> String {
        format!(
            "{}/{}/n{}/d{}/g{}",
            self.variant, self.topology, self.n, self.d, self.gamma
        )
    }

    /// `cell_id` with characters that are awkward in file names replaced.
    pub fn file_stem(&self) -> String {
        self.id()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
            .collect()
    }

    /// Key hashed into trial seeds. Variant and gamma are left out so that
    /// every cell on the same network starts from the same `X(0)`.
    pub fn seed_key(&self) -> String {
        format!("{}/{}/{}", self.topology, self.n, self.d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Converged,
    /// Hit `max_rounds` without reaching epsilon.
    MaxRounds,
    /// Stopped by the tuning budget before reaching epsilon.
    Pruned,
    Diverged,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    /// Round budget of this trial; below `max_rounds` when tuning prunes it.
    pub round_cap: u64,
    pub status: TrialStatus,
    pub rounds_to_eps: Option<u64>,
    pub bits_to_eps: Option<u64>,
    pub final_round: u64,
    pub final_psi: f64,
    pub fit: Option<RateFit>,
    pub error: Option<String>,
    #[serde(skip)]
    pub trace: Option<RunTrace>,
}

impl TrialRecord {
    pub fn converged(&self) -> bool {
        self.status == TrialStatus::Converged
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub spec: CellSpec,
    pub trials: Vec<TrialRecord>,
    /// Set when the cell could not be simulated at all.
    pub error: Option<String>,
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub cell_id: String,
    pub spec: CellSpec,
    pub trials: u64,
    /// Rounds and bits statistics are only defined when every trial converged.
    pub rounds: Option<(f64, f64)>,
    pub bits: Option<(f64, f64)>,
    /// Mean fitted contraction factor over trials with a fit.
    pub rho_mean: Option<f64>,
    pub diverged_count: u64,
}

impl CellResult {
    pub fn all_converged(&self) -> bool {
        self.error.is_none() && !self.trials.is_empty() && self.trials.iter().all(|t| t.converged())
    }

    pub fn diverged_count(&self) -> u64 {
        self.trials
            .iter()
            .filter(|t| t.status == TrialStatus::Diverged)
            .count() as u64
    }

    pub fn mean_rounds(&self) -> Option<f64> {
        self.summary().rounds.map(|(mean, _)| mean)
    }

    pub fn summary(&self) -> SummaryRow {
        let (rounds, bits) = if self.all_converged() {
            let r: Vec<f64> = self
                .trials
                .iter()
                .filter_map(|t| t.rounds_to_eps.map(|v| v as f64))
                .collect();
            let b: Vec<f64> = self
                .trials
                .iter()
                .filter_map(|t| t.bits_to_eps.map(|v| v as f64))
                .collect();
            (mean_std(&r), mean_std(&b))
        } else {
            (None, None)
        };
        let rhos: Vec<f64> = self.trials.iter().filter_map(|t| t.fit.map(|f| f.rho)).collect();
        SummaryRow {
            cell_id: self.spec.id(),
            spec: self.spec.clone(),
            trials: self.trials.len() as u64,
            rounds,
            bits,
            rho_mean: mean_std(&rhos).map(|(m, _)| m),
            diverged_count: self.diverged_count(),
        }
    }
}

/// Outcome of one gamma candidate during tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateStatus {
    /// Every trial converged.
    Eligible,
    /// Could no longer beat the best candidate so far.
    Pruned,
    Diverged,
    NotConverged,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub gamma: f64,
    pub status: CandidateStatus,
    pub trials_run: u64,
    /// Rounds simulated for this candidate, including the stopped trial.
    pub rounds_spent: u64,
    pub mean_rounds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub variant: Variant,
    pub topology: String,
    pub n: usize,
    pub d: usize,
    pub candidates: Vec<CandidateResult>,
    /// The winning cell with all of its trials; `None` when no gamma is eligible.
    pub best: Option<CellResult>,
}

impl TuneOutcome {
    pub fn best_gamma(&self) -> Option<f64> {
        self.best.as_ref().map(|c| c.spec.gamma)
    }

    pub fn feasible(&self) -> bool {
        self.best.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    /// Simulated cells; for tuned experiments only each winning cell.
    pub cells: Vec<CellResult>,
    pub tuning: Vec<TuneOutcome>,
}

impl ExperimentOutput {
    pub fn summary(&self) -> Vec<SummaryRow> {
        self.cells.iter().map(CellResult::summary).collect()
    }
}

fn cell_spec(
    cfg: &ExperimentConfig,
    net: &Network,
    variant: Variant,
    gamma: f64,
) -> Result<CellSpec, HarnessError> {
    Ok(CellSpec {
        variant,
        topology: net.label.clone(),
        n: net.n(),
        d: cfg.d,
        gamma,
        sigma: cfg.algorithm(variant, gamma).sigma(net.n())?,
        compressor: cfg.compressor_for(variant),
        epsilon: cfg.epsilon,
    })
}

/// Runs one trial for at most `round_cap` rounds. Errors are recorded in the
/// returned record rather than propagated.
pub fn run_trial(
    cfg: &ExperimentConfig,
    net: &Network,
    spec: &CellSpec,
    trial: u64,
    round_cap: u64,
) -> TrialRecord {
    let seed = trial_seed(cfg.base_seed, &spec.seed_key(), trial);
    let x0 = cfg.init.sample(net.n(), cfg.d, init_seed(seed));
    let mut record = TrialRecord {
        trial,
        seed,
        round_cap,
        status: TrialStatus::Failed,
        rounds_to_eps: None,
        bits_to_eps: None,
        final_round: 0,
        final_psi: f64::NAN,
        fit: None,
        error: None,
        trace: None,
    };
    let outcome = ConsensusState::init(
        x0,
        &net.graph,
        &net.mixing,
        cfg.algorithm(spec.variant, spec.gamma),
        seed,
    )
    .and_then(|mut state| {
        state.set_topology_label(net.label.clone());
        state.run(cfg.epsilon, round_cap)
    });
    let mut trace = match outcome {
        Ok(trace) => {
            record.status = if trace.converged {
                TrialStatus::Converged
            } else if round_cap < cfg.max_rounds {
                TrialStatus::Pruned
            } else {
                TrialStatus::MaxRounds
            };
            trace
        }
        Err(ConsensusError::Diverged { trace, .. }) => {
            record.status = TrialStatus::Diverged;
            *trace
        }
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    trace.meta.max_rounds = cfg.max_rounds;
    record.rounds_to_eps = trace.rounds_to_eps;
    record.bits_to_eps = trace.bits_to_eps();
    record.final_round = trace.final_round();
    record.final_psi = trace.final_psi();
    record.fit = fit_linear_rate(&trace).ok();
    if cfg.write_traces {
        record.trace = Some(trace);
    }
    record
}

/// Runs every trial of one cell with the full round budget.
pub fn run_cell(
    cfg: &ExperimentConfig,
    net: &Network,
    variant: Variant,
    gamma: f64,
) -> CellResult {
    match cell_spec(cfg, net, variant, gamma) {
        Ok(spec) => CellResult {
            trials: (0..cfg.trials)
                .map(|trial| run_trial(cfg, net, &spec, trial, cfg.max_rounds))
                .collect(),
            spec,
            error: None,
        },
        Err(e) => CellResult {
            spec: CellSpec {
                variant,
                topology: net.label.clone(),
                n: net.n(),
                d: cfg.d,
                gamma,
                sigma: f64::NAN,
                compressor: cfg.compressor_for(variant),
                epsilon: cfg.epsilon,
            },
            trials: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

/// Picks the gamma in `grid` with the fewest mean rounds to epsilon over
/// `cfg.trials` trials, preferring the smallest gamma on ties. A gamma is
/// eligible only if all of its trials converge.
///
/// Candidates are cut off as soon as they can no longer win: each trial runs
/// with a cap equal to the best total so far minus the rounds this candidate
/// has already used. The result is identical to evaluating the full grid.
pub fn tune_gamma(
    cfg: &ExperimentConfig,
    net: &Network,
    variant: Variant,
    grid: &[f64],
) -> Result<TuneOutcome, HarnessError> {
    if grid.is_empty() {
        return Err(HarnessError::Config("gamma grid is empty".into()));
    }
    let mut candidates = Vec::with_capacity(grid.len());
    // (gamma, total rounds over all trials, cell)
    let mut best: Option<(f64, u64, CellResult)> = None;
    for &gamma in grid {
        let spec = cell_spec(cfg, net, variant, gamma)?;
        let allowed = best.as_ref().map(|&(best_gamma, total, _)| {
            if gamma < best_gamma {
                total
            } else {
                total.saturating_sub(1)
            }
        });
        let mut trials = Vec::new();
        let mut spent = 0u64;
        let mut status = CandidateStatus::Eligible;
        for trial in 0..cfg.trials {
            let cap = match allowed {
                None => cfg.max_rounds,
                Some(allowed) if allowed < spent => {
                    status = CandidateStatus::Pruned;
                    break;
                }
                Some(allowed) => cfg.max_rounds.min(allowed - spent),
            };
            let record = run_trial(cfg, net, &spec, trial, cap);
            let record_status = record.status;
            spent += record.rounds_to_eps.unwrap_or(record.final_round);
            trials.push(record);
            status = match record_status {
                TrialStatus::Converged => continue,
                TrialStatus::Pruned => CandidateStatus::Pruned,
                TrialStatus::MaxRounds => CandidateStatus::NotConverged,
                TrialStatus::Diverged => CandidateStatus::Diverged,
                TrialStatus::Failed => CandidateStatus::Failed,
            };
            break;
        }
        let eligible = status == CandidateStatus::Eligible;
        candidates.push(CandidateResult {
            gamma,
            status,
            trials_run: trials.len() as u64,
            rounds_spent: spent,
            mean_rounds: eligible.then(|| spent as f64 / cfg.trials as f64),
        });
        if eligible {
            let wins = match &best {
                None => true,
                Some((best_gamma, total, _)) => {
                    spent < *total || (spent == *total && gamma < *best_gamma)
                }
            };
            if wins {
                let cell = CellResult {
                    spec,
                    trials,
                    error: None,
                };
                best = Some((gamma, spent, cell));
            }
        }
    }
    Ok(TuneOutcome {
        variant,
        topology: net.label.clone(),
        n: net.n(),
        d: cfg.d,
        candidates,
        best: best.map(|(_, _, cell)| cell),
    })
}

fn worker_pool(workers: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start {workers} workers: {e}")))
}

/// Validates `cfg` and runs every simulation cell it describes. Cells run
/// concurrently on `cfg.workers` threads; results come back in
/// (variant, n, gamma) order regardless of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    cfg.validate()?;
    if !cfg.kind.is_simulation() {
        return Err(HarnessError::Config(format!(
            "{} is not a simulation experiment",
            cfg.kind
        )));
    }
    let networks = cfg
        .sizes()?
        .into_iter()
        .map(|n| Network::build(cfg, n))
        .collect::<Result<Vec<_>, _>>()?;
    let pool = worker_pool(cfg.workers)?;
    let mut output = ExperimentOutput {
        config: cfg.clone(),
        cells: Vec::new(),
        tuning: Vec::new(),
    };
    if cfg.tunes_gamma() {
        let jobs: Vec<(Variant, &Network)> = cfg
            .variants
            .iter()
            .flat_map(|&v| networks.iter().map(move |net| (v, net)))
            .collect();
        let tuned = pool.install(|| {
            jobs.par_iter()
                .map(|&(variant, net)| tune_gamma(cfg, net, variant, &cfg.gamma))
                .collect::<Result<Vec<_>, _>>()
        })?;
        output.cells = tuned.iter().filter_map(|t| t.best.clone()).collect();
        output.tuning = tuned;
    } else {
        let jobs: Vec<(Variant, &Network, f64)> = cfg
            .variants
            .iter()
            .flat_map(|&v| {
                networks
                    .iter()
                    .flat_map(move |net| cfg.gamma.iter().map(move |&g| (v, net, g)))
            })
            .collect();
        output.cells = pool.install(|| {
            jobs.par_iter()
                .map(|&(variant, net, gamma)| run_cell(cfg, net, variant, gamma))
                .collect()
        });
    }
    Ok(output)
}
