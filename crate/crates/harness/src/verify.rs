//! Built-in self-checks with measured margins. Faults can be injected to
//! confirm that each check is able to fail.

use compressed_gossip::mixing::{check_invariants, AugmentedMatrix, ROW_SUM_TOLERANCE};
use compressed_gossip::seeding::splitmix64;
use compressed_gossip::theory::{
    gap_lower_bound, resolvable_horizon, running_growth_sup, ContractionParams,
};
use compressed_gossip::{
    AgentMatrix, AlgorithmConfig, Compressor, CompressorSpec, ConsensusState, Graph,
    InitDistribution, MixingMatrix, Variant,
};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Deliberate defects for mutation-testing the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Moves weight onto one diagonal entry of every mixing matrix.
    BreakDoubleStochasticity,
    /// Doubles every compressor output.
    BiasCompressor,
}

impl std::str::FromStr for Fault {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "break-double-stochasticity" => Ok(Self::BreakDoubleStochasticity),
            "bias-compressor" => Ok(Self::BiasCompressor),
            _ => Err(HarnessError::Config(format!("unknown fault {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    MixingInvariants,
    GapBound,
    LemmaContraction,
    LemmaGrowth,
    CompressorContract,
    MeanPreservation,
}

impl CheckKind {
    pub const ALL: [CheckKind; 6] = [
        Self::MixingInvariants,
        Self::GapBound,
        Self::LemmaContraction,
        Self::LemmaGrowth,
        Self::CompressorContract,
        Self::MeanPreservation,
    ];
    pub const LEMMA: [CheckKind; 2] = [Self::LemmaContraction, Self::LemmaGrowth];
    pub const GAP: [CheckKind; 1] = [Self::GapBound];
}

/// One line of the report. `margin` is positive when the check holds with
/// room to spare and negative when it is violated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub detail: String,
}

impl CheckResult {
    fn from_margin(name: impl Into<String>, margin: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: margin >= 0.0,
            margin,
            detail,
        }
    }

    fn failure(name: impl Into<String>, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: false,
            margin: f64::NEG_INFINITY,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub faults: Vec<Fault>,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Runs every check.
pub fn verify_suite(faults: &[Fault]) -> VerifyReport {
    verify_checks(&CheckKind::ALL, faults)
}

pub fn verify_checks(kinds: &[CheckKind], faults: &[Fault]) -> VerifyReport {
    let mut checks = Vec::new();
    for kind in kinds {
        match kind {
            CheckKind::MixingInvariants => checks.push(mixing_invariants(faults)),
            CheckKind::GapBound => {
                checks.push(gap_bound("path", Graph::path));
                checks.push(gap_bound("ring", Graph::ring));
            }
            CheckKind::LemmaContraction => checks.push(lemma_contraction()),
            CheckKind::LemmaGrowth => checks.push(lemma_growth()),
            CheckKind::CompressorContract => checks.extend(compressor_contract(faults)),
            CheckKind::MeanPreservation => checks.push(mean_preservation(faults)),
        }
    }
    VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        faults: faults.to_vec(),
        checks,
    }
}

fn mixing_for(graph: &Graph, faults: &[Fault]) -> Result<MixingMatrix, HarnessError> {
    let w = MixingMatrix::metropolis_hastings(graph)?;
    if !faults.contains(&Fault::BreakDoubleStochasticity) {
        return Ok(w);
    }
    let mut entries = w.entries().clone();
    entries[(0, 0)] += 1e-3;
    Ok(MixingMatrix::from_dense(entries, graph)?)
}

fn mixing_invariants(faults: &[Fault]) -> CheckResult {
    const NAME: &str = "mixing-invariants";
    let mut graphs = Vec::new();
    for n in [10, 50] {
        graphs.extend([Graph::path(n), Graph::ring(n), Graph::complete(n)]);
    }
    for seed in 0..20 {
        graphs.push(Graph::random_connected(5 + (seed as usize * 7) % 40, 0.1, seed));
    }
    let mut worst = 0.0f64;
    for graph in graphs {
        let graph = match graph {
            Ok(g) => g,
            Err(e) => return CheckResult::failure(NAME, e.to_string()),
        };
        let mut entries = match MixingMatrix::metropolis_hastings(&graph) {
            Ok(w) => w.entries().clone(),
            Err(e) => return CheckResult::failure(NAME, e.to_string()),
        };
        if faults.contains(&Fault::BreakDoubleStochasticity) {
            entries[(0, 0)] += 1e-3;
        }
        if let Err(e) = check_invariants(&entries, &graph) {
            return CheckResult::failure(NAME, format!("n = {}: {e}", graph.n()));
        }
        for row in entries.row_iter() {
            worst = worst.max((row.sum() - 1.0).abs());
        }
    }
    CheckResult::from_margin(
        NAME,
        ROW_SUM_TOLERANCE - worst,
        format!("largest row-sum error {worst:e} over 26 graphs"),
    )
}

/// Smallest relative slack `delta(M) / (gamma / 25 n^2) - 1` over a grid of sizes.
fn gap_bound(topology: &str, build: fn(usize) -> Result<Graph, compressed_gossip::graph::GraphError>) -> CheckResult {
    let name = format!("gap-bound/{topology}");
    let mut worst = f64::INFINITY;
    let mut detail = Vec::new();
    for n in [10, 20, 50, 100] {
        for gamma in [0.1, 0.5] {
            let measured = build(n)
                .map_err(HarnessError::from)
                .and_then(|g| Ok(MixingMatrix::metropolis_hastings(&g)?))
                .and_then(|w| Ok(w.lazy(gamma)?.spectrum()?.spectral_gap));
            let (measured, bound) = match (measured, gap_lower_bound(n, gamma)) {
                (Ok(m), Ok(b)) => (m, b),
                (Err(e), _) => return CheckResult::failure(name, e.to_string()),
                (_, Err(e)) => return CheckResult::failure(name, e.to_string()),
            };
            let slack = measured / bound - 1.0;
            worst = worst.min(slack);
            detail.push(format!("n={n} gamma={gamma}: gap {measured:.6e} vs bound {bound:.6e}"));
        }
    }
    CheckResult::from_margin(name, worst, detail.join("; "))
}

fn random_vector(len: usize, seed: u64) -> Vec<f64> {
    InitDistribution::Normal.sample(1, len, seed).as_slice().to_vec()
}

fn lazy_path(n: usize, gamma: f64) -> Result<MixingMatrix, HarnessError> {
    Ok(MixingMatrix::metropolis_hastings(&Graph::path(n)?)?.lazy(gamma)?)
}

fn augmented(a: &MixingMatrix) -> Result<(AugmentedMatrix, ContractionParams), HarnessError> {
    let params = ContractionParams::tightest(a.spectrum()?.second_largest())?;
    Ok((AugmentedMatrix::build(a, params.sigma)?, params))
}

/// Slowest non-constant eigenvector of the Metropolis–Hastings path matrix.
fn path_slow_mode(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (std::f64::consts::PI * (i as f64 + 0.5) / n as f64).cos())
        .collect()
}

/// `||B^t v - v_bar|| <= (1 + t/p) lambda^(t-1) ||v - v_bar||` for stacked
/// `v = [q; q]`, on random `q` and on the slowest mode, where the bound is
/// nearly attained.
fn lemma_contraction() -> CheckResult {
    const NAME: &str = "lemma-contraction";
    let run = || -> Result<f64, HarnessError> {
        let mut worst = 0.0f64;
        for n in [5, 10, 20] {
            for gamma in [0.1, 0.5] {
                let (b, params) = augmented(&lazy_path(n, gamma)?)?;
                let horizon = resolvable_horizon(params.lambda, 500).max(1);
                let mut inputs = vec![path_slow_mode(n)];
                inputs.extend((0..3).map(|k| random_vector(n, splitmix64(n as u64 * 1000 + k))));
                for q in inputs {
                    let v: Vec<f64> = q.iter().chain(&q).copied().collect();
                    let norms = b.power_contraction(&v, horizon)?;
                    for (t, norm) in norms.iter().enumerate().skip(1) {
                        let envelope = (1.0 + t as f64 / params.p)
                            * params.lambda.powi(t as i32 - 1)
                            * norms[0];
                        worst = worst.max(norm / envelope);
                    }
                }
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(worst) => CheckResult::from_margin(
            NAME,
            1.0 - worst,
            format!("largest ratio to (1 + t/p) lambda^(t-1): {worst:.6}"),
        ),
        Err(e) => CheckResult::failure(NAME, e.to_string()),
    }
}

/// `||B^t v|| / (t lambda^t)` for `v = [q; 0]` with zero-mean `q` should
/// level off: the running supremum may grow by at most 2x from `t = 50` to
/// the last resolvable round (at most 500).
fn lemma_growth() -> CheckResult {
    const NAME: &str = "lemma-growth";
    let run = || -> Result<f64, HarnessError> {
        let mut worst = 0.0f64;
        for n in [5, 10, 20] {
            for gamma in [0.1, 0.5] {
                let (b, params) = augmented(&lazy_path(n, gamma)?)?;
                let mut q = random_vector(n, splitmix64(n as u64 + 77));
                let mean = q.iter().sum::<f64>() / n as f64;
                q.iter_mut().for_each(|x| *x -= mean);
                let v: Vec<f64> = q.iter().copied().chain(std::iter::repeat_n(0.0, n)).collect();
                let horizon = resolvable_horizon(params.lambda, 500);
                if horizon <= 50 {
                    continue;
                }
                let norms = b.power_contraction(&v, horizon)?;
                let sup = running_growth_sup(&norms, params.lambda);
                // sup[t - 1] holds the supremum over 1..=t.
                let ratio = sup[horizon - 1] / sup[49];
                if !ratio.is_finite() {
                    return Err(HarnessError::Config(format!("non-finite growth at n = {n}")));
                }
                worst = worst.max(ratio);
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(worst) => CheckResult::from_margin(
            NAME,
            2.0 - worst,
            format!("largest sup(end) / sup(50) ratio {worst:.6}"),
        ),
        Err(e) => CheckResult::failure(NAME, e.to_string()),
    }
}

fn relative_error(c: &mut Compressor, x: &[f64], faults: &[Fault]) -> Result<f64, HarnessError> {
    let mut q = c.compress(x)?;
    if faults.contains(&Fault::BiasCompressor) {
        q.iter_mut().for_each(|v| *v *= 2.0);
    }
    let err: f64 = q.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
    let norm: f64 = x.iter().map(|v| v * v).sum();
    Ok(err / norm)
}

/// Monte Carlo mean of `||Q(x) - x||^2 / ||x||^2` over `draws` random inputs.
fn mc_ratio(spec: CompressorSpec, d: usize, draws: u64, faults: &[Fault]) -> Result<f64, HarnessError> {
    let mut c = Compressor::new(spec, d, splitmix64(d as u64 ^ 0xc0ffee))?;
    let mut total = 0.0;
    for draw in 0..draws {
        total += relative_error(&mut c, &random_vector(d, splitmix64(draw)), faults)?;
    }
    Ok(total / draws as f64)
}

fn compressor_contract(faults: &[Fault]) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for k in [1, 10, 25] {
        let name = format!("compressor/rand_{k}");
        let expected = 1.0 - k as f64 / 50.0;
        out.push(match mc_ratio(CompressorSpec::RandK(k), 50, 10_000, faults) {
            Ok(r) => CheckResult::from_margin(
                name,
                0.05 - (r / expected - 1.0).abs(),
                format!("mean ratio {r:.6} vs {expected:.6}"),
            ),
            Err(e) => CheckResult::failure(name, e.to_string()),
        });
    }
    let top = || -> Result<f64, HarnessError> {
        let spec = CompressorSpec::TopK(10);
        let mut c = Compressor::new(spec, 50, 0)?;
        let bound = 1.0 - 10.0 / 50.0;
        let mut worst = f64::NEG_INFINITY;
        for draw in 0..1000 {
            let r = relative_error(&mut c, &random_vector(50, splitmix64(draw + 1)), faults)?;
            worst = worst.max(r - bound);
        }
        Ok(-worst)
    };
    out.push(match top() {
        Ok(m) => CheckResult::from_margin("compressor/top_10", m, "1000 vectors, d = 50".into()),
        Err(e) => CheckResult::failure("compressor/top_10", e.to_string()),
    });
    let spec = CompressorSpec::Qsgd(5);
    out.push(
        match (mc_ratio(spec, 150, 2000, faults), spec.omega_squared(150)) {
            (Ok(r), Ok(w2)) => CheckResult::from_margin(
                "compressor/qsgd_5",
                1.05 * w2 - r,
                format!("mean ratio {r:.6} vs omega^2 {w2:.6}"),
            ),
            (Err(e), _) => CheckResult::failure("compressor/qsgd_5", e.to_string()),
            (_, Err(e)) => CheckResult::failure("compressor/qsgd_5", e.to_string()),
        },
    );
    out
}

fn mean_drift(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    diff / scale
}

/// Largest relative drift of the column means of `X` and `Y` over 200 rounds.
fn mean_preservation(faults: &[Fault]) -> CheckResult {
    const NAME: &str = "mean-preservation";
    let run = || -> Result<f64, HarnessError> {
        let mut worst = 0.0f64;
        for graph in [Graph::path(12)?, Graph::ring(12)?] {
            let w = mixing_for(&graph, faults)?;
            for variant in Variant::ALL {
                let spec = if variant.is_compressed() {
                    CompressorSpec::Qsgd(5)
                } else {
                    CompressorSpec::Identity
                };
                let x0: AgentMatrix = InitDistribution::Uniform.sample(graph.n(), 5, 3);
                let start = x0.column_means();
                let cfg = AlgorithmConfig::new(variant, 0.5, spec);
                let mut state = ConsensusState::init(x0, &graph, &w, cfg, 9)?;
                for _ in 0..200 {
                    state.step()?;
                    worst = worst
                        .max(mean_drift(&start, &state.x().column_means()))
                        .max(mean_drift(&start, &state.y().column_means()));
                }
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(worst) => CheckResult::from_margin(
            NAME,
            1e-9 - worst,
            format!("largest relative drift {worst:e}"),
        ),
        Err(e) => CheckResult::failure(NAME, e.to_string()),
    }
}
