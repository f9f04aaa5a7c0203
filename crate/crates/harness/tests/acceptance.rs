//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails. Experiment outputs are kept under
//! the target tmp dir for plotting.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use compressed_gossip::{
    AgentMatrix, AlgorithmConfig, Compressor, CompressorSpec, ConsensusState, Graph,
    InitDistribution, MixingMatrix, Variant,
};
use gossip_harness::output::write_experiment;
use gossip_harness::{run_experiment, ExperimentConfig, ExperimentKind, ExperimentOutput, Topology};

const SEG: Variant = Variant::ScalableExactGossip;
const SCG: Variant = Variant::ScalableCompressedGossip;
const CG: Variant = Variant::CompressedGossip;
const EG: Variant = Variant::ExactGossip;

/// Smallest `lambda^t` at which an f64 power iteration still resolves the
/// lemma bounds; below it the iterates sit on the rounding floor.
const RESOLVABLE: f64 = 1e-10;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Self::new(false, format!("error: {e}"))
    }
}

#[derive(Default)]
struct Shared {
    scaling: Option<ExperimentOutput>,
    bits: Option<ExperimentOutput>,
}

fn out_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name)
}

fn column_means(x: &AgentMatrix) -> Vec<f64> {
    let mut sums = vec![0.0; x.cols()];
    for i in 0..x.rows() {
        for (s, v) in sums.iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    sums.iter().map(|s| s / x.rows() as f64).collect()
}

/// Frobenius distance of the rows from their average.
fn spread(x: &AgentMatrix) -> f64 {
    let means = column_means(x);
    let mut total = 0.0;
    for i in 0..x.rows() {
        for (v, m) in x.row(i).iter().zip(&means) {
            total += (v - m) * (v - m);
        }
    }
    total.sqrt()
}

fn compressor_for(variant: Variant, spec: CompressorSpec) -> CompressorSpec {
    if variant.is_compressed() {
        spec
    } else {
        CompressorSpec::Identity
    }
}

fn mean_preservation() -> Verdict {
    let run = || -> Result<f64, Box<dyn std::error::Error>> {
        let mut worst = 0.0f64;
        for graph in [Graph::path(20)?, Graph::ring(20)?] {
            let w = MixingMatrix::metropolis_hastings(&graph)?;
            for variant in Variant::ALL {
                for d in [1, 10] {
                    for seed in 0..5u64 {
                        let x0 = InitDistribution::Uniform.sample(20, d, 100 + seed);
                        let start = column_means(&x0);
                        let cfg = AlgorithmConfig::new(
                            variant,
                            0.5,
                            compressor_for(variant, CompressorSpec::Qsgd(5)),
                        );
                        let mut state = ConsensusState::init(x0, &graph, &w, cfg, seed)?;
                        for _ in 0..500 {
                            state.step()?;
                            for m in [column_means(state.x()), column_means(state.y())] {
                                for (a, b) in m.iter().zip(&start) {
                                    worst = worst.max((a - b).abs() / b.abs());
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(worst) => Verdict::new(worst <= 1e-9, format!("largest relative drift {worst:.3e} (limit 1e-9)")),
        Err(e) => Verdict::error(e),
    }
}

fn specialization_equivalence() -> Verdict {
    let run = || -> Result<Vec<String>, Box<dyn std::error::Error>> {
        let graph = Graph::path(10)?;
        let w = MixingMatrix::metropolis_hastings(&graph)?;
        let q = CompressorSpec::Qsgd(5);
        let id = CompressorSpec::Identity;
        let pairs = [
            ("SCG(identity) vs SEG", AlgorithmConfig::new(SCG, 0.3, id), AlgorithmConfig::new(SEG, 0.3, id)),
            ("CG(identity) vs EG", AlgorithmConfig::new(CG, 0.3, id), AlgorithmConfig::new(EG, 0.3, id)),
            ("SCG(sigma=0) vs CG", AlgorithmConfig::new(SCG, 0.3, q).with_sigma(0.0), AlgorithmConfig::new(CG, 0.3, q)),
        ];
        let mut mismatches = Vec::new();
        for (name, a, b) in pairs {
            for seed in 0..3u64 {
                let x0 = InitDistribution::Normal.sample(10, 6, seed);
                let mut sa = ConsensusState::init(x0.clone(), &graph, &w, a, seed)?;
                let mut sb = ConsensusState::init(x0, &graph, &w, b, seed)?;
                for t in 1..=100 {
                    sa.step()?;
                    sb.step()?;
                    let same = sa.x().as_slice().iter().zip(sb.x().as_slice()).all(|(u, v)| u.to_bits() == v.to_bits())
                        && sa.y().as_slice().iter().zip(sb.y().as_slice()).all(|(u, v)| u.to_bits() == v.to_bits());
                    if !same {
                        mismatches.push(format!("{name} seed {seed} round {t}"));
                        break;
                    }
                }
            }
        }
        Ok(mismatches)
    };
    match run() {
        Ok(m) if m.is_empty() => Verdict::new(true, "3 pairs x 3 seeds bit-identical over 100 rounds"),
        Ok(m) => Verdict::new(false, format!("first mismatch: {}", m[0])),
        Err(e) => Verdict::error(e),
    }
}

fn one_step_exactness() -> Verdict {
    let run = || -> Result<f64, Box<dyn std::error::Error>> {
        let mut worst = 0.0f64;
        for n in [2, 5, 20] {
            let graph = Graph::complete(n)?;
            let w = MixingMatrix::metropolis_hastings(&graph)?;
            let x0 = InitDistribution::Normal.sample(n, 4, n as u64);
            let psi0 = spread(&x0);
            let cfg = AlgorithmConfig::new(EG, 1.0, CompressorSpec::Identity);
            let mut state = ConsensusState::init(x0, &graph, &w, cfg, 1)?;
            state.step()?;
            worst = worst.max(spread(state.x()) / (1e-12 * psi0.max(1.0)));
        }
        Ok(worst)
    };
    match run() {
        Ok(r) => Verdict::new(r <= 1.0, format!("largest psi(1) / (1e-12 max(1, psi(0))) = {r:.3e}")),
        Err(e) => Verdict::error(e),
    }
}

fn squared_error_ratio(q: &[f64], x: &[f64]) -> f64 {
    let err: f64 = q.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
    err / x.iter().map(|v| v * v).sum::<f64>()
}

fn compressor_contract() -> Verdict {
    let run = || -> Result<(bool, String), Box<dyn std::error::Error>> {
        let mut notes = Vec::new();
        let mut passed = true;
        let d = 50;
        let inputs = InitDistribution::Normal.sample(10_000, d, 4242);
        for k in [1, 10, 25] {
            let mut c = Compressor::new(CompressorSpec::RandK(k), d, 17 + k as u64)?;
            let mut total = 0.0;
            for i in 0..inputs.rows() {
                total += squared_error_ratio(&c.compress(inputs.row(i))?, inputs.row(i));
            }
            let mean = total / inputs.rows() as f64;
            let expected = 1.0 - k as f64 / d as f64;
            let rel = (mean / expected - 1.0).abs();
            passed &= rel <= 0.05;
            notes.push(format!("rand_{k} rel err {rel:.4}"));
        }
        for k in [1, 10, 25] {
            let mut c = Compressor::new(CompressorSpec::TopK(k), d, 0)?;
            let bound = 1.0 - k as f64 / d as f64;
            let mut worst = 0.0f64;
            for i in 0..1000 {
                worst = worst.max(squared_error_ratio(&c.compress(inputs.row(i))?, inputs.row(i)) / bound);
            }
            passed &= worst <= 1.0;
            notes.push(format!("top_{k} worst/bound {worst:.4}"));
        }
        let d = 150;
        let spec = CompressorSpec::Qsgd(5);
        let omega2 = spec.omega_squared(d)?;
        passed &= (omega2 - 0.4).abs() < 1e-12;
        let inputs = InitDistribution::Normal.sample(10_000, d, 99);
        let mut c = Compressor::new(spec, d, 5)?;
        let mut total = 0.0;
        for i in 0..inputs.rows() {
            total += squared_error_ratio(&c.compress(inputs.row(i))?, inputs.row(i));
        }
        let mean = total / inputs.rows() as f64;
        passed &= mean <= 0.4 * 1.05;
        notes.push(format!("qsgd_5 omega^2 {omega2:.6}, MC ratio {mean:.4} (limit 0.42)"));
        Ok((passed, notes.join("; ")))
    };
    match run() {
        Ok((p, detail)) => Verdict::new(p, detail),
        Err(e) => Verdict::error(e),
    }
}

/// Second-largest eigenvalue of the lazy Metropolis-Hastings path matrix.
/// Every edge weight is 1/3, so `W = I - L/3` and the path Laplacian has
/// eigenvalues `2 - 2 cos(pi k / n)`.
fn lazy_path_lambda2(n: usize, gamma: f64) -> f64 {
    1.0 - gamma * (2.0 - 2.0 * (PI / n as f64).cos()) / 3.0
}

fn spectral_gap_bound() -> Verdict {
    let run = || -> Result<(f64, f64), Box<dyn std::error::Error>> {
        let (mut worst_margin, mut worst_oracle) = (f64::INFINITY, 0.0f64);
        for n in [10, 20, 50, 100, 200] {
            let w = MixingMatrix::metropolis_hastings(&Graph::path(n)?)?;
            for gamma in [0.1, 0.5] {
                let gap = w.lazy(gamma)?.spectrum()?.spectral_gap;
                let closed = 1.0 - lazy_path_lambda2(n, gamma);
                worst_oracle = worst_oracle.max((gap - closed).abs());
                worst_margin = worst_margin.min(gap / (gamma / (25.0 * (n * n) as f64)));
            }
        }
        Ok((worst_margin, worst_oracle))
    };
    match run() {
        Ok((ratio, oracle)) => Verdict::new(
            ratio >= 1.0 && oracle < 1e-9,
            format!("smallest gap / bound {ratio:.4}; eigensolver vs closed form {oracle:.2e}"),
        ),
        Err(e) => Verdict::error(e),
    }
}

/// Lazy MH path matrix written out by hand.
fn lazy_path_matrix(n: usize, gamma: f64) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        let degree = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
        a[i][i] = 1.0 - gamma * degree / 3.0;
        if i + 1 < n {
            a[i][i + 1] = gamma / 3.0;
            a[i + 1][i] = gamma / 3.0;
        }
    }
    a
}

/// One multiplication by `[[(1 + s) A, -s A], [I, 0]]`.
fn apply_augmented(a: &[Vec<f64>], sigma: f64, v: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; 2 * n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += a[i][j] * ((1.0 + sigma) * v[j] - sigma * v[n + j]);
        }
        out[i] = acc;
        out[n + i] = v[i];
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn augmented_lemma() -> Verdict {
    let mut worst_a = 0.0f64;
    let mut worst_envelope = 0.0f64;
    let mut worst_b = 0.0f64;
    let mut c_hat_finite = true;
    for n in [5, 10, 20] {
        for gamma in [0.1, 0.5] {
            let a = lazy_path_matrix(n, gamma);
            let p = 1.0 / (1.0 - lazy_path_lambda2(n, gamma)).sqrt();
            let lambda = 1.0 - 1.0 / p;
            let sigma = (p - 1.0) / (p + 1.0);
            let horizon = (1..=500usize)
                .take_while(|&t| lambda.powi(t as i32) >= RESOLVABLE)
                .last()
                .unwrap_or(0);
            let qs = InitDistribution::Normal.sample(10, n, 7 * n as u64 + (gamma * 10.0) as u64);
            for r in 0..10 {
                let q = qs.row(r);
                // Case (a): v = [q; q], limit is the mean of q in every entry.
                let mean = q.iter().sum::<f64>() / n as f64;
                let mut v: Vec<f64> = q.iter().chain(q).copied().collect();
                let dist = |v: &[f64]| norm(&v.iter().map(|x| x - mean).collect::<Vec<_>>());
                let d0 = dist(&v);
                for t in 1..=horizon {
                    v = apply_augmented(&a, sigma, &v);
                    let ratio = dist(&v) / (2.0 * lambda.powi(t as i32) * d0);
                    worst_a = worst_a.max(ratio);
                    // Critically damped slow mode: (1 + t/p) lambda^(t-1) is attained.
                    worst_envelope = worst_envelope.max(ratio * 2.0 * lambda / (1.0 + t as f64 / p));
                }
                // Case (b): v = [q - mean; 0].
                let mut v: Vec<f64> = q.iter().map(|x| x - mean).chain(std::iter::repeat_n(0.0, n)).collect();
                let mut sup = Vec::with_capacity(horizon);
                let mut running = 0.0f64;
                for t in 1..=horizon {
                    v = apply_augmented(&a, sigma, &v);
                    running = running.max(norm(&v) / (t as f64 * lambda.powi(t as i32)));
                    sup.push(running);
                }
                c_hat_finite &= running.is_finite();
                if horizon > 50 {
                    worst_b = worst_b.max(sup[horizon - 1] / sup[49]);
                }
            }
        }
    }
    let passed = worst_a <= 1.0 && worst_b <= 2.0 && c_hat_finite;
    Verdict::new(
        passed,
        format!(
            "(a) largest ratio to 2 lambda^t: {worst_a:.4} (to (1 + t/p) lambda^(t-1): {worst_envelope:.4}); \
             (b) running-sup max/min {worst_b:.4}, C-hat finite: {c_hat_finite}"
        ),
    )
}

fn seg_rate() -> Verdict {
    let run = || -> Result<f64, Box<dyn std::error::Error>> {
        let mut worst = 0.0f64;
        for n in [10, 50] {
            let graph = Graph::path(n)?;
            let w = MixingMatrix::metropolis_hastings(&graph)?;
            let lambda = 1.0 - 0.5f64.sqrt() / (5.0 * n as f64);
            for seed in 0..3u64 {
                let x0 = InitDistribution::Uniform.sample(n, 10, 500 + seed);
                let psi0 = spread(&x0);
                let cfg = AlgorithmConfig::new(SEG, 0.5, CompressorSpec::Identity);
                let mut state = ConsensusState::init(x0, &graph, &w, cfg, seed)?;
                for t in 1..=2000 {
                    state.step()?;
                    worst = worst.max(spread(state.x()) / (2.0 * lambda.powi(t) * psi0));
                }
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(r) => Verdict::new(r <= 1.0, format!("largest psi(t) / (2 lambda^t psi(0)) = {r:.4}")),
        Err(e) => Verdict::error(e),
    }
}

const GAMMA_GRID: [f64; 6] = [0.5, 0.25, 0.1, 0.05, 0.01, 0.005];

/// Least-squares slope of `ln rounds` against `ln n`.
fn log_log_slope(points: &[(usize, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn exponent_of(out: &ExperimentOutput, variant: Variant) -> Result<f64, String> {
    let mut points = Vec::new();
    for tuned in out.tuning.iter().filter(|t| t.variant == variant) {
        let rounds = tuned
            .best
            .as_ref()
            .and_then(|c| c.mean_rounds())
            .ok_or_else(|| format!("{variant} infeasible at n = {}", tuned.n))?;
        points.push((tuned.n, rounds));
    }
    if points.len() < 2 {
        return Err(format!("{variant}: too few sizes"));
    }
    Ok(log_log_slope(&points))
}

fn scaling_separation(shared: &mut Shared) -> Verdict {
    let cfg = ExperimentConfig {
        kind: ExperimentKind::SweepN,
        topology: Topology::Path,
        n: vec![10, 20, 40, 60, 80, 100],
        d: 50,
        variants: vec![CG, SCG],
        gamma: GAMMA_GRID.to_vec(),
        compressor: CompressorSpec::Qsgd(5),
        epsilon: 1e-4,
        trials: 5,
        trace_stride: 10,
        ..ExperimentConfig::default()
    };
    let out = match run_experiment(&cfg) {
        Ok(out) => out,
        Err(e) => return Verdict::error(e),
    };
    if let Err(e) = write_experiment(&out_dir("sweep_n"), &out) {
        return Verdict::error(e);
    }
    let tuned: Vec<String> = out
        .tuning
        .iter()
        .map(|t| format!("{}@{}={}", t.variant, t.n, t.best_gamma().map_or("-".into(), |g| g.to_string())))
        .collect();
    let verdict = match (exponent_of(&out, SCG), exponent_of(&out, CG)) {
        (Ok(s), Ok(c)) => Verdict::new(
            (0.7..=1.6).contains(&s) && (1.6..=2.6).contains(&c) && s < c - 0.3,
            format!("exponent SCG {s:.3} (0.7..1.6), CG {c:.3} (1.6..2.6); tuned {}", tuned.join(" ")),
        ),
        (Err(e), _) | (_, Err(e)) => Verdict::new(false, e),
    };
    shared.scaling = Some(out);
    verdict
}

fn bit_efficiency(shared: &mut Shared) -> Verdict {
    let cfg = ExperimentConfig {
        kind: ExperimentKind::CompareVariants,
        topology: Topology::Ring,
        n: vec![120],
        d: 150,
        variants: vec![SEG, SCG],
        gamma: GAMMA_GRID.to_vec(),
        compressor: CompressorSpec::Qsgd(5),
        epsilon: 1e-4,
        trials: 5,
        trace_stride: 10,
        ..ExperimentConfig::default()
    };
    let out = match run_experiment(&cfg) {
        Ok(out) => out,
        Err(e) => return Verdict::error(e),
    };
    if let Err(e) = write_experiment(&out_dir("compare"), &out) {
        return Verdict::error(e);
    }
    let stats = |variant: Variant| {
        out.cells.iter().find(|c| c.spec.variant == variant).and_then(|c| {
            let row = c.summary();
            Some((row.rounds?.0, row.bits?.0, c.spec.gamma))
        })
    };
    let verdict = match (stats(SCG), stats(SEG)) {
        (Some((sr, sb, sg)), Some((er, eb, eg))) => {
            let bits = sb / eb;
            let rounds = sr / er;
            Verdict::new(
                bits <= 0.25 && rounds <= 2.0,
                format!(
                    "bits SCG/SEG {bits:.4} (limit 0.25), rounds SCG/SEG {rounds:.4} (limit 2); \
                     gamma SCG {sg}, SEG {eg}"
                ),
            )
        }
        _ => Verdict::new(false, "a variant did not converge for any gamma"),
    };
    shared.bits = Some(out);
    verdict
}

/// R^2 of the least-squares line through `ln psi[t]` after dropping the
/// first 10% of rounds.
fn log_fit_r_squared(psi: &[f64]) -> f64 {
    let skip = psi.len() / 10;
    let pts: Vec<(f64, f64)> = psi
        .iter()
        .enumerate()
        .skip(skip)
        .filter(|(_, p)| **p > 0.0)
        .map(|(t, p)| (t as f64, p.ln()))
        .collect();
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    let slope = sxy / sxx;
    let sse: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    1.0 - sse / syy
}

fn scg_linear_convergence(shared: &Shared) -> Verdict {
    let mut runs = 0;
    let mut low = Vec::new();
    let mut worst = 1.0f64;
    for out in [&shared.scaling, &shared.bits].into_iter().flatten() {
        for cell in out.cells.iter().filter(|c| c.spec.variant == SCG) {
            for trial in &cell.trials {
                let Some(trace) = trial.trace.as_ref().filter(|t| t.converged) else { continue };
                runs += 1;
                let r2 = log_fit_r_squared(&trace.psi);
                worst = worst.min(r2);
                if r2 < 0.98 {
                    low.push(format!("{}#{} R2={r2:.4}", cell.spec.id(), trial.trial));
                }
            }
        }
    }
    if runs == 0 {
        return Verdict::new(false, "no converging SCG runs available");
    }
    let mut detail = format!("{runs} converging runs, smallest R2 {worst:.4} (limit 0.98)");
    if !low.is_empty() {
        detail += &format!("; below limit: {}", low.join(", "));
    }
    Verdict::new(low.is_empty(), detail)
}

fn feasibility_frontier() -> Verdict {
    let gammas = [0.001, 0.005, 0.01, 0.025];
    let cfg = ExperimentConfig {
        kind: ExperimentKind::SweepGamma,
        topology: Topology::Path,
        n: vec![2, 3, 4, 5, 6, 8, 10, 20],
        d: 100,
        variants: vec![SCG],
        gamma: gammas.to_vec(),
        compressor: CompressorSpec::Qsgd(3),
        epsilon: 1e-3,
        max_rounds: 300_000,
        trials: 3,
        write_traces: false,
        ..ExperimentConfig::default()
    };
    let out = match run_experiment(&cfg) {
        Ok(out) => out,
        Err(e) => return Verdict::error(e),
    };
    if let Err(e) = write_experiment(&out_dir("feasibility"), &out) {
        return Verdict::error(e);
    }
    let frontier: Vec<usize> = gammas
        .iter()
        .map(|&g| {
            out.cells
                .iter()
                .filter(|c| c.spec.gamma == g && c.all_converged())
                .map(|c| c.spec.n)
                .max()
                .unwrap_or(0)
        })
        .collect();
    let monotone = frontier.windows(2).all(|w| w[1] <= w[0]);
    let listing: Vec<String> = gammas.iter().zip(&frontier).map(|(g, n)| format!("{g}:{n}")).collect();
    Verdict::new(monotone, format!("largest converging n per gamma {}", listing.join(" ")))
}

fn main() -> ExitCode {
    let mut shared = Shared::default();
    type Check = Box<dyn FnOnce(&mut Shared) -> Verdict>;
    let criteria: Vec<(u32, &str, Duration, Check)> = vec![
        (1, "mean preservation", Duration::from_secs(30), Box::new(|_| mean_preservation())),
        (2, "specialization equivalence", Duration::from_secs(10), Box::new(|_| specialization_equivalence())),
        (3, "one-step exactness", Duration::from_secs(10), Box::new(|_| one_step_exactness())),
        (4, "compressor contract", Duration::from_secs(60), Box::new(|_| compressor_contract())),
        (5, "spectral gap bound", Duration::from_secs(60), Box::new(|_| spectral_gap_bound())),
        (6, "augmented matrix contraction", Duration::from_secs(60), Box::new(|_| augmented_lemma())),
        (7, "SEG rate", Duration::from_secs(60), Box::new(|_| seg_rate())),
        (8, "scaling separation", Duration::from_secs(15 * 60), Box::new(scaling_separation)),
        (9, "bit efficiency", Duration::from_secs(10 * 60), Box::new(bit_efficiency)),
        (10, "SCG linear convergence", Duration::from_secs(60), Box::new(|s: &mut Shared| scg_linear_convergence(s))),
        (11, "feasibility frontier", Duration::from_secs(15 * 60), Box::new(|_| feasibility_frontier())),
    ];
    let mut failed = Vec::new();
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let mut verdict = check(&mut shared);
        let elapsed = start.elapsed();
        if elapsed > limit {
            verdict.passed = false;
            verdict.detail += &format!("; exceeded {}s", limit.as_secs());
        }
        let tag = if verdict.passed { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {tag} {name} [{:.1}s]: {}", elapsed.as_secs_f64(), verdict.detail);
        if !verdict.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
