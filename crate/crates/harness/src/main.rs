use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use compressed_gossip::{CompressorSpec, InitDistribution, Variant};
use gossip_harness::bounds::bounds;
use gossip_harness::output::{write_experiment, write_json};
use gossip_harness::verify::{verify_checks, CheckKind};
use gossip_harness::{run_experiment, ExperimentConfig, ExperimentKind, Fault, HarnessError, Topology};

#[derive(Parser)]
#[command(name = "gossip", version, about = "Compressed gossip consensus experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a single cell.
    Run(Overrides),
    /// Rounds to epsilon across network sizes.
    SweepN(Overrides),
    /// Every gamma of the grid across network sizes, including divergent cells.
    SweepGamma(Overrides),
    /// Several variants on one network.
    Compare(Overrides),
    /// Best gamma of the grid per variant and size.
    Tune(Overrides),
    /// Run the built-in checks and write verify.json.
    Verify {
        #[command(flatten)]
        overrides: Overrides,
        /// Inject a defect (break-double-stochasticity, bias-compressor).
        #[arg(long = "fault")]
        faults: Vec<Fault>,
    },
    /// Print closed-form bounds as JSON.
    Bounds(Overrides),
}

/// Flags mirror the config file keys and take precedence over it.
#[derive(Args, Default)]
struct Overrides {
    /// TOML file with experiment settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    topology: Option<Topology>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<Variant>>,
    #[arg(long, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
    #[arg(long)]
    compressor: Option<CompressorSpec>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_rounds: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long, value_parser = parse_init)]
    init: Option<InitDistribution>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    trace_stride: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Skip per-run trace files.
    #[arg(long)]
    no_traces: bool,
}

fn parse_init(s: &str) -> Result<InitDistribution, String> {
    match s {
        "uniform" => Ok(InitDistribution::Uniform),
        "normal" => Ok(InitDistribution::Normal),
        _ => Err(format!("unknown init distribution {s:?}")),
    }
}

impl Overrides {
    /// Defaults, then the config file, then flags. A `kind` in the file must
    /// be one of `accepted`; without one the first accepted kind is used.
    fn resolve(&self, accepted: &[ExperimentKind]) -> Result<(ExperimentConfig, bool), HarnessError> {
        let (mut cfg, declared) = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => (ExperimentConfig::default(), false),
        };
        if !declared {
            cfg.kind = accepted[0];
        } else if !accepted.contains(&cfg.kind) {
            return Err(HarnessError::Config(format!(
                "config kind {} does not match this subcommand",
                cfg.kind
            )));
        }
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { cfg.$field = v.clone(); })*
            };
        }
        set!(topology, n, d, variants, gamma, compressor, epsilon, max_rounds, trials, base_seed, init, c, trace_stride, workers);
        if self.sigma.is_some() {
            cfg.sigma = self.sigma;
        }
        if self.no_traces {
            cfg.write_traces = false;
        }
        Ok((cfg, declared))
    }
}

fn simulate(overrides: &Overrides, kind: ExperimentKind) -> Result<ExitCode, HarnessError> {
    let (cfg, _) = overrides.resolve(&[kind])?;
    let output = run_experiment(&cfg)?;
    let written = write_experiment(&overrides.out, &output)?;
    for row in output.summary() {
        let rounds = row
            .rounds
            .map(|(m, _)| format!("{m:.1}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{}  mean_rounds={}  diverged={}/{}",
            row.cell_id, rounds, row.diverged_count, row.trials
        );
    }
    for t in &output.tuning {
        match t.best_gamma() {
            Some(g) => println!("tuned {} {} n={}: gamma={g}", t.variant, t.topology, t.n),
            None => println!("tuned {} {} n={}: infeasible", t.variant, t.topology, t.n),
        }
    }
    println!("wrote {} files to {}", written.len(), overrides.out.display());
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Run(o) => simulate(&o, ExperimentKind::SingleRun),
        Command::SweepN(o) => simulate(&o, ExperimentKind::SweepN),
        Command::SweepGamma(o) => simulate(&o, ExperimentKind::SweepGamma),
        Command::Compare(o) => simulate(&o, ExperimentKind::CompareVariants),
        Command::Tune(o) => simulate(&o, ExperimentKind::Tune),
        Command::Verify { overrides, faults } => {
            let (cfg, declared) =
                overrides.resolve(&[ExperimentKind::VerifyLemma, ExperimentKind::VerifyGap])?;
            let kinds: &[CheckKind] = match (declared, cfg.kind) {
                (false, _) => &CheckKind::ALL,
                (true, ExperimentKind::VerifyGap) => &CheckKind::GAP,
                (true, _) => &CheckKind::LEMMA,
            };
            let report = verify_checks(kinds, &faults);
            for c in &report.checks {
                let verdict = if c.passed { "PASS" } else { "FAIL" };
                println!("{verdict} {:<24} margin={:+.6e}  {}", c.name, c.margin, c.detail);
            }
            let path = write_json(&overrides.out, "verify.json", &report)?;
            println!("wrote {}", path.display());
            Ok(if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Bounds(o) => {
            let reports = bounds(&o.resolve(&[ExperimentKind::Bounds])?.0)?;
            println!("{}", serde_json::to_string_pretty(&reports)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
