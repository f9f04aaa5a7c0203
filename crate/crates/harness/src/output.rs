//! CSV and JSON files written by the harness. Floats are written with 17
//! significant digits and rows in a fixed order, so identical configs give
//! byte-identical files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use compressed_gossip::metrics::{RateFit, RunMetadata};
use compressed_gossip::mixing::format_sig17;
use compressed_gossip::theory;
use compressed_gossip::{InitDistribution, RunTrace};
use serde::Serialize;

use crate::experiment::{CellResult, ExperimentOutput, SummaryRow, TrialRecord, TuneOutcome};
use crate::HarnessError;

pub const SUMMARY_HEADER: [&str; 17] = [
    "cell_id",
    "variant",
    "topology",
    "n",
    "d",
    "gamma",
    "sigma",
    "compressor",
    "k",
    "epsilon",
    "trials",
    "mean_rounds",
    "std_rounds",
    "mean_bits",
    "std_bits",
    "rho_mean",
    "diverged_count",
];

pub const TRACE_HEADER: [&str; 3] = ["t", "psi", "bits_cumulative"];

pub const TUNING_HEADER: [&str; 9] = [
    "variant",
    "topology",
    "n",
    "d",
    "gamma",
    "status",
    "trials_run",
    "rounds_spent",
    "mean_rounds",
];

fn opt_f64(v: Option<f64>) -> String {
    v.map(format_sig17).unwrap_or_default()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn summary_record(row: &SummaryRow) -> Vec<String> {
    let s = &row.spec;
    vec![
        row.cell_id.clone(),
        s.variant.to_string(),
        s.topology.clone(),
        s.n.to_string(),
        s.d.to_string(),
        format_sig17(s.gamma),
        format_sig17(s.sigma),
        s.compressor.family().to_string(),
        s.compressor.k().map(|k| k.to_string()).unwrap_or_default(),
        format_sig17(s.epsilon),
        row.trials.to_string(),
        opt_f64(row.rounds.map(|r| r.0)),
        opt_f64(row.rounds.map(|r| r.1)),
        opt_f64(row.bits.map(|b| b.0)),
        opt_f64(row.bits.map(|b| b.1)),
        opt_f64(row.rho_mean),
        row.diverged_count.to_string(),
    ]
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for row in rows {
        w.write_record(summary_record(row))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes every `stride`-th row of the trace plus its final row.
pub fn write_trace<W: Write>(out: W, trace: &RunTrace, stride: u64) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    let last = trace.final_round();
    for row in trace.rows().filter(|r| r.t % stride.max(1) == 0 || r.t == last) {
        w.write_record([
            row.t.to_string(),
            format_sig17(row.psi),
            row.bits_cumulative.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_tuning<W: Write>(out: W, tuning: &[TuneOutcome]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TUNING_HEADER)?;
    for t in tuning {
        for c in &t.candidates {
            let status = serde_json::to_value(c.status)?;
            w.write_record([
                t.variant.to_string(),
                t.topology.clone(),
                t.n.to_string(),
                t.d.to_string(),
                format_sig17(c.gamma),
                status.as_str().unwrap_or_default().to_string(),
                c.trials_run.to_string(),
                c.rounds_spent.to_string(),
                opt_f64(c.mean_rounds),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Derived constants recorded next to each trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedQuantities {
    pub sigma: f64,
    pub omega: f64,
    /// Defined for `n >= 2` and `gamma <= 1/2`.
    pub lambda: Option<f64>,
    pub lambda_tilde: Option<f64>,
}

/// JSON metadata written beside each trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSidecar<'a> {
    pub cell_id: String,
    pub experiment: &'a str,
    pub base_seed: u64,
    pub trial: u64,
    pub init: InitDistribution,
    pub c: f64,
    pub trace_stride: u64,
    #[serde(flatten)]
    pub meta: &'a RunMetadata,
    pub derived: DerivedQuantities,
    pub round_cap: u64,
    pub status: crate::TrialStatus,
    pub rounds_to_eps: Option<u64>,
    pub bits_to_eps: Option<u64>,
    pub final_round: u64,
    pub final_psi: f64,
    pub fit: Option<RateFit>,
}

pub fn sidecar<'a>(
    output: &'a ExperimentOutput,
    cell: &CellResult,
    record: &TrialRecord,
    trace: &'a RunTrace,
) -> TraceSidecar<'a> {
    let meta = &trace.meta;
    TraceSidecar {
        cell_id: cell.spec.id(),
        experiment: output.config.kind.label(),
        base_seed: output.config.base_seed,
        trial: record.trial,
        init: output.config.init,
        c: output.config.c,
        trace_stride: output.config.trace_stride,
        meta,
        derived: DerivedQuantities {
            sigma: meta.sigma,
            omega: meta.omega,
            lambda: theory::rate_lambda(meta.n, meta.gamma).ok(),
            lambda_tilde: theory::rate_lambda_tilde(meta.n, meta.gamma).ok(),
        },
        round_cap: record.round_cap,
        status: record.status,
        rounds_to_eps: record.rounds_to_eps,
        bits_to_eps: record.bits_to_eps,
        final_round: record.final_round,
        final_psi: record.final_psi,
        fit: record.fit,
    }
}

fn create(path: &Path) -> Result<fs::File, HarnessError> {
    fs::File::create(path).map_err(io_err(path))
}

/// Writes `config.toml`, `summary.csv`, `tuning.csv` for tuned experiments,
/// and one trace CSV plus JSON sidecar per trial under `traces/`. Returns the
/// paths written.
pub fn write_experiment(dir: &Path, output: &ExperimentOutput) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();

    let path = dir.join("config.toml");
    fs::write(&path, output.config.to_toml()).map_err(io_err(&path))?;
    written.push(path);

    let path = dir.join("summary.csv");
    write_summary(create(&path)?, &output.summary())?;
    written.push(path);

    if !output.tuning.is_empty() {
        let path = dir.join("tuning.csv");
        write_tuning(create(&path)?, &output.tuning)?;
        written.push(path);
    }

    if output.config.write_traces {
        let traces = dir.join("traces");
        fs::create_dir_all(&traces).map_err(io_err(&traces))?;
        for cell in &output.cells {
            for record in &cell.trials {
                let Some(trace) = &record.trace else { continue };
                let stem = format!("{}_trial{}", cell.spec.file_stem(), record.trial);
                let csv_path = traces.join(format!("{stem}.csv"));
                write_trace(create(&csv_path)?, trace, output.config.trace_stride)?;
                written.push(csv_path);
                let json_path = traces.join(format!("{stem}.json"));
                let json = serde_json::to_string_pretty(&sidecar(output, cell, record, trace))?;
                fs::write(&json_path, json + "\n").map_err(io_err(&json_path))?;
                written.push(json_path);
            }
        }
    }
    Ok(written)
}

/// Serializes `value` as pretty JSON into `dir/name`.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value)? + "\n").map_err(io_err(&path))?;
    Ok(path)
}
