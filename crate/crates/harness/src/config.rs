//! Experiment configuration: defaults, TOML loading, and validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use compressed_gossip::consensus::ConsensusError;
use compressed_gossip::{AlgorithmConfig, CompressorSpec, Graph, InitDistribution, Variant};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[default]
    SingleRun,
    SweepN,
    SweepGamma,
    CompareVariants,
    Tune,
    VerifyLemma,
    VerifyGap,
    Bounds,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::SingleRun => "single-run",
            Self::SweepN => "sweep-n",
            Self::SweepGamma => "sweep-gamma",
            Self::CompareVariants => "compare-variants",
            Self::Tune => "tune",
            Self::VerifyLemma => "verify-lemma",
            Self::VerifyGap => "verify-gap",
            Self::Bounds => "bounds",
        }
    }

    /// Kinds that simulate consensus runs.
    pub fn is_simulation(self) -> bool {
        matches!(
            self,
            Self::SingleRun | Self::SweepN | Self::SweepGamma | Self::CompareVariants | Self::Tune
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Network topology; `file:<path>` reads an edge list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Topology {
    #[default]
    Path,
    Ring,
    Complete,
    File(PathBuf),
}

impl Topology {
    /// Graph on `n` nodes. File topologies ignore `n` and return the stored graph.
    pub fn build(&self, n: usize) -> Result<Graph, HarnessError> {
        let graph = match self {
            Self::Path => Graph::path(n)?,
            Self::Ring => Graph::ring(n)?,
            Self::Complete => Graph::complete(n)?,
            Self::File(path) => load_edge_list(path)?,
        };
        graph.ensure_connected()?;
        Ok(graph)
    }

    /// Short name used in cell ids and file names.
    pub fn label(&self) -> String {
        match self {
            Self::File(path) => format!(
                "file:{}",
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            ),
            other => other.to_string(),
        }
    }
}

fn load_edge_list(path: &Path) -> Result<Graph, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(Graph::parse_edge_list(&text)?)
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Path => f.write_str("path"),
            Self::Ring => f.write_str("ring"),
            Self::Complete => f.write_str("complete"),
            Self::File(path) => write!(f, "file:{}", path.display()),
        }
    }
}

impl FromStr for Topology {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "path" => Ok(Self::Path),
            "ring" => Ok(Self::Ring),
            "complete" => Ok(Self::Complete),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(Self::File(PathBuf::from(p))),
                _ => Err(HarnessError::Config(format!(
                    "unknown topology {s:?}; expected path, ring, complete or file:<path>"
                ))),
            },
        }
    }
}

impl TryFrom<String> for Topology {
    type Error = HarnessError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Topology> for String {
    fn from(t: Topology) -> String {
        t.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub topology: Topology,
    /// Network sizes. Ignored by file topologies, which fix `n`.
    pub n: Vec<usize>,
    pub d: usize,
    pub variants: Vec<Variant>,
    /// Step sizes. Sweeps and comparisons with more than one value tune over them.
    pub gamma: Vec<f64>,
    /// Compressor of CG and SCG; exact variants always use identity.
    pub compressor: CompressorSpec,
    pub epsilon: f64,
    pub max_rounds: u64,
    /// Seeds per cell.
    pub trials: u64,
    pub base_seed: u64,
    pub init: InitDistribution,
    /// Momentum override for SEG and SCG.
    pub sigma: Option<f64>,
    /// Constant in the omega feasibility bound.
    pub c: f64,
    /// Every `trace_stride`-th round is written to trace files; the last round always is.
    pub trace_stride: u64,
    pub write_traces: bool,
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::SingleRun,
            topology: Topology::Path,
            n: vec![20],
            d: 10,
            variants: vec![Variant::ScalableCompressedGossip],
            gamma: vec![0.5],
            compressor: CompressorSpec::Qsgd(5),
            epsilon: 1e-4,
            max_rounds: 1_000_000,
            trials: 1,
            base_seed: 0,
            init: InitDistribution::Uniform,
            sigma: None,
            c: 1.0,
            trace_stride: 1,
            write_traces: true,
            workers: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Loads a config file; the flag tells whether the file sets `kind`.
    pub fn load(path: &Path) -> Result<(Self, bool), HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        Ok((Self::from_toml(&text)?, table.contains_key("kind")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Compressor actually used by `variant`.
    pub fn compressor_for(&self, variant: Variant) -> CompressorSpec {
        if variant.is_compressed() {
            self.compressor
        } else {
            CompressorSpec::Identity
        }
    }

    pub fn algorithm(&self, variant: Variant, gamma: f64) -> AlgorithmConfig {
        let cfg = AlgorithmConfig::new(variant, gamma, self.compressor_for(variant));
        match (variant.is_scalable(), self.sigma) {
            (true, Some(sigma)) => cfg.with_sigma(sigma),
            _ => cfg,
        }
    }

    /// Network sizes to simulate, after resolving file topologies.
    pub fn sizes(&self) -> Result<Vec<usize>, HarnessError> {
        match self.topology {
            Topology::File(_) => Ok(vec![self.topology.build(0)?.n()]),
            _ => Ok(self.n.clone()),
        }
    }

    /// Checks every field against the preconditions of the code that will
    /// consume it, so that no run starts with an invalid setting.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.n.is_empty() && !matches!(self.topology, Topology::File(_)) {
            return bad("n must list at least one size".into());
        }
        let sizes = self.sizes()?;
        for &n in &sizes {
            self.topology.build(n)?;
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("c must be positive, got {}", self.c));
        }
        if self.gamma.is_empty() {
            return bad("gamma must list at least one step size".into());
        }
        if !self.kind.is_simulation() {
            return Ok(());
        }
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if self.variants.is_empty() {
            return bad("variants must list at least one variant".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_rounds == 0 {
            return bad("max_rounds must be at least 1".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.trace_stride == 0 {
            return bad("trace_stride must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.kind == ExperimentKind::SingleRun
            && (sizes.len() != 1 || self.variants.len() != 1 || self.gamma.len() != 1)
        {
            return bad("single-run takes exactly one n, one variant and one gamma".into());
        }
        if self.sigma.is_some() && !self.variants.iter().any(|v| v.is_scalable()) {
            return bad("sigma only applies to SEG and SCG".into());
        }
        for &variant in &self.variants {
            for &gamma in &self.gamma {
                self.algorithm(variant, gamma)
                    .validate(self.d)
                    .map_err(|e: ConsensusError| HarnessError::Config(e.to_string()))?;
            }
        }
        Ok(())
    }

    /// Whether simulation cells tune over the gamma grid instead of running every value.
    pub fn tunes_gamma(&self) -> bool {
        match self.kind {
            ExperimentKind::Tune => true,
            ExperimentKind::SweepN | ExperimentKind::CompareVariants => self.gamma.len() > 1,
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topology_parsing() {
        assert_eq!("ring".parse::<Topology>().unwrap(), Topology::Ring);
        assert_eq!(
            "file:g.txt".parse::<Topology>().unwrap(),
            Topology::File("g.txt".into())
        );
        assert!("file:".parse::<Topology>().is_err());
        assert!("star".parse::<Topology>().is_err());
        assert_eq!(Topology::File("/a/b/mesh.txt".into()).label(), "file:mesh");
    }

    #[test]
    fn toml_defaults_and_unknown_keys() {
        let cfg = ExperimentConfig::from_toml("kind = \"sweep-n\"\nn = [10, 20]\n").unwrap();
        assert_eq!(cfg.kind, ExperimentKind::SweepN);
        assert_eq!(cfg.n, vec![10, 20]);
        assert_eq!(cfg.d, ExperimentConfig::default().d);
        assert!(ExperimentConfig::from_toml("nn = 3").is_err());
        let round_trip = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(round_trip, cfg);
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let ok = ExperimentConfig::default();
        assert!(ok.validate().is_ok());
        let cases: Vec<Box<dyn Fn(&mut ExperimentConfig)>> = vec![
            Box::new(|c| c.d = 0),
            Box::new(|c| c.epsilon = 0.0),
            Box::new(|c| c.trials = 0),
            Box::new(|c| c.n = vec![1]),
            Box::new(|c| c.gamma = vec![0.75]),
            Box::new(|c| c.gamma.clear()),
            Box::new(|c| c.compressor = CompressorSpec::TopK(11)),
            Box::new(|c| c.n = vec![10, 20]),
            Box::new(|c| c.sigma = Some(1.0)),
            Box::new(|c| c.workers = 0),
            Box::new(|c| c.topology = Topology::Ring),
        ];
        for (i, mutate) in cases.iter().enumerate() {
            let mut cfg = ok.clone();
            if i == cases.len() - 1 {
                cfg.n = vec![2];
            }
            mutate(&mut cfg);
            assert!(cfg.validate().is_err(), "case {i} accepted");
        }
    }

    #[test]
    fn exact_variants_ignore_compressor() {
        let mut cfg = ExperimentConfig::default();
        cfg.variants = vec![Variant::ExactGossip, Variant::ScalableExactGossip];
        cfg.kind = ExperimentKind::CompareVariants;
        cfg.gamma = vec![0.5];
        assert!(cfg.validate().is_ok());
        assert_eq!(
            cfg.compressor_for(Variant::ExactGossip),
            CompressorSpec::Identity
        );
    }
}
