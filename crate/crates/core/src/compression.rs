//! Randomized compression operators `Q` with relative error
//! `E||Q(x) - x||^2 <= omega^2 ||x||^2`, plus per-message bit accounting.
//!
//! Bit accounting convention (per transmitted vector of dimension `d`):
//!
//! * identity: 32 bits per coordinate.
//! * `qsgd_k`: `k` bits per coordinate (`k - 1` level bits and a sign bit)
//!   plus one 32-bit norm.
//! * `rand_k` / `top_k`: `k` values at 32 bits plus `k` indices at
//!   `ceil(log2 d)` bits.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FLOAT_BITS: u64 = 32;
/// Largest supported `qsgd_k` bit width.
pub const QSGD_MAX_BITS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompressionError {
    #[error("unknown compressor {0:?} (expected identity, rand_<k>, top_<k> or qsgd_<k>)")]
    UnknownKind(String),
    #[error("invalid parameter k = {k} for {family} on dimension {dim}: {reason}")]
    InvalidK {
        family: &'static str,
        k: usize,
        dim: usize,
        reason: &'static str,
    },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("vector has length {actual}, compressor expects {expected}")]
    Dimension { expected: usize, actual: usize },
}

/// Which operator to build, independent of dimension and randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CompressorSpec {
    Identity,
    RandK(usize),
    TopK(usize),
    Qsgd(usize),
}

impl CompressorSpec {
    /// Config family name: `identity`, `rand_k`, `top_k` or `qsgd_k`.
    pub fn family(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::RandK(_) => "rand_k",
            Self::TopK(_) => "top_k",
            Self::Qsgd(_) => "qsgd_k",
        }
    }

    pub fn k(&self) -> Option<usize> {
        match *self {
            Self::Identity => None,
            Self::RandK(k) | Self::TopK(k) | Self::Qsgd(k) => Some(k),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Self::Identity)
    }

    /// Checks the parameter against dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<(), CompressionError> {
        if dim == 0 {
            return Err(CompressionError::ZeroDimension);
        }
        let invalid = |family, k, reason| CompressionError::InvalidK {
            family,
            k,
            dim,
            reason,
        };
        match *self {
            Self::Identity => Ok(()),
            Self::RandK(k) | Self::TopK(k) if k == 0 || k > dim => {
                Err(invalid(self.family(), k, "need 1 <= k <= d"))
            }
            Self::Qsgd(k) if !(2..=QSGD_MAX_BITS).contains(&k) => {
                Err(invalid("qsgd_k", k, "need 2 <= k <= 32"))
            }
            _ => Ok(()),
        }
    }

    /// The contract parameter `omega^2`.
    pub fn omega_squared(&self, dim: usize) -> Result<f64, CompressionError> {
        self.validate(dim)?;
        Ok(match *self {
            Self::Identity => 0.0,
            Self::RandK(k) | Self::TopK(k) => 1.0 - k as f64 / dim as f64,
            Self::Qsgd(k) => 1.0 - 1.0 / qsgd_tau(qsgd_levels(k), dim),
        })
    }

    pub fn omega(&self, dim: usize) -> Result<f64, CompressionError> {
        self.omega_squared(dim).map(f64::sqrt)
    }

    /// Bits per transmitted compressed vector.
    pub fn message_bits(&self, dim: usize) -> Result<u64, CompressionError> {
        self.validate(dim)?;
        let d = dim as u64;
        Ok(match *self {
            Self::Identity => d * FLOAT_BITS,
            Self::Qsgd(k) => d * k as u64 + FLOAT_BITS,
            Self::RandK(k) | Self::TopK(k) => k as u64 * (FLOAT_BITS + index_bits(dim)),
        })
    }
}

impl fmt::Display for CompressorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => f.write_str("identity"),
            Self::RandK(k) => write!(f, "rand_{k}"),
            Self::TopK(k) => write!(f, "top_{k}"),
            Self::Qsgd(k) => write!(f, "qsgd_{k}"),
        }
    }
}

impl FromStr for CompressorSpec {
    type Err = CompressionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "identity" {
            return Ok(Self::Identity);
        }
        let unknown = || CompressionError::UnknownKind(s.to_string());
        let (family, k) = s.rsplit_once('_').ok_or_else(unknown)?;
        let k: usize = k.parse().map_err(|_| unknown())?;
        match family {
            "rand" => Ok(Self::RandK(k)),
            "top" => Ok(Self::TopK(k)),
            "qsgd" => Ok(Self::Qsgd(k)),
            _ => Err(unknown()),
        }
    }
}

impl TryFrom<String> for CompressorSpec {
    type Error = CompressionError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<CompressorSpec> for String {
    fn from(value: CompressorSpec) -> Self {
        value.to_string()
    }
}

/// `u = 2^(k-1) - 1` quantization levels.
pub fn qsgd_levels(k: usize) -> u64 {
    (1u64 << (k - 1)) - 1
}

/// `tau = 1 + min(d / u^2, sqrt(d) / u)`.
pub fn qsgd_tau(levels: u64, dim: usize) -> f64 {
    let u = levels as f64;
    let d = dim as f64;
    1.0 + (d / (u * u)).min(d.sqrt() / u)
}

fn index_bits(dim: usize) -> u64 {
    // ceil(log2 d)
    u64::from(usize::BITS - dim.saturating_sub(1).leading_zeros())
}

/// A configured operator owning its random stream.
#[derive(Debug, Clone)]
pub struct Compressor {
    spec: CompressorSpec,
    dim: usize,
    rng: ChaCha8Rng,
    scratch: Vec<usize>,
}

impl Compressor {
    pub fn new(spec: CompressorSpec, dim: usize, seed: u64) -> Result<Self, CompressionError> {
        spec.validate(dim)?;
        Ok(Self {
            spec,
            dim,
            rng: ChaCha8Rng::seed_from_u64(seed),
            scratch: Vec::new(),
        })
    }

    pub fn spec(&self) -> CompressorSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> f64 {
        self.spec.omega(self.dim).expect("validated at construction")
    }

    pub fn message_bits(&self) -> u64 {
        self.spec.message_bits(self.dim).expect("validated at construction")
    }

    pub fn compress(&mut self, x: &[f64]) -> Result<Vec<f64>, CompressionError> {
        let mut out = vec![0.0; self.dim];
        self.compress_into(x, &mut out)?;
        Ok(out)
    }

    /// Writes `Q(x)` into `out`, drawing fresh randomness from the stream.
    pub fn compress_into(&mut self, x: &[f64], out: &mut [f64]) -> Result<(), CompressionError> {
        for len in [x.len(), out.len()] {
            if len != self.dim {
                return Err(CompressionError::Dimension {
                    expected: self.dim,
                    actual: len,
                });
            }
        }
        match self.spec {
            CompressorSpec::Identity => out.copy_from_slice(x),
            CompressorSpec::RandK(k) => {
                out.fill(0.0);
                for i in rand::seq::index::sample(&mut self.rng, self.dim, k) {
                    out[i] = x[i];
                }
            }
            CompressorSpec::TopK(k) => {
                out.fill(0.0);
                let order = &mut self.scratch;
                order.clear();
                order.extend(0..self.dim);
                if k < self.dim {
                    order.select_nth_unstable_by(k - 1, |&a, &b| {
                        x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b))
                    });
                }
                for &i in &order[..k] {
                    out[i] = x[i];
                }
            }
            CompressorSpec::Qsgd(k) => {
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    out.fill(0.0);
                    return Ok(());
                }
                let levels = qsgd_levels(k);
                let u = levels as f64;
                let scale = norm / (u * qsgd_tau(levels, self.dim));
                for (o, &v) in out.iter_mut().zip(x) {
                    let zeta: f64 = self.rng.random();
                    let level = (u * v.abs() / norm + zeta).floor();
                    *o = sign(v) * scale * level;
                }
            }
        }
        Ok(())
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
