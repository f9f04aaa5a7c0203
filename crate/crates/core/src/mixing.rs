//! Mixing matrices: Metropolis–Hastings weights, lazy combinations, spectra,
//! and the augmented momentum matrix used to analyze accelerated gossip.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::{Graph, GraphError};

/// Row sums must match 1 within this absolute tolerance.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;
/// Convergence threshold handed to the symmetric eigensolver.
pub const EIGEN_TOLERANCE: f64 = 1e-10;
pub const EIGEN_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixingError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("matrix is {rows}x{cols}, expected {expected}x{expected}")]
    Shape {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("mixing invariant violated: {0}")]
    Invariant(String),
    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("symmetric eigensolver did not converge within {max_iterations} iterations")]
    EigenNonConvergence { max_iterations: usize },
    #[error("vector has length {actual}, expected {expected}")]
    Dimension { expected: usize, actual: usize },
}

/// Symmetric doubly stochastic matrix with positive diagonal, supported on
/// the edges of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    entries: DMatrix<f64>,
}

impl MixingMatrix {
    /// `W_ij = 1 / max(|N_i'|, |N_j'|)` on edges, diagonal takes the remainder.
    pub fn metropolis_hastings(graph: &Graph) -> Result<Self, MixingError> {
        graph.ensure_connected()?;
        let n = graph.n();
        // |N_i'| = degree + 1
        let closed_degree: Vec<usize> = (0..n)
            .map(|i| graph.degree(i).map(|d| d + 1))
            .collect::<Result<_, _>>()?;
        let mut entries = DMatrix::zeros(n, n);
        for (i, j) in graph.edges() {
            let w = 1.0 / closed_degree[i].max(closed_degree[j]) as f64;
            entries[(i, j)] = w;
            entries[(j, i)] = w;
        }
        for i in 0..n {
            let off: f64 = graph.neighbors(i)?.iter().map(|&j| entries[(i, j)]).sum();
            entries[(i, i)] = 1.0 - off;
        }
        Ok(Self { entries })
    }

    /// Wraps a dense matrix after checking every mixing invariant against `graph`.
    pub fn from_dense(entries: DMatrix<f64>, graph: &Graph) -> Result<Self, MixingError> {
        check_invariants(&entries, graph)?;
        Ok(Self { entries })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: DMatrix::identity(n, n),
        }
    }

    /// `M = (1 - gamma) I + gamma W`.
    pub fn lazy(&self, gamma: f64) -> Result<Self, MixingError> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(MixingError::OutOfRange {
                name: "gamma",
                value: gamma,
                range: "(0, 1]",
            });
        }
        let n = self.n();
        let mut entries = self.entries.scale(gamma);
        for i in 0..n {
            entries[(i, i)] += 1.0 - gamma;
        }
        Ok(Self { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Off-diagonal nonzeros per row, as `(column, weight)` pairs.
    pub fn off_diagonal_rows(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.n();
        (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i && self.entries[(i, j)] != 0.0)
                    .map(|j| (j, self.entries[(i, j)]))
                    .collect()
            })
            .collect()
    }

    pub fn spectrum(&self) -> Result<Spectrum, MixingError> {
        Spectrum::of_symmetric(&self.entries)
    }

    /// `||W - I||_2`. For symmetric `W` this is `max_i |lambda_i(W) - 1|`.
    pub fn deviation_norm(&self) -> Result<f64, MixingError> {
        let spectrum = self.spectrum()?;
        Ok(spectrum
            .eigenvalues
            .iter()
            .map(|l| (l - 1.0).abs())
            .fold(0.0, f64::max))
    }

    /// CSV dump, `n` rows of `n` values, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.n();
        let mut out = String::new();
        for i in 0..n {
            for j in 0..n {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", format_sig17(self.entries[(i, j)]));
            }
            out.push('\n');
        }
        out
    }
}

/// Formats with 17 significant digits in scientific notation.
pub fn format_sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Checks symmetry, double stochasticity, positive diagonal, `[0, 1]`
/// entries and the graph's sparsity pattern.
pub fn check_invariants(entries: &DMatrix<f64>, graph: &Graph) -> Result<(), MixingError> {
    let n = graph.n();
    if entries.nrows() != n || entries.ncols() != n {
        return Err(MixingError::Shape {
            rows: entries.nrows(),
            cols: entries.ncols(),
            expected: n,
        });
    }
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            let w = entries[(i, j)];
            if !(0.0..=1.0).contains(&w) {
                return Err(MixingError::Invariant(format!(
                    "entry ({i},{j}) = {w} outside [0, 1]"
                )));
            }
            if w != entries[(j, i)] {
                return Err(MixingError::Invariant(format!(
                    "not symmetric at ({i},{j})"
                )));
            }
            if i != j && w != 0.0 && !graph.has_edge(i, j) {
                return Err(MixingError::Invariant(format!(
                    "nonzero weight {w} at ({i},{j}) without an edge"
                )));
            }
            row_sum += w;
        }
        if (row_sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(MixingError::Invariant(format!(
                "row {i} sums to {row_sum}"
            )));
        }
        if entries[(i, i)] <= 0.0 {
            return Err(MixingError::Invariant(format!(
                "diagonal entry {i} is not positive"
            )));
        }
    }
    Ok(())
}

/// Full real spectrum of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Sorted by descending magnitude, ties broken by descending value.
    pub eigenvalues: Vec<f64>,
    /// `1 - |lambda_2|`; 1 for a 1x1 matrix.
    pub spectral_gap: f64,
}

impl Spectrum {
    pub fn of_symmetric(matrix: &DMatrix<f64>) -> Result<Self, MixingError> {
        let eigen = matrix
            .clone()
            .try_symmetric_eigen(EIGEN_TOLERANCE, EIGEN_MAX_ITERATIONS)
            .ok_or(MixingError::EigenNonConvergence {
                max_iterations: EIGEN_MAX_ITERATIONS,
            })?;
        let mut eigenvalues: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(|a, b| b.abs().total_cmp(&a.abs()).then(b.total_cmp(a)));
        let second = eigenvalues.get(1).map_or(0.0, |l| l.abs());
        Ok(Self {
            spectral_gap: 1.0 - second,
            eigenvalues,
        })
    }

    /// Second largest eigenvalue by value (not magnitude).
    pub fn second_largest(&self) -> f64 {
        let mut sorted = self.eigenvalues.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        sorted.get(1).copied().unwrap_or(0.0)
    }
}

/// The `2n x 2n` matrix `[[(1 + s) A, -s A], [I, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedMatrix {
    entries: DMatrix<f64>,
    sigma: f64,
    n: usize,
}

impl AugmentedMatrix {
    pub fn build(a: &MixingMatrix, sigma: f64) -> Result<Self, MixingError> {
        if !(0.0..1.0).contains(&sigma) {
            return Err(MixingError::OutOfRange {
                name: "sigma",
                value: sigma,
                range: "[0, 1)",
            });
        }
        let n = a.n();
        let mut entries = DMatrix::zeros(2 * n, 2 * n);
        entries
            .view_mut((0, 0), (n, n))
            .copy_from(&a.entries.scale(1.0 + sigma));
        entries
            .view_mut((0, n), (n, n))
            .copy_from(&a.entries.scale(-sigma));
        entries
            .view_mut((n, 0), (n, n))
            .fill_with_identity();
        Ok(Self { entries, sigma, n })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Size of the underlying mixing matrix (half the augmented dimension).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Norms `||B^t v - v_bar||` for `t = 0..=t_max`, computed by repeated
    /// matrix-vector products. `v_bar` stacks the mean of the first block of
    /// `v` in both halves; it is zero when that block sums to zero, in which
    /// case the norms are plain `||B^t v||`.
    pub fn power_contraction(&self, v: &[f64], t_max: usize) -> Result<Vec<f64>, MixingError> {
        let dim = 2 * self.n;
        if v.len() != dim {
            return Err(MixingError::Dimension {
                expected: dim,
                actual: v.len(),
            });
        }
        if t_max == 0 {
            return Err(MixingError::OutOfRange {
                name: "t_max",
                value: 0.0,
                range: "[1, inf)",
            });
        }
        let mean = v[..self.n].iter().sum::<f64>() / self.n as f64;
        let target = DVector::from_element(dim, mean);
        let mut current = DVector::from_column_slice(v);
        let mut norms = Vec::with_capacity(t_max + 1);
        norms.push((&current - &target).norm());
        for _ in 0..t_max {
            current = &self.entries * current;
            norms.push((&current - &target).norm());
        }
        Ok(norms)
    }
}
