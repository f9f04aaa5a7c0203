//! Static undirected communication networks.
//!
//! Nodes are 0-indexed. Edges are stored as unordered pairs in canonical
//! `(min, max)` form, so duplicates collapse and the edge set is symmetric by
//! construction.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("{kind} graph needs at least {min} nodes, got {n}")]
    InvalidSize {
        kind: &'static str,
        min: usize,
        n: usize,
    },
    #[error("node index {index} out of range for a graph with {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("graph with {n} nodes is not connected ({components} components)")]
    Disconnected { n: usize, components: usize },
}

/// An undirected simple graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an edge iterator. Duplicate and reversed pairs
    /// collapse to a single edge.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(GraphError::InvalidSize {
                kind: "edge-list",
                min: 1,
                n,
            });
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            set.insert(canonical_edge(n, i, j)?);
        }
        Ok(Self::from_canonical(n, set))
    }

    fn from_canonical(n: usize, edges: BTreeSet<(usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &edges {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            n,
            edges,
            adjacency,
        }
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::InvalidSize {
                kind: "path",
                min: 2,
                n,
            });
        }
        Ok(Self::from_canonical(n, (0..n - 1).map(|i| (i, i + 1)).collect()))
    }

    /// Cycle on `n` nodes; every node has degree 2.
    pub fn ring(n: usize) -> Result<Self, GraphError> {
        if n < 3 {
            return Err(GraphError::InvalidSize {
                kind: "ring",
                min: 3,
                n,
            });
        }
        let mut edges: BTreeSet<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        edges.insert((0, n - 1));
        Ok(Self::from_canonical(n, edges))
    }

    pub fn complete(n: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::InvalidSize {
                kind: "complete",
                min: 2,
                n,
            });
        }
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Ok(Self::from_canonical(n, edges))
    }

    /// Random connected graph: a uniformly shuffled spanning tree plus each
    /// remaining pair independently with probability `extra_edge_prob`.
    pub fn random_connected(n: usize, extra_edge_prob: f64, seed: u64) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::InvalidSize {
                kind: "random",
                min: 2,
                n,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut edges = BTreeSet::new();
        for pos in 1..n {
            let parent = order[rng.random_range(0..pos)];
            let child = order[pos];
            edges.insert((parent.min(child), parent.max(child)));
        }
        let p = extra_edge_prob.clamp(0.0, 1.0);
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    edges.insert((i, j));
                }
            }
        }
        Ok(Self::from_canonical(n, edges))
    }

    /// Parses the edge-list text format: `#` comment lines, a first data line
    /// holding the node count, then one `i j` pair per line.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut n = None;
        let mut edges = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = trimmed.split_whitespace().collect();
            let parse_index = |tok: &str| {
                tok.parse::<usize>().map_err(|_| GraphError::Parse {
                    line,
                    message: format!("expected a non-negative integer, found {tok:?}"),
                })
            };
            match n {
                None => {
                    if tokens.len() != 1 {
                        return Err(GraphError::Parse {
                            line,
                            message: "first data line must hold only the node count".into(),
                        });
                    }
                    let count = parse_index(tokens[0])?;
                    if count == 0 {
                        return Err(GraphError::Parse {
                            line,
                            message: "node count must be positive".into(),
                        });
                    }
                    n = Some(count);
                }
                Some(count) => {
                    if tokens.len() != 2 {
                        return Err(GraphError::Parse {
                            line,
                            message: format!("expected \"i j\", found {} fields", tokens.len()),
                        });
                    }
                    let (i, j) = (parse_index(tokens[0])?, parse_index(tokens[1])?);
                    let edge = canonical_edge(count, i, j).map_err(|e| GraphError::Parse {
                        line,
                        message: e.to_string(),
                    })?;
                    edges.insert(edge);
                }
            }
        }
        let n = n.ok_or(GraphError::Parse {
            line: text.lines().count().max(1),
            message: "missing node count".into(),
        })?;
        Ok(Self::from_canonical(n, edges))
    }

    /// Serializes to the edge-list text format, one canonical edge per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for (i, j) in &self.edges {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical `(min, max)` form, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    /// Neighbors of `i`, excluding `i` itself, ascending.
    pub fn neighbors(&self, i: usize) -> Result<&[usize], GraphError> {
        self.adjacency
            .get(i)
            .map(Vec::as_slice)
            .ok_or(GraphError::IndexOutOfRange { index: i, n: self.n })
    }

    pub fn degree(&self, i: usize) -> Result<usize, GraphError> {
        self.neighbors(i).map(<[usize]>::len)
    }

    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut components = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// Gate used before building a mixing matrix.
    pub fn ensure_connected(&self) -> Result<(), GraphError> {
        match self.component_count() {
            1 => Ok(()),
            components => Err(GraphError::Disconnected {
                n: self.n,
                components,
            }),
        }
    }
}

fn canonical_edge(n: usize, i: usize, j: usize) -> Result<(usize, usize), GraphError> {
    for index in [i, j] {
        if index >= n {
            return Err(GraphError::IndexOutOfRange { index, n });
        }
    }
    if i == j {
        return Err(GraphError::SelfLoop(i));
    }
    Ok((i.min(j), i.max(j)))
}
