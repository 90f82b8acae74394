//! Undirected attributed graphs in compressed sparse row form.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected graph with a dense node-feature matrix and optional labels.
///
/// Adjacency is stored once per direction (CSR), neighbor lists sorted
/// ascending, no self-loops. The graph is immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    name: String,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    features: Vec<f32>,
    feature_dim: usize,
    labels: Option<Vec<u32>>,
    num_classes: usize,
    raw_edge_count: usize,
}

/// Headline counts for a dataset. `edges` counts undirected edges after
/// symmetrization and deduplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub nodes: usize,
    pub edges: usize,
    pub classes: usize,
    pub features: usize,
}

/// A broken [`Graph`] invariant, as reported by [`Graph::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    Symmetry {
        from: usize,
        to: usize,
    },
    SelfLoop {
        node: usize,
    },
    DuplicateEdge {
        from: usize,
        to: usize,
    },
    NeighborRange {
        node: usize,
        neighbor: usize,
    },
    LabelRange {
        node: usize,
        label: u32,
        num_classes: usize,
    },
    LabelCount {
        expected: usize,
        found: usize,
    },
    FeatureRows {
        expected: usize,
        found: usize,
    },
    NonFiniteFeature {
        node: usize,
    },
    Offsets,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Symmetry { from, to } => {
                write!(f, "edge ({from},{to}) has no reverse ({to},{from})")
            }
            Violation::SelfLoop { node } => write!(f, "self-loop on node {node}"),
            Violation::DuplicateEdge { from, to } => write!(f, "duplicate edge ({from},{to})"),
            Violation::NeighborRange { node, neighbor } => {
                write!(f, "node {node} lists out-of-range neighbor {neighbor}")
            }
            Violation::LabelRange {
                node,
                label,
                num_classes,
            } => write!(
                f,
                "node {node} has label {label}, outside [0, {num_classes})"
            ),
            Violation::LabelCount { expected, found } => {
                write!(f, "expected {expected} labels, found {found}")
            }
            Violation::FeatureRows { expected, found } => {
                write!(f, "expected {expected} feature rows, found {found}")
            }
            Violation::NonFiniteFeature { node } => {
                write!(f, "node {node} has a non-finite feature value")
            }
            Violation::Offsets => write!(f, "adjacency offsets are not monotone"),
        }
    }
}

/// Unchecked CSR parts. [`Graph::from_raw_parts`] accepts these verbatim so
/// that malformed graphs can be built and inspected with [`Graph::validate`].
#[derive(Debug, Clone, Default)]
pub struct RawGraph {
    pub name: String,
    pub offsets: Vec<usize>,
    pub neighbors: Vec<u32>,
    pub features: Vec<f32>,
    pub feature_dim: usize,
    pub labels: Option<Vec<u32>>,
    pub num_classes: usize,
}

impl Graph {
    /// Builds a graph from an edge list, which may be directed, contain
    /// duplicates or self-loops. Edges are symmetrized and deduplicated and
    /// self-loops dropped. `features` is row-major `num_nodes x feature_dim`.
    pub fn from_edges(
        num_nodes: usize,
        edges: &[(usize, usize)],
        features: Vec<f32>,
        feature_dim: usize,
        labels: Option<Vec<u32>>,
        num_classes: usize,
    ) -> Result<Self> {
        if num_nodes > u32::MAX as usize {
            return Err(Error::Parameter(format!(
                "{num_nodes} nodes exceeds u32 ids"
            )));
        }
        let mut degree = vec![0usize; num_nodes];
        for &(u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::Parameter(format!(
                    "edge ({u},{v}) references a node outside [0, {num_nodes})"
                )));
            }
            if u != v {
                degree[u] += 1;
                degree[v] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..num_nodes].to_vec();
        let mut neighbors = vec![0u32; offsets[num_nodes]];
        for &(u, v) in edges {
            if u != v {
                neighbors[cursor[u]] = v as u32;
                cursor[u] += 1;
                neighbors[cursor[v]] = u as u32;
                cursor[v] += 1;
            }
        }

        // Sort and dedup each row, then compact.
        let mut compact_offsets = Vec::with_capacity(num_nodes + 1);
        compact_offsets.push(0);
        let mut write = 0;
        for i in 0..num_nodes {
            let (start, end) = (offsets[i], offsets[i + 1]);
            neighbors[start..end].sort_unstable();
            let mut last = None;
            for read in start..end {
                let j = neighbors[read];
                if last != Some(j) {
                    neighbors[write] = j;
                    write += 1;
                    last = Some(j);
                }
            }
            compact_offsets.push(write);
        }
        neighbors.truncate(write);

        let graph = Graph {
            name: String::new(),
            offsets: compact_offsets,
            neighbors,
            features,
            feature_dim,
            labels,
            num_classes,
            raw_edge_count: edges.len(),
        };
        let violations = graph.validate();
        if violations.is_empty() {
            Ok(graph)
        } else {
            Err(Error::Validation(violations))
        }
    }

    /// Wraps CSR parts without normalizing or validating them.
    pub fn from_raw_parts(raw: RawGraph) -> Self {
        let raw_edge_count = raw.neighbors.len() / 2;
        Graph {
            name: raw.name,
            offsets: raw.offsets,
            neighbors: raw.neighbors,
            features: raw.features,
            feature_dim: raw.feature_dim,
            labels: raw.labels,
            num_classes: raw.num_classes,
            raw_edge_count,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Replaces the feature matrix, keeping topology and labels.
    pub fn with_features(mut self, features: Vec<f32>, feature_dim: usize) -> Result<Self> {
        if features.len() != self.num_nodes() * feature_dim {
            return Err(Error::Validation(vec![Violation::FeatureRows {
                expected: self.num_nodes(),
                found: features.len() / feature_dim.max(1),
            }]));
        }
        self.features = features;
        self.feature_dim = feature_dim;
        Ok(self)
    }

    pub(crate) fn with_raw_edge_count(mut self, raw: usize) -> Self {
        self.raw_edge_count = raw;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Number of edge records in the source data before symmetrization
    /// and deduplication.
    pub fn raw_edge_count(&self) -> usize {
        self.raw_edge_count
    }

    #[inline]
    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.neighbors[self.offsets[node]..self.offsets[node + 1]]
    }

    #[inline]
    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn adjacency(&self) -> &[u32] {
        &self.neighbors
    }

    /// Undirected edges as `(u, v)` with `u < v`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    #[inline]
    pub fn feature_row(&self, node: usize) -> &[f32] {
        &self.features[node * self.feature_dim..(node + 1) * self.feature_dim]
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn stats(&self) -> DatasetStats {
        DatasetStats {
            nodes: self.num_nodes(),
            edges: self.num_edges(),
            classes: self.num_classes,
            features: self.feature_dim,
        }
    }

    /// Checks every structural invariant. An empty list means the graph is
    /// well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.num_nodes();
        if self.offsets.first().copied().unwrap_or(0) != 0
            || self.offsets.windows(2).any(|w| w[0] > w[1])
            || self.offsets.last().copied().unwrap_or(0) != self.neighbors.len()
        {
            out.push(Violation::Offsets);
            return out;
        }
        for i in 0..n {
            let row = self.neighbors(i);
            for (pos, &j) in row.iter().enumerate() {
                let j = j as usize;
                if j >= n {
                    out.push(Violation::NeighborRange {
                        node: i,
                        neighbor: j,
                    });
                    continue;
                }
                if j == i {
                    out.push(Violation::SelfLoop { node: i });
                }
                if pos > 0 && row[pos - 1] as usize == j {
                    out.push(Violation::DuplicateEdge { from: i, to: j });
                }
                if !self.neighbors(j).contains(&(i as u32)) {
                    out.push(Violation::Symmetry { from: i, to: j });
                }
            }
        }
        let rows = self
            .features
            .len()
            .checked_div(self.feature_dim)
            .unwrap_or(0);
        if self.features.len() != n * self.feature_dim {
            out.push(Violation::FeatureRows {
                expected: n,
                found: rows,
            });
        } else if self.feature_dim > 0 {
            for (node, row) in self.features.chunks_exact(self.feature_dim).enumerate() {
                if row.iter().any(|x| !x.is_finite()) {
                    out.push(Violation::NonFiniteFeature { node });
                }
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != n {
                out.push(Violation::LabelCount {
                    expected: n,
                    found: labels.len(),
                });
            }
            for (node, &label) in labels.iter().enumerate() {
                if label as usize >= self.num_classes {
                    out.push(Violation::LabelRange {
                        node,
                        label,
                        num_classes: self.num_classes,
                    });
                }
            }
        }
        out
    }
}
