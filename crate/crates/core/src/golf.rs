//! Graph-based optimal leading forest.
//!
//! Nodes are ordered by local density computed from graph-aggregated
//! features; every node is led by its densest strictly-denser neighbor, and
//! the resulting leading structure is cut into a forest whose depth profile
//! separates cluster centers (shallow, high `gamma`) from cluster fringes
//! (deep, low density).
//!
//! Densities are compared as `(rho, -index)` pairs everywhere, so equal
//! densities never produce a parent cycle.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::propagation::Propagation;

/// Graph-aggregated node features `F = D̃^{-1/2} Ã D̃^{-1/2} X`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedFeatures(pub Array2<f64>);

impl AggregatedFeatures {
    pub fn num_nodes(&self) -> usize {
        self.0.nrows()
    }

    /// Squared Euclidean norm of every row, summed left to right.
    pub fn squared_norms(&self) -> Vec<f64> {
        self.0
            .rows()
            .into_iter()
            .map(|row| row.iter().map(|x| x * x).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub rho: Vec<f64>,
    pub sigma: f64,
}

impl DensityProfile {
    /// True when `a` strictly leads `b`: higher density, or equal density
    /// and lower index.
    #[inline]
    pub fn leads(&self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.rho[a], self.rho[b]);
        ra > rb || (ra == rb && a < b)
    }
}

/// Parent of every node in the leading structure; `None` marks a root.
pub type ParentArray = Vec<Option<usize>>;

/// The cut leading forest with all per-node quantities needed for
/// label selection. Serializes to the JSON export format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadingForest {
    pub parent: ParentArray,
    pub rho: Vec<f64>,
    pub delta: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Depth within the tree; roots are at layer 1.
    pub layer: Vec<u32>,
    pub tree_id: Vec<usize>,
    /// Root of every tree, ascending by node index; `tree_id` indexes this.
    pub roots: Vec<usize>,
    pub sigma: f64,
    pub requested_trees: usize,
    /// Local density maxima before any cutting.
    pub natural_roots: usize,
}

impl LeadingForest {
    pub fn num_nodes(&self) -> usize {
        self.parent.len()
    }

    pub fn num_trees(&self) -> usize {
        self.roots.len()
    }

    pub fn is_root(&self, node: usize) -> bool {
        self.parent[node].is_none()
    }

    pub fn max_layer(&self) -> u32 {
        self.layer.iter().copied().max().unwrap_or(0)
    }
}

pub fn compute_aggregated_features(graph: &Graph) -> AggregatedFeatures {
    AggregatedFeatures(Propagation::new(graph).apply_features(graph))
}

/// `rho_i = exp(-||F_i||² / sigma²)`.
pub fn compute_density(features: &AggregatedFeatures, sigma: f64) -> Result<DensityProfile> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Parameter(format!(
            "bandwidth sigma must be positive and finite, got {sigma}"
        )));
    }
    let s2 = sigma * sigma;
    let rho = features
        .squared_norms()
        .into_iter()
        .map(|sq| (-sq / s2).exp())
        .collect();
    Ok(DensityProfile { rho, sigma })
}

/// Leads every node to the densest neighbor that strictly leads it.
pub fn assign_leading_nodes(graph: &Graph, density: &DensityProfile) -> ParentArray {
    (0..graph.num_nodes())
        .map(|i| {
            graph
                .neighbors(i)
                .iter()
                .map(|&j| j as usize)
                .filter(|&j| density.leads(j, i))
                .reduce(|best, j| if density.leads(j, best) { j } else { best })
        })
        .collect()
}

/// `delta_i = rho[parent_i]`; roots take their sparsest neighbor's density,
/// isolated roots their own.
pub fn compute_delta(
    graph: &Graph,
    density: &DensityProfile,
    parent: &[Option<usize>],
) -> Vec<f64> {
    let rho = &density.rho;
    parent
        .iter()
        .enumerate()
        .map(|(i, p)| match p {
            Some(p) => rho[*p],
            None => graph
                .neighbors(i)
                .iter()
                .map(|&j| rho[j as usize])
                .reduce(f64::min)
                .unwrap_or(rho[i]),
        })
        .collect()
}

pub fn compute_gamma(rho: &[f64], delta: &[f64]) -> Result<Vec<f64>> {
    if rho.len() != delta.len() {
        return Err(Error::Contract(format!(
            "rho has {} entries but delta has {}",
            rho.len(),
            delta.len()
        )));
    }
    Ok(rho.iter().zip(delta).map(|(r, d)| r * d).collect())
}

/// Cuts the leading structure into at least `trees` trees (when the
/// structure has fewer natural roots) and computes depths and tree ids.
///
/// Natural roots are never merged: if there are already `trees` or more,
/// the forest keeps all of them.
pub fn cut_forest(
    graph: &Graph,
    density: &DensityProfile,
    parent: &[Option<usize>],
    delta: &[f64],
    gamma: &[f64],
    trees: usize,
) -> Result<LeadingForest> {
    let n = graph.num_nodes();
    if trees == 0 || trees > n {
        return Err(Error::Parameter(format!(
            "tree count must lie in [1, {n}], got {trees}"
        )));
    }
    let mut parent = parent.to_vec();
    let natural_roots = parent.iter().filter(|p| p.is_none()).count();
    if natural_roots < trees {
        let mut candidates: Vec<usize> = (0..n).filter(|&i| parent[i].is_some()).collect();
        candidates.sort_by(|&a, &b| gamma[b].total_cmp(&gamma[a]).then(a.cmp(&b)));
        for &node in candidates.iter().take(trees - natural_roots) {
            parent[node] = None;
        }
    }

    let mut child_count = vec![0usize; n + 1];
    for p in parent.iter().flatten() {
        child_count[p + 1] += 1;
    }
    for i in 0..n {
        child_count[i + 1] += child_count[i];
    }
    let starts = child_count;
    let mut fill = starts.clone();
    let mut children = vec![0usize; starts[n]];
    for (i, p) in parent.iter().enumerate() {
        if let Some(p) = *p {
            children[fill[p]] = i;
            fill[p] += 1;
        }
    }

    let roots: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
    let mut layer = vec![0u32; n];
    let mut tree_id = vec![usize::MAX; n];
    let mut stack = Vec::new();
    for (t, &root) in roots.iter().enumerate() {
        layer[root] = 1;
        tree_id[root] = t;
        stack.push(root);
        while let Some(u) = stack.pop() {
            for &c in &children[starts[u]..starts[u + 1]] {
                layer[c] = layer[u] + 1;
                tree_id[c] = t;
                stack.push(c);
            }
        }
    }
    if let Some(orphan) = tree_id.iter().position(|&t| t == usize::MAX) {
        return Err(Error::Contract(format!(
            "node {orphan} does not reach a root; parent links contain a cycle"
        )));
    }

    Ok(LeadingForest {
        parent,
        rho: density.rho.clone(),
        delta: delta.to_vec(),
        gamma: gamma.to_vec(),
        layer,
        tree_id,
        roots,
        sigma: density.sigma,
        requested_trees: trees,
        natural_roots,
    })
}

/// Full forest construction from a graph.
pub fn build_forest(graph: &Graph, sigma: f64, trees: usize) -> Result<LeadingForest> {
    let features = compute_aggregated_features(graph);
    forest_from_features(graph, &features, sigma, trees)
}

/// Forest construction from precomputed aggregated features.
pub fn forest_from_features(
    graph: &Graph,
    features: &AggregatedFeatures,
    sigma: f64,
    trees: usize,
) -> Result<LeadingForest> {
    let density = compute_density(features, sigma)?;
    let parent = assign_leading_nodes(graph, &density);
    let delta = compute_delta(graph, &density, &parent);
    let gamma = compute_gamma(&density.rho, &delta)?;
    cut_forest(graph, &density, &parent, &delta, &gamma, trees)
}
