//! Built-in graphs: Zachary's karate club and seeded synthetic generators.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;

const KARATE_EDGES: [(usize, usize); 78] = [
    (0, 1),
    (0, 2),
    (0, 3),
    (0, 4),
    (0, 5),
    (0, 6),
    (0, 7),
    (0, 8),
    (0, 10),
    (0, 11),
    (0, 12),
    (0, 13),
    (0, 17),
    (0, 19),
    (0, 21),
    (0, 31),
    (1, 2),
    (1, 3),
    (1, 7),
    (1, 13),
    (1, 17),
    (1, 19),
    (1, 21),
    (1, 30),
    (2, 3),
    (2, 7),
    (2, 8),
    (2, 9),
    (2, 13),
    (2, 27),
    (2, 28),
    (2, 32),
    (3, 7),
    (3, 12),
    (3, 13),
    (4, 6),
    (4, 10),
    (5, 6),
    (5, 10),
    (5, 16),
    (6, 16),
    (8, 30),
    (8, 32),
    (8, 33),
    (9, 33),
    (13, 33),
    (14, 32),
    (14, 33),
    (15, 32),
    (15, 33),
    (18, 32),
    (18, 33),
    (19, 33),
    (20, 32),
    (20, 33),
    (22, 32),
    (22, 33),
    (23, 25),
    (23, 27),
    (23, 29),
    (23, 32),
    (23, 33),
    (24, 25),
    (24, 27),
    (24, 31),
    (25, 31),
    (26, 29),
    (26, 33),
    (27, 33),
    (28, 31),
    (28, 33),
    (29, 32),
    (29, 33),
    (30, 32),
    (30, 33),
    (31, 32),
    (31, 33),
    (32, 33),
];

/// Faction after the split: 0 = Mr. Hi, 1 = Officer.
const KARATE_CLUB: [u32; 34] = [
    0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1,
    1, 1,
];

/// Zachary's karate club: 34 nodes, 78 edges, two factions. Features are
/// one-hot node identities; use [`Graph::with_features`] to override.
pub fn karate_club() -> Graph {
    let n = KARATE_CLUB.len();
    let mut features = vec![0f32; n * n];
    for i in 0..n {
        features[i * n + i] = 1.0;
    }
    Graph::from_edges(n, &KARATE_EDGES, features, n, Some(KARATE_CLUB.to_vec()), 2)
        .expect("karate club edge list is well formed")
        .with_name("karate")
}

/// Parameters for a planted-partition graph with bag-of-words features,
/// shaped like a small citation network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationLikeConfig {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
    pub num_edges: usize,
    /// Probability that an edge stays inside its source node's class.
    pub homophily: f64,
    pub words_per_node: usize,
    /// Probability that a word is drawn from the node's class vocabulary.
    pub topic_strength: f64,
    /// Pareto tail index of the degree propensities.
    pub degree_tail: f64,
    pub seed: u64,
}

impl CitationLikeConfig {
    /// Node, edge, class and feature counts of Cora.
    pub fn cora_shaped() -> Self {
        Self {
            num_nodes: 2708,
            num_classes: 7,
            feature_dim: 1433,
            num_edges: 5278,
            homophily: 0.8,
            words_per_node: 18,
            topic_strength: 0.35,
            degree_tail: 2.5,
            seed: 0x5eed,
        }
    }
}

/// Generates a connected-ish planted-partition graph with power-law degree
/// propensities and sparse binary features. Deterministic in `config.seed`.
pub fn citation_like(config: &CitationLikeConfig) -> Graph {
    let n = config.num_nodes;
    let c = config.num_classes.max(1);
    let d = config.feature_dim.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Skewed class sizes, largest class first.
    let class_weights: Vec<f64> = (0..c).map(|k| 1.0 / (1.0 + 0.35 * k as f64)).collect();
    let class_dist = WeightedIndex::new(&class_weights).unwrap();
    let labels: Vec<u32> = (0..n).map(|_| class_dist.sample(&mut rng) as u32).collect();

    let propensity: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random_range(f64::EPSILON..1.0);
            u.powf(-1.0 / config.degree_tail)
        })
        .collect();
    let global = WeightedIndex::new(&propensity).unwrap();
    let members: Vec<Vec<usize>> = (0..c)
        .map(|k| (0..n).filter(|&i| labels[i] as usize == k).collect())
        .collect();
    let per_class: Vec<Option<WeightedIndex<f64>>> = members
        .iter()
        .map(|m| WeightedIndex::new(m.iter().map(|&i| propensity[i])).ok())
        .collect();

    let max_edges = n * n.saturating_sub(1) / 2;
    let target = config.num_edges.min(max_edges);
    let mut seen = HashSet::with_capacity(target * 2);
    let mut edges = Vec::with_capacity(target);
    while edges.len() < target {
        let u = global.sample(&mut rng);
        let class = labels[u] as usize;
        let v = match &per_class[class] {
            Some(dist) if rng.random_bool(config.homophily) => {
                members[class][dist.sample(&mut rng)]
            }
            _ => global.sample(&mut rng),
        };
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            edges.push(key);
        }
    }

    // Each class owns a contiguous vocabulary slice; the rest is shared.
    let vocab = (d / c).max(1);
    let mut features = vec![0f32; n * d];
    for i in 0..n {
        let class = labels[i] as usize;
        let lo = (class * vocab).min(d - 1);
        let hi = (lo + vocab).min(d);
        for _ in 0..config.words_per_node {
            let word = if rng.random_bool(config.topic_strength) {
                rng.random_range(lo..hi)
            } else {
                rng.random_range(0..d)
            };
            features[i * d + word] = 1.0;
        }
    }

    Graph::from_edges(n, &edges, features, d, Some(labels), c)
        .expect("generator emits in-range edges")
        .with_name("citation-like")
}

/// Uniform random graph with `num_edges` distinct edges and features drawn
/// uniformly from `[-1, 1)`, for scaling experiments and property tests.
pub fn random_graph(num_nodes: usize, num_edges: usize, feature_dim: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_edges = num_nodes * num_nodes.saturating_sub(1) / 2;
    let target = num_edges.min(max_edges);
    let mut seen = HashSet::with_capacity(target * 2);
    let mut edges = Vec::with_capacity(target);
    while edges.len() < target {
        let u = rng.random_range(0..num_nodes);
        let v = rng.random_range(0..num_nodes);
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            edges.push(key);
        }
    }
    let features = (0..num_nodes * feature_dim)
        .map(|_| rng.random_range(-1.0f32..1.0))
        .collect();
    Graph::from_edges(num_nodes, &edges, features, feature_dim, None, 0)
        .expect("generator emits in-range edges")
        .with_name("random")
}
