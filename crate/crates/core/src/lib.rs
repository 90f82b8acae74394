//! Deterministic selection of labeled nodes for semi-supervised node
//! classification.
//!
//! A graph's node features are aggregated over closed neighborhoods, turned
//! into local densities, and organized into a leading forest ([`golf`]).
//! Label sets are chosen from the forest by minimizing a typical/divergent
//! objective ([`select`]). The [`gcn`] module trains a small GCN to compare
//! random label splits against the selected ones.

pub mod datasets;
pub mod error;
pub mod gcn;
pub mod golf;
pub mod graph;
pub mod io;
pub mod propagation;
pub mod select;

pub use error::{Error, Result};
pub use golf::{
    assign_leading_nodes, build_forest, compute_aggregated_features, compute_delta,
    compute_density, compute_gamma, cut_forest, forest_from_features, AggregatedFeatures,
    DensityProfile, LeadingForest, ParentArray,
};
pub use graph::{DatasetStats, Graph, RawGraph, Violation};
pub use select::{
    brute_force_select, budget_from_rate, dns, dns_with_forest, evaluate_objective, select_labels,
    GroupMode, LabelSet, SelectionConfig,
};
