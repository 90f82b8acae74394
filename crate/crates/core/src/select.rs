//! Deterministic label-set selection over a leading forest.
//!
//! The objective charges `alpha * q(gamma_i)` for each typical node, with
//! `q(g) = 1 / ln(g)`, and `(1 - alpha) * rho_j / layer_j` for each
//! divergent node. It is minimized subject to a label budget `l` and a
//! lower bound of `k` typical nodes per group.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::golf::{build_forest, LeadingForest};
use crate::graph::Graph;

/// `gamma` is clamped into this interval before `q` is applied.
pub const GAMMA_CLAMP: (f64, f64) = (1e-12, 1.0 - 1e-12);

/// Upper bound on typical/divergent assignments the exhaustive search
/// will evaluate.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GroupMode {
    /// Trees of the forest stand in for classes.
    #[default]
    TreeProxy,
    /// Ground-truth classes define the groups.
    OracleLabels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Label budget `l`.
    pub budget: usize,
    /// Minimum typical nodes per group, `k`.
    pub min_per_group: usize,
    pub alpha: f64,
    pub sigma: f64,
    pub trees: usize,
    pub group_mode: GroupMode,
}

impl SelectionConfig {
    pub const DEFAULT_SIGMA: f64 = 1.0;
    pub const DEFAULT_TREES: usize = 8;
    pub const DEFAULT_K: usize = 1;
    pub const DEFAULT_ALPHA: f64 = 0.5;

    /// Default parameters for `graph`: one tree per known class (8 when the
    /// class count is unknown), `k = 1`, `alpha = 0.5`, `sigma = 1`.
    pub fn for_graph(graph: &Graph, budget: usize) -> Self {
        let trees = match graph.num_classes() {
            0 => Self::DEFAULT_TREES,
            c => c,
        }
        .min(graph.num_nodes().max(1));
        SelectionConfig {
            budget,
            min_per_group: Self::DEFAULT_K,
            alpha: Self::DEFAULT_ALPHA,
            sigma: Self::DEFAULT_SIGMA,
            trees,
            group_mode: GroupMode::TreeProxy,
        }
    }

    fn check_basic(&self, num_nodes: usize) -> Result<()> {
        if self.budget == 0 || self.budget > num_nodes {
            return Err(Error::Parameter(format!(
                "budget l={} must lie in [1, {num_nodes}]",
                self.budget
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Parameter(format!(
                "alpha={} must lie in [0, 1]",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Label budget for a label rate: `round(rate * num_nodes)`.
pub fn budget_from_rate(rate: f64, num_nodes: usize) -> Result<usize> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::Parameter(format!(
            "label rate {rate} outside (0, 1]"
        )));
    }
    Ok((rate * num_nodes as f64).round() as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    pub typical: Vec<usize>,
    pub divergent: Vec<usize>,
    pub objective: f64,
    pub config: SelectionConfig,
}

impl LabelSet {
    /// All selected nodes, typical first.
    pub fn nodes(&self) -> Vec<usize> {
        self.typical
            .iter()
            .chain(&self.divergent)
            .copied()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.typical.len() + self.divergent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[inline]
pub fn typical_cost(gamma: f64) -> f64 {
    1.0 / gamma.clamp(GAMMA_CLAMP.0, GAMMA_CLAMP.1).ln()
}

#[inline]
pub fn divergent_cost(rho: f64, layer: u32) -> f64 {
    rho / layer as f64
}

/// Objective value of a typical/divergent assignment. Sums run in ascending
/// node order so equal sets always produce bit-identical values.
pub fn evaluate_objective(
    forest: &LeadingForest,
    typical: &[usize],
    divergent: &[usize],
    alpha: f64,
) -> Result<f64> {
    let mut typ = typical.to_vec();
    let mut div = divergent.to_vec();
    typ.sort_unstable();
    div.sort_unstable();
    if let Some(node) = typ.iter().find(|n| div.binary_search(n).is_ok()) {
        return Err(Error::Contract(format!(
            "node {node} is both typical and divergent"
        )));
    }
    let t: f64 = typ.iter().map(|&i| typical_cost(forest.gamma[i])).sum();
    let d: f64 = div
        .iter()
        .map(|&j| divergent_cost(forest.rho[j], forest.layer[j]))
        .sum();
    Ok(alpha * t + (1.0 - alpha) * d)
}

/// Node groups carrying the per-group minimum.
///
/// In tree-proxy mode these are the `config.trees` trees whose roots have
/// the highest `gamma` (ties to the lower root index); any further natural
/// trees carry no minimum. In oracle mode they are the non-empty classes.
pub fn selection_groups(
    forest: &LeadingForest,
    config: &SelectionConfig,
    labels: Option<&[u32]>,
) -> Result<Vec<Vec<usize>>> {
    match config.group_mode {
        GroupMode::TreeProxy => {
            let mut ranked: Vec<usize> = (0..forest.num_trees()).collect();
            ranked.sort_by(|&a, &b| {
                let (ra, rb) = (forest.roots[a], forest.roots[b]);
                forest.gamma[rb]
                    .total_cmp(&forest.gamma[ra])
                    .then(ra.cmp(&rb))
            });
            ranked.truncate(config.trees);
            let mut slot = vec![usize::MAX; forest.num_trees()];
            for (g, &t) in ranked.iter().enumerate() {
                slot[t] = g;
            }
            let mut groups = vec![Vec::new(); ranked.len()];
            for (node, &t) in forest.tree_id.iter().enumerate() {
                if slot[t] != usize::MAX {
                    groups[slot[t]].push(node);
                }
            }
            Ok(groups)
        }
        GroupMode::OracleLabels => {
            let labels = labels.ok_or_else(|| {
                Error::Parameter("oracle-labels grouping requires node labels".into())
            })?;
            if labels.len() != forest.num_nodes() {
                return Err(Error::Contract(format!(
                    "{} labels for {} nodes",
                    labels.len(),
                    forest.num_nodes()
                )));
            }
            let classes = labels.iter().map(|&y| y as usize + 1).max().unwrap_or(0);
            let mut groups = vec![Vec::new(); classes];
            for (node, &y) in labels.iter().enumerate() {
                groups[y as usize].push(node);
            }
            groups.retain(|g| !g.is_empty());
            Ok(groups)
        }
    }
}

fn check_feasible(config: &SelectionConfig, groups: &[Vec<usize>]) -> Result<()> {
    let required = config.min_per_group * groups.len();
    if required > config.budget {
        return Err(Error::Infeasible {
            k: config.min_per_group,
            groups: groups.len(),
            required,
            budget: config.budget,
        });
    }
    if let Some(small) = groups.iter().find(|g| g.len() < config.min_per_group) {
        return Err(Error::Parameter(format!(
            "a group has {} nodes, fewer than k={}",
            small.len(),
            config.min_per_group
        )));
    }
    Ok(())
}

/// Greedy two-stream selection.
///
/// 1. Each group contributes its `k` highest-`gamma` nodes as typical.
/// 2. The remaining budget is filled by repeatedly taking whichever stream
///    head is cheaper: the typical stream ordered by `alpha * q(gamma)` or
///    the divergent stream ordered by `(1 - alpha) * rho / layer`. Ties go
///    to the typical stream, then the lower node index. A stream whose
///    weight is zero is not drawn from.
pub fn select_labels(
    forest: &LeadingForest,
    config: &SelectionConfig,
    labels: Option<&[u32]>,
) -> Result<LabelSet> {
    let n = forest.num_nodes();
    config.check_basic(n)?;
    let groups = selection_groups(forest, config, labels)?;
    check_feasible(config, &groups)?;

    let by_gamma_desc =
        |a: &usize, b: &usize| forest.gamma[*b].total_cmp(&forest.gamma[*a]).then(a.cmp(b));

    let mut taken = vec![false; n];
    let mut typical = Vec::with_capacity(config.budget);
    let mut divergent = Vec::new();
    for group in &groups {
        let mut members = group.clone();
        members.sort_by(by_gamma_desc);
        for &node in members.iter().take(config.min_per_group) {
            taken[node] = true;
            typical.push(node);
        }
    }

    let alpha = config.alpha;
    let rest: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
    let typ_key = |i: usize| alpha * typical_cost(forest.gamma[i]);
    let div_key = |i: usize| (1.0 - alpha) * divergent_cost(forest.rho[i], forest.layer[i]);

    let mut typ_stream = if alpha > 0.0 {
        rest.clone()
    } else {
        Vec::new()
    };
    typ_stream.sort_by(|&a, &b| typ_key(a).total_cmp(&typ_key(b)).then(a.cmp(&b)));
    let mut div_stream = if alpha < 1.0 { rest } else { Vec::new() };
    div_stream.sort_by(|&a, &b| div_key(a).total_cmp(&div_key(b)).then(a.cmp(&b)));

    let (mut ti, mut di) = (0, 0);
    while typical.len() + divergent.len() < config.budget {
        while ti < typ_stream.len() && taken[typ_stream[ti]] {
            ti += 1;
        }
        while di < div_stream.len() && taken[div_stream[di]] {
            di += 1;
        }
        let take_typical = match (typ_stream.get(ti), div_stream.get(di)) {
            (Some(&t), Some(&d)) => typ_key(t) <= div_key(d),
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => {
                return Err(Error::Contract(
                    "candidate streams exhausted before budget".into(),
                ))
            }
        };
        if take_typical {
            let t = typ_stream[ti];
            taken[t] = true;
            typical.push(t);
        } else {
            let d = div_stream[di];
            taken[d] = true;
            divergent.push(d);
        }
    }

    let objective = evaluate_objective(forest, &typical, &divergent, alpha)?;
    Ok(LabelSet {
        typical,
        divergent,
        objective,
        config: config.clone(),
    })
}

/// Exact minimizer by enumeration of every size-`l` subset and every
/// typical/divergent split of it. Candidates are visited in lexicographic
/// order and only a strictly better objective replaces the incumbent.
///
/// The feasible region matches [`select_labels`]: every group needs `k`
/// typical members, and a zero-weight term admits no optional members
/// (with `alpha = 0` typical nodes are exactly the group minimums; with
/// `alpha = 1` the divergent set is empty).
pub fn brute_force_select(
    forest: &LeadingForest,
    config: &SelectionConfig,
    labels: Option<&[u32]>,
) -> Result<LabelSet> {
    let n = forest.num_nodes();
    config.check_basic(n)?;
    let l = config.budget;
    let assignments = binomial(n, l) * 2f64.powi(l as i32);
    if assignments > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeGuard {
            assignments,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let groups = selection_groups(forest, config, labels)?;
    check_feasible(config, &groups)?;
    let mut group_of = vec![usize::MAX; n];
    for (g, members) in groups.iter().enumerate() {
        for &node in members {
            group_of[node] = g;
        }
    }

    let alpha = config.alpha;
    let k = config.min_per_group;
    let typ_cost: Vec<f64> = forest.gamma.iter().map(|&g| typical_cost(g)).collect();
    let div_cost: Vec<f64> = (0..n)
        .map(|j| divergent_cost(forest.rho[j], forest.layer[j]))
        .collect();

    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    let mut subset: Vec<usize> = (0..l).collect();
    let mut per_group = vec![0usize; groups.len()];
    loop {
        for mask in 0u64..(1u64 << l) {
            per_group.iter_mut().for_each(|c| *c = 0);
            let mut optional_typical = false;
            let mut any_divergent = false;
            for (b, &node) in subset.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    match group_of[node] {
                        usize::MAX => optional_typical = true,
                        g => per_group[g] += 1,
                    }
                } else {
                    any_divergent = true;
                }
            }
            if per_group.iter().any(|&c| c < k) {
                continue;
            }
            if alpha == 0.0 && (optional_typical || per_group.iter().any(|&c| c != k)) {
                continue;
            }
            if alpha == 1.0 && any_divergent {
                continue;
            }
            let (mut t, mut d) = (0.0, 0.0);
            for (b, &node) in subset.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    t += typ_cost[node];
                } else {
                    d += div_cost[node];
                }
            }
            let objective = alpha * t + (1.0 - alpha) * d;
            if best.as_ref().is_none_or(|(o, _, _)| objective < *o) {
                let mut typ = Vec::new();
                let mut div = Vec::new();
                for (b, &node) in subset.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        typ.push(node);
                    } else {
                        div.push(node);
                    }
                }
                best = Some((objective, typ, div));
            }
        }
        if !next_combination(&mut subset, n) {
            break;
        }
    }

    let (_, typical, divergent) = best.ok_or_else(|| {
        Error::Contract("no feasible assignment found by exhaustive search".into())
    })?;
    let objective = evaluate_objective(forest, &typical, &divergent, alpha)?;
    Ok(LabelSet {
        typical,
        divergent,
        objective,
        config: config.clone(),
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Advances `c` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i) else {
        return false;
    };
    c[i] += 1;
    for j in i + 1..k {
        c[j] = c[j - 1] + 1;
    }
    true
}

/// Builds the forest and selects labels for `graph`. No randomness is
/// involved: identical inputs give identical label sets.
pub fn dns(graph: &Graph, config: &SelectionConfig) -> Result<LabelSet> {
    dns_with_forest(graph, config).map(|(labels, _)| labels)
}

pub fn dns_with_forest(
    graph: &Graph,
    config: &SelectionConfig,
) -> Result<(LabelSet, LeadingForest)> {
    config.check_basic(graph.num_nodes())?;
    let forest = build_forest(graph, config.sigma, config.trees)?;
    let labels = select_labels(&forest, config, graph.labels())?;
    Ok((labels, forest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::karate_club;

    /// Hand-built forest: two trees {0,1,2} (root 0) and {3,4} (root 3).
    fn toy_forest() -> LeadingForest {
        LeadingForest {
            parent: vec![None, Some(0), Some(1), None, Some(3)],
            rho: vec![0.9, 0.6, 0.3, 0.8, 0.4],
            delta: vec![0.6, 0.9, 0.6, 0.4, 0.8],
            gamma: vec![0.54, 0.54, 0.18, 0.32, 0.32],
            layer: vec![1, 2, 3, 1, 2],
            tree_id: vec![0, 0, 0, 1, 1],
            roots: vec![0, 3],
            sigma: 1.0,
            requested_trees: 2,
            natural_roots: 2,
        }
    }

    fn config(budget: usize, k: usize, alpha: f64) -> SelectionConfig {
        SelectionConfig {
            budget,
            min_per_group: k,
            alpha,
            sigma: 1.0,
            trees: 2,
            group_mode: GroupMode::TreeProxy,
        }
    }

    #[test]
    fn empty_sets_have_zero_objective() {
        assert_eq!(
            evaluate_objective(&toy_forest(), &[], &[], 0.5).unwrap(),
            0.0
        );
    }

    #[test]
    fn alpha_one_ignores_divergent_term() {
        let f = toy_forest();
        let a = evaluate_objective(&f, &[0], &[], 1.0).unwrap();
        let b = evaluate_objective(&f, &[0], &[2, 4], 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn typical_node_at_inverse_e_costs_minus_alpha() {
        let mut f = toy_forest();
        f.gamma[2] = (-1.0f64).exp();
        let j = evaluate_objective(&f, &[2], &[], 0.3).unwrap();
        assert!((j + 0.3).abs() < 1e-12);
    }

    #[test]
    fn overlapping_sets_are_rejected() {
        assert!(matches!(
            evaluate_objective(&toy_forest(), &[1], &[1], 0.5),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn gamma_of_one_is_clamped() {
        assert!(typical_cost(1.0).is_finite());
        assert!(typical_cost(0.0).is_finite());
        assert!(typical_cost(1.0) < typical_cost(0.9));
    }

    #[test]
    fn full_budget_selects_everything() {
        let f = toy_forest();
        let s = select_labels(&f, &config(5, 1, 0.5), None).unwrap();
        let mut all = s.nodes();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn alpha_one_k_zero_is_top_gamma() {
        let f = toy_forest();
        let s = select_labels(&f, &config(3, 0, 1.0), None).unwrap();
        assert_eq!(s.typical, vec![0, 1, 3]);
        assert!(s.divergent.is_empty());
    }

    #[test]
    fn alpha_zero_fills_with_divergent() {
        let f = toy_forest();
        let s = select_labels(&f, &config(4, 1, 0.0), None).unwrap();
        assert_eq!(s.typical, vec![0, 3]);
        // rho/layer: node2 = 0.1, node4 = 0.2, node1 = 0.3.
        assert_eq!(s.divergent, vec![2, 4]);
    }

    #[test]
    fn infeasible_budget_is_reported() {
        let f = toy_forest();
        assert!(matches!(
            select_labels(&f, &config(1, 1, 0.5), None),
            Err(Error::Infeasible { required: 2, .. })
        ));
        assert!(matches!(
            select_labels(&f, &config(6, 1, 0.5), None),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn oracle_mode_needs_labels() {
        let mut c = config(2, 1, 0.5);
        c.group_mode = GroupMode::OracleLabels;
        assert!(select_labels(&toy_forest(), &c, None).is_err());
        let s = select_labels(&toy_forest(), &c, Some(&[0, 0, 1, 1, 1])).unwrap();
        // Top gamma of class 0 is node 0; of class 1 it is node 3.
        assert_eq!(s.typical, vec![0, 3]);
    }

    #[test]
    fn brute_force_single_label() {
        let f = toy_forest();
        let s = brute_force_select(&f, &config(1, 0, 1.0), None).unwrap();
        assert_eq!(s.typical, vec![0]);
        assert!(s.divergent.is_empty());
    }

    #[test]
    fn brute_force_never_beaten_by_greedy() {
        let f = toy_forest();
        for l in 2..=5 {
            for k in 0..=1 {
                for alpha in [0.0, 0.25, 0.5, 1.0] {
                    let c = config(l, k, alpha);
                    let g = select_labels(&f, &c, None).unwrap();
                    let b = brute_force_select(&f, &c, None).unwrap();
                    assert!(b.objective <= g.objective + 1e-12, "{c:?}");
                }
            }
        }
    }

    #[test]
    fn brute_force_size_guard() {
        let f = build_forest(&karate_club(), 1.0, 2).unwrap();
        assert!(matches!(
            brute_force_select(&f, &config(10, 0, 0.5), None),
            Err(Error::SizeGuard { .. })
        ));
    }

    #[test]
    fn rate_to_budget() {
        assert_eq!(budget_from_rate(0.04, 2708).unwrap(), 108);
        assert_eq!(budget_from_rate(0.005, 2708).unwrap(), 14);
        assert!(budget_from_rate(0.0, 10).is_err());
    }

    #[test]
    fn combinations_enumerate_in_order() {
        let mut c = vec![0, 1];
        let mut seen = vec![c.clone()];
        while next_combination(&mut c, 4) {
            seen.push(c.clone());
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen.last().unwrap(), &vec![2, 3]);
        assert_eq!(binomial(34, 4), 46376.0);
    }
}
