//! Test-only reference implementations, written against dense matrices and
//! kept independent of the library's sparse code paths.

#![allow(dead_code, clippy::needless_range_loop)]

use golf_dns::Graph;

/// Leading forest quantities recomputed densely.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseForest {
    pub rho: Vec<f64>,
    pub parent: Vec<Option<usize>>,
    pub delta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub layer: Vec<u32>,
    pub tree_id: Vec<usize>,
    pub roots: Vec<usize>,
}

pub fn dense_adjacency(graph: &Graph) -> Vec<Vec<bool>> {
    let n = graph.num_nodes();
    let mut a = vec![vec![false; n]; n];
    for (u, v) in graph.edges() {
        a[u][v] = true;
        a[v][u] = true;
    }
    a
}

/// `F = D̃^{-1/2} (A + I) D̃^{-1/2} X` by explicit dense products.
///
/// Weights are `1 / sqrt(d_i d_j)` and every entry sums its terms in
/// ascending order: the rounding convention under which densities that are
/// equal in real arithmetic also compare equal.
pub fn dense_aggregate(graph: &Graph) -> Vec<Vec<f64>> {
    let n = graph.num_nodes();
    let d = graph.feature_dim();
    let a = dense_adjacency(graph);
    let mut a_tilde = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a_tilde[i][j] = if i == j || a[i][j] { 1.0 } else { 0.0 };
        }
    }
    let deg: Vec<f64> = a_tilde.iter().map(|row| row.iter().sum()).collect();
    let mut f = vec![vec![0.0; d]; n];
    for i in 0..n {
        for k in 0..d {
            let mut terms = Vec::new();
            for j in 0..n {
                let x = graph.feature_row(j)[k] as f64;
                if a_tilde[i][j] != 0.0 && x != 0.0 {
                    terms.push(a_tilde[i][j] / (deg[i] * deg[j]).sqrt() * x);
                }
            }
            terms.sort_by(f64::total_cmp);
            f[i][k] = terms.iter().sum();
        }
    }
    f
}

fn higher(rho: &[f64], a: usize, b: usize) -> bool {
    rho[a] > rho[b] || (rho[a] == rho[b] && a < b)
}

pub fn dense_forest(graph: &Graph, sigma: f64, trees: usize) -> DenseForest {
    let n = graph.num_nodes();
    let a = dense_adjacency(graph);
    let f = dense_aggregate(graph);
    let rho: Vec<f64> = f
        .iter()
        .map(|row| (-row.iter().map(|x| x * x).sum::<f64>() / (sigma * sigma)).exp())
        .collect();

    let mut parent = vec![None; n];
    for i in 0..n {
        let mut best: Option<usize> = None;
        for j in 0..n {
            if a[i][j] && higher(&rho, j, i) && best.is_none_or(|b| higher(&rho, j, b)) {
                best = Some(j);
            }
        }
        parent[i] = best;
    }

    let mut delta = vec![0.0; n];
    for i in 0..n {
        delta[i] = match parent[i] {
            Some(p) => rho[p],
            None => {
                let mut m = f64::INFINITY;
                for j in 0..n {
                    if a[i][j] {
                        m = m.min(rho[j]);
                    }
                }
                if m.is_finite() {
                    m
                } else {
                    rho[i]
                }
            }
        };
    }
    let gamma: Vec<f64> = (0..n).map(|i| rho[i] * delta[i]).collect();

    let natural = parent.iter().filter(|p| p.is_none()).count();
    if natural < trees {
        let mut cand: Vec<usize> = (0..n).filter(|&i| parent[i].is_some()).collect();
        // Selection sort by (gamma desc, index asc).
        for pos in 0..cand.len() {
            let mut best = pos;
            for q in pos + 1..cand.len() {
                let (x, y) = (cand[q], cand[best]);
                if gamma[x] > gamma[y] || (gamma[x] == gamma[y] && x < y) {
                    best = q;
                }
            }
            cand.swap(pos, best);
        }
        for &i in cand.iter().take(trees - natural) {
            parent[i] = None;
        }
    }

    let roots: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
    let mut layer = vec![0u32; n];
    let mut tree_id = vec![0usize; n];
    for i in 0..n {
        let mut cur = i;
        let mut depth = 1;
        while let Some(p) = parent[cur] {
            cur = p;
            depth += 1;
            assert!(depth as usize <= n + 1, "cycle in dense oracle");
        }
        layer[i] = depth;
        tree_id[i] = roots.iter().position(|&r| r == cur).unwrap();
    }
    DenseForest {
        rho,
        parent,
        delta,
        gamma,
        layer,
        tree_id,
        roots,
    }
}

/// Follows parent links from every node; returns false on any cycle.
pub fn is_acyclic(parent: &[Option<usize>]) -> bool {
    let n = parent.len();
    (0..n).all(|start| {
        let mut cur = start;
        for _ in 0..=n {
            match parent[cur] {
                Some(p) => cur = p,
                None => return true,
            }
        }
        false
    })
}

/// Independent cycle detector: iterative three-colour DFS over parent links.
pub fn has_cycle_dfs(parent: &[Option<usize>]) -> bool {
    let n = parent.len();
    let mut state = vec![0u8; n];
    for s in 0..n {
        let mut path = Vec::new();
        let mut cur = Some(s);
        while let Some(u) = cur {
            match state[u] {
                1 => return true,
                2 => break,
                _ => {
                    state[u] = 1;
                    path.push(u);
                    cur = parent[u];
                }
            }
        }
        for u in path {
            state[u] = 2;
        }
    }
    false
}

/// Relabels nodes by `perm` (old id -> new id).
pub fn permute_graph(graph: &Graph, perm: &[usize]) -> Graph {
    let n = graph.num_nodes();
    let d = graph.feature_dim();
    let edges: Vec<(usize, usize)> = graph.edges().map(|(u, v)| (perm[u], perm[v])).collect();
    let mut features = vec![0f32; n * d];
    for i in 0..n {
        features[perm[i] * d..(perm[i] + 1) * d].copy_from_slice(graph.feature_row(i));
    }
    let labels = graph.labels().map(|l| {
        let mut out = vec![0u32; n];
        for i in 0..n {
            out[perm[i]] = l[i];
        }
        out
    });
    Graph::from_edges(n, &edges, features, d, labels, graph.num_classes()).unwrap()
}

/// Six nodes in two loosely joined triangles, 4 dense features, 3 classes.
pub fn gradient_fixture() -> (Graph, Vec<(usize, u32)>) {
    let edges = [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)];
    let features = vec![
        0.9, 0.1, 0.0, 0.4, //
        0.7, 0.0, 0.3, 0.1, //
        0.2, 0.5, 0.6, 0.0, //
        0.0, 0.8, 0.1, 0.9, //
        0.3, 0.3, 0.3, 0.3, //
        0.0, 0.1, 0.9, 0.6,
    ];
    let labels = vec![0, 0, 1, 1, 2, 2];
    let g = Graph::from_edges(6, &edges, features, 4, Some(labels), 3).unwrap();
    (g, vec![(0, 0), (2, 1), (3, 1), (5, 2)])
}

/// Largest per-layer relative error `‖a − n‖ / (‖a‖ + ‖n‖)` between the
/// analytic gradient and central differences with step `eps`. The dropout
/// masks are replayed from `mask_seed` on every evaluation.
pub fn gradient_check(
    model: &golf_dns::gcn::GcnModel,
    input: &golf_dns::gcn::GcnInput,
    labeled: &[(usize, u32)],
    weight_decay: f64,
    mask_seed: u64,
    eps: f64,
) -> f64 {
    use golf_dns::gcn::loss_and_gradients;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    let loss = |m: &golf_dns::gcn::GcnModel| {
        loss_and_gradients(
            m,
            input,
            labeled,
            weight_decay,
            &mut ChaCha8Rng::seed_from_u64(mask_seed),
        )
        .unwrap()
    };
    let analytic = loss(model).gradients;
    let mut worst: f64 = 0.0;
    for l in 0..model.weights.len() {
        let (mut diff, mut a_norm, mut n_norm) = (0.0, 0.0, 0.0);
        for idx in 0..model.weights[l].len() {
            let (r, c) = (
                idx / model.weights[l].ncols(),
                idx % model.weights[l].ncols(),
            );
            let mut plus = model.clone();
            plus.weights[l][[r, c]] += eps;
            let mut minus = model.clone();
            minus.weights[l][[r, c]] -= eps;
            let numeric = (loss(&plus).loss - loss(&minus).loss) / (2.0 * eps);
            let a = analytic[l][[r, c]];
            diff += (a - numeric).powi(2);
            a_norm += a * a;
            n_norm += numeric * numeric;
        }
        let denom = a_norm.sqrt() + n_norm.sqrt();
        if denom > 0.0 {
            worst = worst.max(diff.sqrt() / denom);
        }
    }
    worst
}
