//! Builds the leading forest of Zachary's karate club and selects four labels.

use golf_dns::datasets::karate_club;
use golf_dns::{brute_force_select, build_forest, select_labels, SelectionConfig};

fn main() -> golf_dns::Result<()> {
    let graph = karate_club();
    let forest = build_forest(&graph, 1.0, 2)?;
    println!(
        "roots: {:?} (natural: {})",
        forest.roots, forest.natural_roots
    );
    for i in 0..graph.num_nodes() {
        println!(
            "{i:>2} parent={:<6} rho={:.6} gamma={:.6} layer={} tree={}",
            forest.parent[i].map_or("-".to_string(), |p| p.to_string()),
            forest.rho[i],
            forest.gamma[i],
            forest.layer[i],
            forest.tree_id[i]
        );
    }
    for alpha in [0.0, 0.5, 1.0] {
        let config = SelectionConfig {
            alpha,
            ..SelectionConfig::for_graph(&graph, 4)
        };
        let greedy = select_labels(&forest, &config, None)?;
        let exact = brute_force_select(&forest, &config, None)?;
        println!(
            "alpha={alpha}: greedy typ={:?} div={:?} J={:.12}",
            greedy.typical, greedy.divergent, greedy.objective
        );
        println!(
            "          exact  typ={:?} div={:?} J={:.12}",
            exact.typical, exact.divergent, exact.objective
        );
    }
    Ok(())
}
