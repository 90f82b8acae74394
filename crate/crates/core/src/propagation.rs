//! The symmetric-normalized propagation operator `D̃^{-1/2} (A + I) D̃^{-1/2}`.
//!
//! Stored as CSR with the self-loop folded into each row. Shared by the
//! leading-forest feature aggregation and the GCN layers.

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    weights: Vec<f64>,
}

impl Propagation {
    pub fn new(graph: &Graph) -> Self {
        let n = graph.num_nodes();
        let deg: Vec<f64> = (0..n).map(|i| (graph.degree(i) + 1) as f64).collect();
        // One rounding of the exact integer product keeps w_ij == w_ji and
        // makes equal degree pairs give bit-equal weights.
        let weight = |i: usize, j: usize| 1.0 / (deg[i] * deg[j]).sqrt();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(graph.adjacency().len() + n);
        let mut weights = Vec::with_capacity(cols.capacity());
        offsets.push(0);
        for i in 0..n {
            // Keep columns ascending with the diagonal in place.
            let mut pushed_self = false;
            for &j in graph.neighbors(i) {
                if !pushed_self && j as usize > i {
                    cols.push(i as u32);
                    weights.push(weight(i, i));
                    pushed_self = true;
                }
                cols.push(j);
                weights.push(weight(i, j as usize));
            }
            if !pushed_self {
                cols.push(i as u32);
                weights.push(weight(i, i));
            }
            offsets.push(cols.len());
        }
        Propagation {
            offsets,
            cols,
            weights,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Nonzeros of row `i` as `(column, weight)`.
    #[inline]
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[i]..self.offsets[i + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.weights[span])
            .map(|(&j, &w)| (j as usize, w))
    }

    /// Dense product `Â · x`. Rows are computed independently, so the result
    /// does not depend on thread scheduling.
    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.num_nodes(), "row count mismatch");
        let mut out = Array2::<f64>::zeros(x.raw_dim());
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .with_min_len(64)
            .for_each(|(i, mut row)| {
                for (j, w) in self.row(i) {
                    row.scaled_add(w, &x.row(j));
                }
            });
        out
    }

    /// `Â · X` for the graph's own `f32` feature matrix, accumulated in `f64`.
    ///
    /// Each output entry sums its nonzero terms in ascending order, so two
    /// entries whose term multisets coincide are bit-identical regardless of
    /// neighbor numbering. Densities derived from them then tie exactly when
    /// they are equal in real arithmetic.
    pub fn apply_features(&self, graph: &Graph) -> Array2<f64> {
        let d = graph.feature_dim();
        let mut out = Array2::<f64>::zeros((self.num_nodes(), d));
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .with_min_len(64)
            .for_each_init(Vec::new, |terms: &mut Vec<(usize, f64)>, (i, mut row)| {
                terms.clear();
                for (j, w) in self.row(i) {
                    for (k, &x) in graph.feature_row(j).iter().enumerate() {
                        if x != 0.0 {
                            terms.push((k, w * x as f64));
                        }
                    }
                }
                terms.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
                for &(k, t) in terms.iter() {
                    row[k] += t;
                }
            });
        out
    }
}
