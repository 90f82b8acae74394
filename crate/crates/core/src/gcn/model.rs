use ndarray::{Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::propagation::Propagation;

/// Row-sparse `f64` feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFeatures {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<f64>,
    dim: usize,
}

impl SparseFeatures {
    /// Nonzeros of the graph's feature matrix, optionally scaled so each row
    /// sums to one in absolute value.
    pub fn from_graph(graph: &Graph, row_normalize: bool) -> Self {
        let mut offsets = vec![0];
        let mut cols = Vec::new();
        let mut values = Vec::new();
        for i in 0..graph.num_nodes() {
            let row = graph.feature_row(i);
            let scale = if row_normalize {
                let s: f64 = row.iter().map(|x| x.abs() as f64).sum();
                if s > 0.0 {
                    1.0 / s
                } else {
                    1.0
                }
            } else {
                1.0
            };
            for (j, &x) in row.iter().enumerate() {
                if x != 0.0 {
                    cols.push(j as u32);
                    values.push(x as f64 * scale);
                }
            }
            offsets.push(cols.len());
        }
        SparseFeatures {
            offsets,
            cols,
            values,
            dim: graph.feature_dim(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `self · w`.
    fn matmul(&self, values: &[f64], w: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.num_rows(), w.ncols()));
        for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
            let span = self.offsets[i]..self.offsets[i + 1];
            for (&v, &c) in values[span.clone()].iter().zip(&self.cols[span]) {
                row.scaled_add(v, &w.row(c as usize));
            }
        }
        out
    }

    /// `selfᵀ · g`.
    fn t_matmul(&self, values: &[f64], g: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.dim, g.ncols()));
        for i in 0..self.num_rows() {
            let gi = g.row(i);
            let span = self.offsets[i]..self.offsets[i + 1];
            for (&v, &c) in values[span.clone()].iter().zip(&self.cols[span]) {
                out.row_mut(c as usize).scaled_add(v, &gi);
            }
        }
        out
    }
}

/// Everything a GCN needs from a graph: the propagation operator and the
/// input features.
#[derive(Debug, Clone)]
pub struct GcnInput {
    pub propagation: Propagation,
    pub features: SparseFeatures,
}

impl GcnInput {
    pub fn new(graph: &Graph, row_normalize: bool) -> Self {
        GcnInput {
            propagation: Propagation::new(graph),
            features: SparseFeatures::from_graph(graph, row_normalize),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.features.num_rows()
    }
}

/// Stacked graph convolutions `H' = act(Â · dropout(H) · W)`, ReLU between
/// layers and row softmax at the output. No biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnModel {
    pub weights: Vec<Array2<f64>>,
    pub dropout: f64,
}

impl GcnModel {
    /// Glorot-uniform initialization for layer widths `dims`
    /// (`[input, hidden.., classes]`).
    pub fn glorot<R: Rng + ?Sized>(dims: &[usize], dropout: f64, rng: &mut R) -> Self {
        let weights = dims
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                Array2::from_shape_simple_fn((w[0], w[1]), || rng.random_range(-limit..limit))
            })
            .collect();
        GcnModel { weights, dropout }
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn num_classes(&self) -> usize {
        self.weights.last().map_or(0, |w| w.ncols())
    }

    fn check_input(&self, input: &GcnInput) -> Result<()> {
        let first = self
            .weights
            .first()
            .ok_or_else(|| Error::Contract("model has no layers".into()))?;
        if first.nrows() != input.features.dim() {
            return Err(Error::Contract(format!(
                "first layer expects {} features, input has {}",
                first.nrows(),
                input.features.dim()
            )));
        }
        for (l, pair) in self.weights.windows(2).enumerate() {
            if pair[0].ncols() != pair[1].nrows() {
                return Err(Error::Contract(format!(
                    "layer {} outputs {} but layer {} expects {}",
                    l,
                    pair[0].ncols(),
                    l + 1,
                    pair[1].nrows()
                )));
            }
        }
        Ok(())
    }
}

/// Intermediate values kept for the backward pass.
struct Tape {
    /// Dropout-scaled sparse input values.
    input_values: Vec<f64>,
    /// Layer inputs after dropout, for layers 1..
    dropped: Vec<Array2<f64>>,
    /// Inverted-dropout multipliers (0 or 1/keep), for layers 1..
    masks: Vec<Option<Array2<f64>>>,
    /// Pre-activations of every layer.
    pre: Vec<Array2<f64>>,
}

fn dropout_mask<R: Rng + ?Sized>(shape: (usize, usize), rate: f64, rng: &mut R) -> Array2<f64> {
    let keep = 1.0 - rate;
    Array2::from_shape_simple_fn(shape, || {
        if rng.random::<f64>() < keep {
            1.0 / keep
        } else {
            0.0
        }
    })
}

fn run_forward<R: Rng + ?Sized>(
    model: &GcnModel,
    input: &GcnInput,
    train_mode: bool,
    rng: &mut R,
) -> Result<Tape> {
    model.check_input(input)?;
    let drop = train_mode && model.dropout > 0.0;
    let keep = 1.0 - model.dropout;

    let input_values: Vec<f64> = if drop {
        input
            .features
            .values
            .iter()
            .map(|&v| {
                if rng.random::<f64>() < keep {
                    v / keep
                } else {
                    0.0
                }
            })
            .collect()
    } else {
        input.features.values.clone()
    };

    let mut pre = Vec::with_capacity(model.num_layers());
    let mut dropped = Vec::new();
    let mut masks = Vec::new();
    let projected = input.features.matmul(&input_values, &model.weights[0]);
    pre.push(input.propagation.apply(projected.view()));
    for w in &model.weights[1..] {
        let mut h = pre.last().unwrap().mapv(|z| z.max(0.0));
        let mask = drop.then(|| dropout_mask(h.dim(), model.dropout, rng));
        if let Some(m) = &mask {
            h *= m;
        }
        let projected = h.dot(w);
        pre.push(input.propagation.apply(projected.view()));
        dropped.push(h);
        masks.push(mask);
    }
    Ok(Tape {
        input_values,
        dropped,
        masks,
        pre,
    })
}

fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        row.mapv_inplace(|x| (x - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

/// Class probabilities for every node.
pub fn forward<R: Rng + ?Sized>(
    model: &GcnModel,
    input: &GcnInput,
    train_mode: bool,
    rng: &mut R,
) -> Result<Array2<f64>> {
    let tape = run_forward(model, input, train_mode, rng)?;
    Ok(softmax_rows(tape.pre.last().unwrap()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossAndGradients {
    pub loss: f64,
    pub gradients: Vec<Array2<f64>>,
}

/// Mean cross-entropy over `labeled` plus `weight_decay/2 · ‖W₀‖²`, and its
/// gradient with respect to every weight matrix.
pub fn loss_and_gradients<R: Rng + ?Sized>(
    model: &GcnModel,
    input: &GcnInput,
    labeled: &[(usize, u32)],
    weight_decay: f64,
    rng: &mut R,
) -> Result<LossAndGradients> {
    if labeled.is_empty() {
        return Err(Error::Contract(
            "loss needs at least one labeled node".into(),
        ));
    }
    let tape = run_forward(model, input, true, rng)?;
    let logits = tape.pre.last().unwrap();
    let classes = model.num_classes();
    let m = labeled.len() as f64;

    let mut grad = Array2::<f64>::zeros(logits.dim());
    let mut loss = 0.0;
    for &(node, class) in labeled {
        let class = class as usize;
        if class >= classes {
            return Err(Error::Contract(format!(
                "label {class} on node {node} outside the model's {classes} classes"
            )));
        }
        let row = logits.row(node);
        let max = row.fold(f64::NEG_INFINITY, |a, &x| a.max(x));
        let sum: f64 = row.iter().map(|&x| (x - max).exp()).sum();
        loss += max + sum.ln() - row[class];
        let mut g = grad.row_mut(node);
        for (c, gc) in g.iter_mut().enumerate() {
            *gc += (row[c] - max).exp() / sum / m;
        }
        g[class] -= 1.0 / m;
    }
    loss /= m;
    let w0 = &model.weights[0];
    loss += 0.5 * weight_decay * w0.iter().map(|w| w * w).sum::<f64>();

    let layers = model.num_layers();
    let mut gradients = vec![Array2::zeros((0, 0)); layers];
    let mut d_pre = grad;
    for l in (0..layers).rev() {
        let d_proj = input.propagation.apply(d_pre.view());
        if l == 0 {
            gradients[0] = input.features.t_matmul(&tape.input_values, &d_proj);
            break;
        }
        gradients[l] = tape.dropped[l - 1].t().dot(&d_proj);
        let mut d_h = d_proj.dot(&model.weights[l].t());
        if let Some(mask) = &tape.masks[l - 1] {
            d_h *= mask;
        }
        Zip::from(&mut d_h).and(&tape.pre[l - 1]).for_each(|d, &z| {
            if z <= 0.0 {
                *d = 0.0
            }
        });
        d_pre = d_h;
    }
    if weight_decay != 0.0 {
        gradients[0].scaled_add(weight_decay, w0);
    }
    Ok(LossAndGradients { loss, gradients })
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: i32,
    first: Vec<Array2<f64>>,
    second: Vec<Array2<f64>>,
}

impl Adam {
    pub fn new(learning_rate: f64, model: &GcnModel) -> Self {
        let zeros: Vec<_> = model
            .weights
            .iter()
            .map(|w| Array2::zeros(w.dim()))
            .collect();
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn step(&mut self, model: &mut GcnModel, gradients: &[Array2<f64>]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.epsilon);
        for ((w, g), (m, v)) in model
            .weights
            .iter_mut()
            .zip(gradients)
            .zip(self.first.iter_mut().zip(self.second.iter_mut()))
        {
            Zip::from(w).and(g).and(m).and(v).for_each(|w, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *w -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            });
        }
    }
}

/// Index of the largest entry in each row; ties go to the lower class.
pub fn argmax_rows(probs: ArrayView2<'_, f64>) -> Vec<usize> {
    probs
        .axis_iter(Axis(0))
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (c, &p)| {
                    if p > best.1 {
                        (c, p)
                    } else {
                        best
                    }
                })
                .0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_nodes() -> (Graph, GcnInput) {
        let g = Graph::from_edges(
            2,
            &[(0, 1)],
            vec![1.0, 0.0, 0.0, 1.0],
            2,
            Some(vec![0, 1]),
            2,
        )
        .unwrap();
        let input = GcnInput::new(&g, false);
        (g, input)
    }

    #[test]
    fn single_layer_matches_hand_computation() {
        let (_, input) = two_nodes();
        let model = GcnModel {
            weights: vec![array![[1.0, 0.0], [0.0, 2.0]]],
            dropout: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = forward(&model, &input, false, &mut rng).unwrap();
        // Â = [[.5,.5],[.5,.5]], X W = diag(1,2) → logits [0.5, 1.0] per row.
        let e = (0.5f64).exp();
        let expect = [e / (e + 1f64.exp()), 1f64.exp() / (e + 1f64.exp())];
        for row in p.rows() {
            assert!((row[0] - expect[0]).abs() < 1e-12);
            assert!((row[1] - expect[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn rows_sum_to_one_with_and_without_dropout() {
        let g = crate::datasets::karate_club();
        let input = GcnInput::new(&g, true);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = GcnModel::glorot(&[34, 16, 16, 2], 0.5, &mut rng);
        for train in [false, true] {
            let p = forward(&model, &input, train, &mut rng).unwrap();
            for row in p.rows() {
                assert!((row.sum() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn zero_dropout_train_equals_eval() {
        let g = crate::datasets::karate_club();
        let input = GcnInput::new(&g, true);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = GcnModel::glorot(&[34, 8, 2], 0.0, &mut rng);
        let a = forward(&model, &input, true, &mut rng).unwrap();
        let b = forward(&model, &input, false, &mut rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_predictions_cost_ln_c() {
        let (_, input) = two_nodes();
        let model = GcnModel {
            weights: vec![Array2::zeros((2, 3))],
            dropout: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = loss_and_gradients(&model, &input, &[(0, 0), (1, 2)], 0.0, &mut rng).unwrap();
        assert!((out.loss - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_decay_excludes_l2() {
        let (_, input) = two_nodes();
        let model = GcnModel {
            weights: vec![array![[0.3, -0.2], [0.1, 0.4]]],
            dropout: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let plain = loss_and_gradients(&model, &input, &[(0, 0)], 0.0, &mut rng).unwrap();
        let decayed = loss_and_gradients(&model, &input, &[(0, 0)], 0.1, &mut rng).unwrap();
        let l2 = 0.05 * (0.09 + 0.04 + 0.01 + 0.16);
        assert!((decayed.loss - plain.loss - l2).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_a_contract_violation() {
        let (_, input) = two_nodes();
        let model = GcnModel {
            weights: vec![Array2::zeros((3, 2))],
            dropout: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            forward(&model, &input, false, &mut rng),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn empty_label_set_is_rejected() {
        let (_, input) = two_nodes();
        let model = GcnModel {
            weights: vec![Array2::zeros((2, 2))],
            dropout: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(loss_and_gradients(&model, &input, &[], 0.0, &mut rng).is_err());
    }
}
