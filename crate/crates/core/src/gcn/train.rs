use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{argmax_rows, forward, loss_and_gradients, Adam, GcnInput, GcnModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub dropout: f64,
    /// L2 coefficient on the first layer's weights.
    pub weight_decay: f64,
    pub hidden_units: usize,
    pub num_layers: usize,
    pub seed: u64,
    /// Scale each feature row to unit L1 norm before training.
    pub row_normalize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 200,
            dropout: 0.5,
            weight_decay: 5e-4,
            hidden_units: 16,
            num_layers: 2,
            seed: 0,
            row_normalize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_layers < 2 {
            return Err(Error::Parameter(format!(
                "num_layers must be at least 2, got {}",
                self.num_layers
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Parameter(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        if self.hidden_units == 0 || self.epochs == 0 {
            return Err(Error::Parameter(
                "hidden_units and epochs must be positive".into(),
            ));
        }
        // Written so that NaN fails too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.learning_rate > 0.0) || self.weight_decay < 0.0 {
            return Err(Error::Parameter(
                "learning rate must be positive and weight decay non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn layer_dims(&self, input_dim: usize, num_classes: usize) -> Vec<usize> {
        let mut dims = vec![input_dim];
        dims.extend(std::iter::repeat_n(self.hidden_units, self.num_layers - 1));
        dims.push(num_classes);
        dims
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub loss: Vec<f64>,
    pub train_accuracy: Vec<f64>,
}

/// Full-batch Adam training. Initialization and dropout masks are drawn
/// from one generator seeded with `config.seed`.
pub fn train(
    input: &GcnInput,
    labeled: &[(usize, u32)],
    num_classes: usize,
    config: &TrainConfig,
) -> Result<(GcnModel, TrainingCurve)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    train_with_rng(input, labeled, num_classes, config, &mut rng)
}

pub fn train_with_rng<R: Rng + ?Sized>(
    input: &GcnInput,
    labeled: &[(usize, u32)],
    num_classes: usize,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<(GcnModel, TrainingCurve)> {
    config.validate()?;
    let dims = config.layer_dims(input.features.dim(), num_classes);
    let mut model = GcnModel::glorot(&dims, config.dropout, rng);
    let mut adam = Adam::new(config.learning_rate, &model);
    let mut curve = TrainingCurve {
        loss: Vec::with_capacity(config.epochs),
        train_accuracy: Vec::with_capacity(config.epochs),
    };
    for epoch in 0..config.epochs {
        let step = loss_and_gradients(&model, input, labeled, config.weight_decay, rng)?;
        if !step.loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                loss: step.loss,
            });
        }
        adam.step(&mut model, &step.gradients);
        curve.loss.push(step.loss);
        curve
            .train_accuracy
            .push(labeled_accuracy(&model, input, labeled)?);
    }
    Ok((model, curve))
}

fn labeled_accuracy(model: &GcnModel, input: &GcnInput, labeled: &[(usize, u32)]) -> Result<f64> {
    let probs = forward(model, input, false, &mut ChaCha8Rng::seed_from_u64(0))?;
    let pred = argmax_rows(probs.view());
    let hits = labeled
        .iter()
        .filter(|&&(i, y)| pred[i] == y as usize)
        .count();
    Ok(hits as f64 / labeled.len() as f64)
}

/// Fraction of `test_nodes` whose predicted class equals `labels`.
/// `test_nodes` must be non-empty and disjoint from `labeled_nodes`.
pub fn evaluate(
    model: &GcnModel,
    input: &GcnInput,
    labels: &[u32],
    test_nodes: &[usize],
    labeled_nodes: &[usize],
) -> Result<f64> {
    if test_nodes.is_empty() {
        return Err(Error::Parameter("test set is empty".into()));
    }
    let mut is_labeled = vec![false; input.num_nodes()];
    for &i in labeled_nodes {
        is_labeled[i] = true;
    }
    if let Some(&i) = test_nodes.iter().find(|&&i| is_labeled[i]) {
        return Err(Error::Contract(format!("test node {i} is also labeled")));
    }
    let probs = forward(model, input, false, &mut ChaCha8Rng::seed_from_u64(0))?;
    Ok(accuracy_of(&argmax_rows(probs.view()), labels, test_nodes))
}

pub(crate) fn accuracy_of(pred: &[usize], labels: &[u32], nodes: &[usize]) -> f64 {
    let hits = nodes
        .iter()
        .filter(|&&i| pred[i] == labels[i] as usize)
        .count();
    hits as f64 / nodes.len() as f64
}
