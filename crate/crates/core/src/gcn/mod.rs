//! Minimal graph convolutional network and the repeated-run benchmark.

pub mod experiment;
pub mod model;
pub mod train;

pub use experiment::{
    mean_and_std, run_experiment, scheduled_layers, sensitivity_sweep, train_single,
    ExperimentConfig, ExperimentReport, RunRecord, SplitMode, SweepEntry, SweepParam, SweepResult,
    TrainedRun,
};
pub use model::{
    argmax_rows, forward, loss_and_gradients, Adam, GcnInput, GcnModel, LossAndGradients,
    SparseFeatures,
};
pub use train::{evaluate, train, train_with_rng, TrainConfig, TrainingCurve};
