//! Repeated-run protocol comparing random label splits with DNS splits.
//!
//! Run `r` uses seed `base_seed + r` in both modes, so a random-mode report
//! and a DNS-mode report with the same base seed draw identical test-set
//! randomness and model initializations. In DNS mode every run trains on
//! the same label set.

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{GcnInput, GcnModel};
use super::train::{evaluate, train_with_rng, TrainConfig, TrainingCurve};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::select::{budget_from_rate, dns, SelectionConfig};

pub const DEFAULT_TEST_SIZE: usize = 1000;
pub const DEFAULT_RUNS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    Random,
    Dns,
}

impl std::fmt::Display for SplitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitMode::Random => "random",
            SplitMode::Dns => "dns",
        })
    }
}

/// GCN depth by label rate, for datasets with a published schedule.
pub fn scheduled_layers(dataset: &str, rate: f64) -> Option<usize> {
    let table: &[(f64, usize)] = match dataset.to_ascii_lowercase().as_str() {
        "cora" => &[(0.005, 4), (0.01, 3), (0.02, 3), (0.03, 2), (0.04, 2)],
        "citeseer" => &[(0.005, 3), (0.01, 3), (0.02, 3), (0.03, 2), (0.04, 2)],
        "pubmed" => &[(0.0003, 4), (0.0005, 4), (0.001, 4)],
        _ => return None,
    };
    table
        .iter()
        .find(|(r, _)| (r - rate).abs() < 1e-9)
        .map(|&(_, layers)| layers)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub rate: f64,
    pub mode: SplitMode,
    pub runs: usize,
    pub base_seed: u64,
    pub train: TrainConfig,
    /// Overrides the depth schedule and `train.num_layers`.
    pub num_layers: Option<usize>,
    /// Selection parameters for DNS mode; the budget is replaced by the
    /// rate-derived one. `None` uses the graph defaults.
    pub selection: Option<SelectionConfig>,
    pub test_size: usize,
    /// Draw random splits class-balanced instead of uniformly.
    pub stratified: bool,
    /// Worker threads for independent runs; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(rate: f64, mode: SplitMode) -> Self {
        ExperimentConfig {
            rate,
            mode,
            runs: DEFAULT_RUNS,
            base_seed: 0,
            train: TrainConfig::default(),
            num_layers: None,
            selection: None,
            test_size: DEFAULT_TEST_SIZE,
            stratified: false,
            jobs: None,
        }
    }

    pub fn resolved_layers(&self, dataset: &str) -> usize {
        self.num_layers
            .or_else(|| scheduled_layers(dataset, self.rate))
            .unwrap_or(self.train.num_layers)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub labeled: Vec<usize>,
    pub test_size: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub rate: f64,
    pub mode: SplitMode,
    pub budget: usize,
    pub num_layers: usize,
    pub runs: Vec<RunRecord>,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
    pub seeds: Vec<u64>,
    pub selection: Option<SelectionConfig>,
    pub selection_seconds: f64,
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn accuracies(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.accuracy).collect()
    }

    /// Flat `rate,mode,run,seed,accuracy` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rate,mode,run,seed,accuracy\n");
        for r in &self.runs {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                self.rate, self.mode, r.run, r.seed, r.accuracy
            );
        }
        out
    }
}

pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn random_split(
    labels: &[u32],
    num_classes: usize,
    budget: usize,
    stratified: bool,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(rng);
    if !stratified {
        order.truncate(budget);
        return order;
    }
    let mut by_class = vec![Vec::new(); num_classes];
    for &i in &order {
        by_class[labels[i] as usize].push(i);
    }
    let mut picked = Vec::with_capacity(budget);
    let mut round = 0;
    while picked.len() < budget {
        let before = picked.len();
        for members in &by_class {
            if picked.len() == budget {
                break;
            }
            if let Some(&i) = members.get(round) {
                picked.push(i);
            }
        }
        if picked.len() == before {
            break;
        }
        round += 1;
    }
    picked
}

/// Everything shared by the runs of one experiment.
struct Protocol<'a> {
    graph: &'a Graph,
    labels: &'a [u32],
    budget: usize,
    num_layers: usize,
    train: TrainConfig,
    test_size: usize,
    stratified: bool,
    fixed_labels: Option<Vec<usize>>,
    selection: Option<SelectionConfig>,
    selection_seconds: f64,
    input: GcnInput,
    seeds: Vec<u64>,
    warnings: Vec<String>,
}

impl<'a> Protocol<'a> {
    fn prepare(graph: &'a Graph, config: &ExperimentConfig) -> Result<Self> {
        let labels = graph
            .labels()
            .ok_or_else(|| Error::Parameter("experiments need a labeled graph".into()))?;
        let n = graph.num_nodes();
        let budget = budget_from_rate(config.rate, n)?;
        if budget == 0 || budget >= n {
            return Err(Error::Parameter(format!(
                "label rate {} gives budget {budget} for {n} nodes",
                config.rate
            )));
        }
        if config.runs == 0 {
            return Err(Error::Parameter("runs must be positive".into()));
        }
        let num_layers = config.resolved_layers(graph.name());
        let train = TrainConfig {
            num_layers,
            ..config.train.clone()
        };
        train.validate()?;

        let mut warnings = Vec::new();
        let pool_size = n - budget;
        let test_size = if pool_size < config.test_size {
            warnings.push(format!(
                "only {pool_size} unlabeled nodes available; testing on all of them instead of {}",
                config.test_size
            ));
            pool_size
        } else {
            config.test_size
        };

        let started = Instant::now();
        let (fixed_labels, selection) = match config.mode {
            SplitMode::Random => (None, None),
            SplitMode::Dns => {
                let mut sel = config
                    .selection
                    .clone()
                    .unwrap_or_else(|| SelectionConfig::for_graph(graph, budget));
                sel.budget = budget;
                let set = dns(graph, &sel)?;
                let mut nodes = set.nodes();
                nodes.sort_unstable();
                (Some(nodes), Some(sel))
            }
        };
        let selection_seconds = started.elapsed().as_secs_f64();

        Ok(Protocol {
            graph,
            labels,
            budget,
            num_layers,
            input: GcnInput::new(graph, train.row_normalize),
            train,
            test_size,
            stratified: config.stratified,
            fixed_labels,
            selection,
            selection_seconds,
            seeds: (0..config.runs)
                .map(|r| config.base_seed.wrapping_add(r as u64))
                .collect(),
            warnings,
        })
    }

    fn run(&self, run: usize) -> Result<TrainedRun> {
        let t0 = Instant::now();
        let n = self.graph.num_nodes();
        let seed = self.seeds[run];
        let mut split_rng = ChaCha8Rng::seed_from_u64(seed);
        split_rng.set_stream(0);
        let mut model_rng = ChaCha8Rng::seed_from_u64(seed);
        model_rng.set_stream(1);

        let labeled = match &self.fixed_labels {
            Some(nodes) => nodes.clone(),
            None => {
                let mut s = random_split(
                    self.labels,
                    self.graph.num_classes(),
                    self.budget,
                    self.stratified,
                    &mut split_rng,
                );
                s.sort_unstable();
                s
            }
        };
        let mut is_labeled = vec![false; n];
        for &i in &labeled {
            is_labeled[i] = true;
        }
        let mut pool: Vec<usize> = (0..n).filter(|&i| !is_labeled[i]).collect();
        pool.shuffle(&mut split_rng);
        pool.truncate(self.test_size);

        let pairs: Vec<(usize, u32)> = labeled.iter().map(|&i| (i, self.labels[i])).collect();
        let (model, curve) = train_with_rng(
            &self.input,
            &pairs,
            self.graph.num_classes(),
            &self.train,
            &mut model_rng,
        )?;
        let accuracy = evaluate(&model, &self.input, self.labels, &pool, &labeled)?;
        Ok(TrainedRun {
            record: RunRecord {
                run,
                seed,
                accuracy,
                labeled,
                test_size: pool.len(),
                seconds: t0.elapsed().as_secs_f64(),
            },
            model,
            curve,
        })
    }
}

/// One run of the protocol together with the trained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedRun {
    pub record: RunRecord,
    pub model: GcnModel,
    pub curve: TrainingCurve,
}

/// Trains and evaluates only run 0 of `config` (seed `base_seed`), keeping
/// the model. Its record equals run 0 of [`run_experiment`].
pub fn train_single(graph: &Graph, config: &ExperimentConfig) -> Result<TrainedRun> {
    let protocol = Protocol::prepare(
        graph,
        &ExperimentConfig {
            runs: 1,
            ..config.clone()
        },
    )?;
    for w in &protocol.warnings {
        log::warn!("{w}");
    }
    protocol.run(0)
}

/// Runs the protocol on a labeled graph.
pub fn run_experiment(graph: &Graph, config: &ExperimentConfig) -> Result<ExperimentReport> {
    let protocol = Protocol::prepare(graph, config)?;
    let one_run = |run: usize| protocol.run(run).map(|trained| trained.record);
    let runs: Vec<RunRecord> = match config.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?
            .install(|| {
                (0..config.runs)
                    .into_par_iter()
                    .map(one_run)
                    .collect::<Result<_>>()
            })?,
        None => (0..config.runs)
            .into_par_iter()
            .map(one_run)
            .collect::<Result<_>>()?,
    };

    let accuracies: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
    let (mean, std) = mean_and_std(&accuracies);
    for w in &protocol.warnings {
        log::warn!("{w}");
    }
    Ok(ExperimentReport {
        dataset: graph.name().to_owned(),
        rate: config.rate,
        mode: config.mode,
        budget: protocol.budget,
        num_layers: protocol.num_layers,
        runs,
        mean,
        std,
        seeds: protocol.seeds,
        selection: protocol.selection,
        selection_seconds: protocol.selection_seconds,
        warnings: protocol.warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Sigma,
    Trees,
    K,
    Alpha,
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepParam::Sigma => "sigma",
            SweepParam::Trees => "trees",
            SweepParam::K => "k",
            SweepParam::Alpha => "alpha",
        })
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigma" | "rho" => Ok(SweepParam::Sigma),
            "trees" | "t" => Ok(SweepParam::Trees),
            "k" => Ok(SweepParam::K),
            "alpha" => Ok(SweepParam::Alpha),
            other => Err(Error::Parameter(format!(
                "unknown sweep parameter {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub param: SweepParam,
    pub value: f64,
    pub report: Option<ExperimentReport>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
}

impl SweepResult {
    /// `param,value,status,mean,std,runs` rows with a header; skipped values
    /// have empty statistics.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,value,status,mean,std,runs\n");
        for e in &self.entries {
            match &e.report {
                Some(r) => {
                    let _ = writeln!(
                        out,
                        "{},{},ok,{},{},{}",
                        e.param,
                        e.value,
                        r.mean,
                        r.std,
                        r.runs.len()
                    );
                }
                None => {
                    let _ = writeln!(out, "{},{},skipped,,,0", e.param, e.value);
                }
            }
        }
        out
    }

    pub fn warnings(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().filter_map(|e| e.warning.as_deref())
    }
}

/// One DNS-mode experiment per value of `param`, all other selection
/// parameters held at `base.selection` (or the graph defaults). Values that
/// make selection infeasible are skipped with a warning.
pub fn sensitivity_sweep(
    graph: &Graph,
    base: &ExperimentConfig,
    param: SweepParam,
    values: &[f64],
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::Parameter("sweep needs at least one value".into()));
    }
    let budget = budget_from_rate(base.rate, graph.num_nodes())?;
    let defaults = base
        .selection
        .clone()
        .unwrap_or_else(|| SelectionConfig::for_graph(graph, budget));
    let mut entries = Vec::with_capacity(values.len());
    for &value in values {
        let mut sel = defaults.clone();
        let bad_integer = (value < 0.0 || value.fract() != 0.0)
            && matches!(param, SweepParam::Trees | SweepParam::K);
        match param {
            SweepParam::Sigma => sel.sigma = value,
            SweepParam::Trees => sel.trees = value as usize,
            SweepParam::K => sel.min_per_group = value as usize,
            SweepParam::Alpha => sel.alpha = value,
        }
        let config = ExperimentConfig {
            mode: SplitMode::Dns,
            selection: Some(sel),
            ..base.clone()
        };
        let outcome = if bad_integer {
            Err(Error::Parameter(format!(
                "{param} must be a non-negative integer"
            )))
        } else {
            run_experiment(graph, &config)
        };
        match outcome {
            Ok(report) => entries.push(SweepEntry {
                param,
                value,
                report: Some(report),
                warning: None,
            }),
            Err(e @ (Error::Infeasible { .. } | Error::Parameter(_))) => {
                let warning = format!("{param}={value} skipped: {e}");
                log::warn!("{warning}");
                entries.push(SweepEntry {
                    param,
                    value,
                    report: None,
                    warning: Some(warning),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SweepResult { entries })
}
