//! Flag groups shared by subcommands, and their merge with a config file.
//!
//! Every option is an `Option` so that "not given" can be told apart from a
//! value equal to the default. Resolution order is flag, then config file,
//! then built-in default. The config file is a flat JSON or TOML table using
//! the same field names as the flag groups; a run manifest is accepted too,
//! in which case its `config` table is used.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use golf_dns::gcn::{SplitMode, SweepParam};
use golf_dns::GroupMode;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// Fills every field from `file` when the flag was not given.
macro_rules! merge_fields {
    ($flags:expr, $file:expr, [$($field:ident),* $(,)?]) => {
        Self { $($field: $flags.$field.or($file.$field)),* }
    };
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetArgs {
    /// Container file, edge-list file (with --features), `karate`,
    /// `citation-like`, or a name resolved to `<name>.golf` in the data directory.
    #[arg(long)]
    pub dataset: Option<String>,
    /// TSV feature file accompanying an edge-list dataset.
    #[arg(long)]
    pub features: Option<PathBuf>,
}

impl DatasetArgs {
    pub fn merge(self, file: Self) -> Self {
        merge_fields!(self, file, [dataset, features])
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestArgs {
    /// Density bandwidth.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Number of trees to cut the leading structure into (default: class count).
    #[arg(long)]
    pub trees: Option<usize>,
}

impl ForestArgs {
    pub fn merge(self, file: Self) -> Self {
        merge_fields!(self, file, [sigma, trees])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupsArg {
    /// Trees of the forest.
    Tree,
    /// Ground-truth classes.
    Oracle,
}

impl From<GroupsArg> for GroupMode {
    fn from(g: GroupsArg) -> Self {
        match g {
            GroupsArg::Tree => GroupMode::TreeProxy,
            GroupsArg::Oracle => GroupMode::OracleLabels,
        }
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectArgs {
    /// Label rate(s); the budget is round(rate * nodes). `compare` accepts a
    /// comma-separated list.
    #[arg(long, value_delimiter = ',')]
    #[serde(deserialize_with = "one_or_many")]
    pub rate: Option<Vec<f64>>,
    /// Label budget, overriding --rate for selection.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Minimum typical labels per group.
    #[arg(long)]
    pub k: Option<usize>,
    /// Weight of the typical term.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// What the per-group minimum applies to.
    #[arg(long, value_enum)]
    pub groups: Option<GroupsArg>,
}

impl SelectArgs {
    pub fn merge(self, file: Self) -> Self {
        // The budget source is taken as a pair so a flag always wins over a
        // config file that names the other one.
        let (rate, budget) = if self.rate.is_some() || self.budget.is_some() {
            (self.rate, self.budget)
        } else {
            (file.rate, file.budget)
        };
        SelectArgs {
            rate,
            budget,
            k: self.k.or(file.k),
            alpha: self.alpha.or(file.alpha),
            groups: self.groups.or(file.groups),
        }
    }

    /// The single rate of a non-`compare` subcommand.
    pub fn single_rate(&self) -> Result<Option<f64>, CliError> {
        match self.rate.as_deref() {
            None => Ok(None),
            Some([r]) => Ok(Some(*r)),
            Some(many) => Err(CliError::usage(format!(
                "expected one --rate, got {}",
                many.len()
            ))),
        }
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainArgs {
    /// Full-batch training epochs [default: 200].
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Adam learning rate [default: 0.01].
    #[arg(long = "lr")]
    pub learning_rate: Option<f64>,
    /// Dropout probability on layer inputs [default: 0.5].
    #[arg(long)]
    pub dropout: Option<f64>,
    /// L2 penalty on the first layer's weights [default: 5e-4].
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Hidden units per layer [default: 16].
    #[arg(long)]
    pub hidden: Option<usize>,
    /// GCN depth; overrides the per-dataset schedule.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Feed features without row normalization.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub raw_features: Option<bool>,
}

impl TrainArgs {
    pub fn merge(self, file: Self) -> Self {
        merge_fields!(
            self,
            file,
            [
                epochs,
                learning_rate,
                dropout,
                weight_decay,
                hidden,
                layers,
                raw_features
            ]
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Random,
    Dns,
}

impl From<ModeArg> for SplitMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Random => SplitMode::Random,
            ModeArg::Dns => SplitMode::Dns,
        }
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunArgs {
    /// How labeled nodes are chosen.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Base seed; run r uses seed + r.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub test_size: Option<usize>,
    /// Class-balanced random splits.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub stratified: Option<bool>,
}

impl RunArgs {
    pub fn merge(self, file: Self) -> Self {
        merge_fields!(self, file, [mode, runs, seed, test_size, stratified])
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepArgs {
    /// sigma (alias rho), trees, k, or alpha.
    #[arg(long)]
    pub param: Option<String>,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
}

impl SweepArgs {
    pub fn merge(self, file: Self) -> Self {
        merge_fields!(self, file, [param, values])
    }

    pub fn param(&self) -> Result<SweepParam, CliError> {
        let name = self
            .param
            .as_deref()
            .ok_or_else(|| CliError::usage("sweep needs --param"))?;
        name.parse().map_err(CliError::from)
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<f64>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(Option::<OneOrMany>::deserialize(d)?.map(|v| match v {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(xs) => xs,
    }))
}

/// A parsed config file.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    pub path: Option<PathBuf>,
    table: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::format(format!("{}: {e}", path.display())))?;
        let value: Value = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text)
                .map_err(|e| CliError::format(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text)
                .map_err(|e| CliError::format(format!("{}: {e}", path.display())))?
        };
        let Value::Object(mut table) = value else {
            return Err(CliError::format(format!(
                "{}: config must be a table",
                path.display()
            )));
        };
        // A run manifest carries its resolved settings under `config`.
        if table.contains_key("subcommand") {
            table = match table.remove("config") {
                Some(Value::Object(inner)) => inner,
                _ => {
                    return Err(CliError::format(format!(
                        "{}: manifest has no config table",
                        path.display()
                    )))
                }
            };
        }
        table.retain(|_, v| !v.is_null());
        let known = known_keys();
        if let Some(key) = table.keys().find(|k| !known.contains(k.as_str())) {
            return Err(CliError::format(format!(
                "{}: unknown config key {key:?}",
                path.display()
            )));
        }
        Ok(ConfigFile {
            path: Some(path.to_owned()),
            table,
        })
    }

    /// The part of the file that `T` understands.
    pub fn group<T: DeserializeOwned + Serialize + Default>(&self) -> Result<T, CliError> {
        let fields = field_names::<T>();
        let subset: Map<String, Value> = self
            .table
            .iter()
            .filter(|(k, _)| fields.contains(k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        serde_json::from_value(Value::Object(subset)).map_err(|e| {
            let origin = self
                .path
                .as_deref()
                .map_or("config".into(), |p| p.display().to_string());
            CliError::format(format!("{origin}: {e}"))
        })
    }

    /// A top-level setting outside the flag groups (`jobs`, `exact`).
    pub fn scalar<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| CliError::format(format!("config key {key}: {e}"))),
        }
    }
}

fn field_names<T: Serialize + Default>() -> BTreeSet<String> {
    match serde_json::to_value(T::default()) {
        Ok(Value::Object(map)) => map.into_iter().map(|(k, _)| k).collect(),
        _ => BTreeSet::new(),
    }
}

fn known_keys() -> BTreeSet<String> {
    let mut keys = BTreeSet::from(["jobs".to_string(), "exact".to_string()]);
    keys.extend(field_names::<DatasetArgs>());
    keys.extend(field_names::<ForestArgs>());
    keys.extend(field_names::<SelectArgs>());
    keys.extend(field_names::<TrainArgs>());
    keys.extend(field_names::<RunArgs>());
    keys.extend(field_names::<SweepArgs>());
    keys
}

/// Collects resolved groups into one flat table for the manifest.
#[derive(Debug, Default)]
pub struct Resolved(Map<String, Value>);

impl Resolved {
    pub fn add<T: Serialize>(&mut self, group: &T) {
        if let Ok(Value::Object(map)) = serde_json::to_value(group) {
            for (k, v) in map {
                if !v.is_null() {
                    self.0.insert(k, v);
                }
            }
        }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        if let Ok(v) = serde_json::to_value(value) {
            self.0.insert(key.to_owned(), v);
        }
    }

    pub fn into_map(self) -> Map<String, Value> {
        self.0
    }
}
