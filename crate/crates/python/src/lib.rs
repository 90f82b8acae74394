//! Python bindings: graphs, leading forests, label selection and the GCN
//! experiment driver.

use golf_dns::gcn::{
    run_experiment as run_experiment_rs, ExperimentConfig, SplitMode, TrainConfig,
};
use golf_dns::{Error, GroupMode, SelectionConfig};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Contract(_) | Error::Divergence { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Round-trips a serializable value through `json.loads`.
fn to_python<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Graph", frozen)]
struct PyGraph {
    inner: golf_dns::Graph,
}

#[pymethods]
impl PyGraph {
    /// Builds a graph from an edge list and a feature matrix (list of rows).
    #[new]
    #[pyo3(signature = (num_nodes, edges, features, labels=None, name=None))]
    fn new(
        num_nodes: usize,
        edges: Vec<(usize, usize)>,
        features: Vec<Vec<f32>>,
        labels: Option<Vec<u32>>,
        name: Option<String>,
    ) -> PyResult<Self> {
        if features.len() != num_nodes {
            return Err(PyValueError::new_err(format!(
                "{} feature rows for {num_nodes} nodes",
                features.len()
            )));
        }
        let dim = features.first().map_or(0, Vec::len);
        if features.iter().any(|row| row.len() != dim) {
            return Err(PyValueError::new_err("feature rows differ in length"));
        }
        let classes = labels
            .as_ref()
            .and_then(|l| l.iter().max())
            .map_or(0, |&c| c as usize + 1);
        let flat = features.into_iter().flatten().collect();
        let mut graph = golf_dns::Graph::from_edges(num_nodes, &edges, flat, dim, labels, classes)
            .map_err(to_py)?;
        if let Some(name) = name {
            graph = graph.with_name(name);
        }
        Ok(PyGraph { inner: graph })
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.num_nodes()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[getter]
    fn labels(&self) -> Option<Vec<u32>> {
        self.inner.labels().map(<[u32]>::to_vec)
    }

    fn neighbors(&self, node: usize) -> PyResult<Vec<u32>> {
        if node >= self.inner.num_nodes() {
            return Err(PyValueError::new_err(format!("node {node} out of range")));
        }
        Ok(self.inner.neighbors(node).to_vec())
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_python(py, &self.inner.stats())
    }

    /// Invariant violations, empty for a well-formed graph.
    fn validate(&self) -> Vec<String> {
        self.inner
            .validate()
            .iter()
            .map(|v| format!("{v:?}"))
            .collect()
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        golf_dns::io::save_container(&self.inner, path).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(name={:?}, nodes={}, edges={})",
            self.inner.name(),
            self.inner.num_nodes(),
            self.inner.num_edges()
        )
    }
}

#[pyclass(name = "LeadingForest", frozen)]
struct PyForest {
    inner: golf_dns::LeadingForest,
}

#[pymethods]
impl PyForest {
    #[getter]
    fn parent(&self) -> Vec<Option<usize>> {
        self.inner.parent.clone()
    }

    #[getter]
    fn rho(&self) -> Vec<f64> {
        self.inner.rho.clone()
    }

    #[getter]
    fn delta(&self) -> Vec<f64> {
        self.inner.delta.clone()
    }

    #[getter]
    fn gamma(&self) -> Vec<f64> {
        self.inner.gamma.clone()
    }

    #[getter]
    fn layer(&self) -> Vec<u32> {
        self.inner.layer.clone()
    }

    #[getter]
    fn tree_id(&self) -> Vec<usize> {
        self.inner.tree_id.clone()
    }

    #[getter]
    fn roots(&self) -> Vec<usize> {
        self.inner.roots.clone()
    }

    #[getter]
    fn natural_roots(&self) -> usize {
        self.inner.natural_roots
    }

    fn num_trees(&self) -> usize {
        self.inner.num_trees()
    }

    fn __repr__(&self) -> String {
        format!(
            "LeadingForest(nodes={}, trees={}, max_layer={})",
            self.inner.num_nodes(),
            self.inner.num_trees(),
            self.inner.max_layer()
        )
    }
}

#[pyclass(name = "LabelSet", frozen)]
struct PyLabelSet {
    #[pyo3(get)]
    typical: Vec<usize>,
    #[pyo3(get)]
    divergent: Vec<usize>,
    #[pyo3(get)]
    objective: f64,
}

#[pymethods]
impl PyLabelSet {
    /// All selected nodes, ascending.
    fn nodes(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .typical
            .iter()
            .chain(&self.divergent)
            .copied()
            .collect();
        all.sort_unstable();
        all
    }

    fn __len__(&self) -> usize {
        self.typical.len() + self.divergent.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "LabelSet(nodes={:?}, objective={})",
            self.nodes(),
            self.objective
        )
    }
}

#[pyfunction]
fn karate_club() -> PyGraph {
    PyGraph {
        inner: golf_dns::datasets::karate_club(),
    }
}

/// Loads a graph container, or an edge list when `features` is given.
#[pyfunction]
#[pyo3(signature = (path, features=None))]
fn load(path: std::path::PathBuf, features: Option<std::path::PathBuf>) -> PyResult<PyGraph> {
    let inner = match features {
        Some(f) => golf_dns::io::load_edge_list(&path, &f),
        None => golf_dns::io::load_container(&path),
    }
    .map_err(to_py)?;
    Ok(PyGraph { inner })
}

#[pyfunction]
#[pyo3(signature = (graph, sigma=1.0, trees=None))]
fn build_forest(graph: &PyGraph, sigma: f64, trees: Option<usize>) -> PyResult<PyForest> {
    let trees = trees.unwrap_or_else(|| SelectionConfig::for_graph(&graph.inner, 1).trees);
    let inner = golf_dns::build_forest(&graph.inner, sigma, trees).map_err(to_py)?;
    Ok(PyForest { inner })
}

/// Selects `budget` labels. Unset parameters take the graph defaults.
#[pyfunction]
#[pyo3(signature = (graph, budget, *, alpha=None, k=None, sigma=None, trees=None, oracle_groups=false, exact=false))]
#[allow(clippy::too_many_arguments)]
fn select(
    graph: &PyGraph,
    budget: usize,
    alpha: Option<f64>,
    k: Option<usize>,
    sigma: Option<f64>,
    trees: Option<usize>,
    oracle_groups: bool,
    exact: bool,
) -> PyResult<PyLabelSet> {
    let defaults = SelectionConfig::for_graph(&graph.inner, budget);
    let config = SelectionConfig {
        alpha: alpha.unwrap_or(defaults.alpha),
        min_per_group: k.unwrap_or(defaults.min_per_group),
        sigma: sigma.unwrap_or(defaults.sigma),
        trees: trees.unwrap_or(defaults.trees),
        group_mode: if oracle_groups {
            GroupMode::OracleLabels
        } else {
            GroupMode::TreeProxy
        },
        budget,
    };
    let forest = golf_dns::build_forest(&graph.inner, config.sigma, config.trees).map_err(to_py)?;
    let labels = if exact {
        golf_dns::brute_force_select(&forest, &config, graph.inner.labels())
    } else {
        golf_dns::select_labels(&forest, &config, graph.inner.labels())
    }
    .map_err(to_py)?;
    Ok(PyLabelSet {
        typical: labels.typical,
        divergent: labels.divergent,
        objective: labels.objective,
    })
}

/// Repeated GCN runs at one label rate; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (graph, rate, *, mode="random", runs=10, seed=0, epochs=None, test_size=1000, layers=None, jobs=None))]
#[allow(clippy::too_many_arguments)]
fn run_experiment<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    rate: f64,
    mode: &str,
    runs: usize,
    seed: u64,
    epochs: Option<usize>,
    test_size: usize,
    layers: Option<usize>,
    jobs: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let mode = match mode {
        "random" => SplitMode::Random,
        "dns" => SplitMode::Dns,
        other => {
            return Err(PyValueError::new_err(format!(
                "mode must be 'random' or 'dns', not {other:?}"
            )))
        }
    };
    let defaults = TrainConfig::default();
    let config = ExperimentConfig {
        rate,
        mode,
        runs,
        base_seed: seed,
        train: TrainConfig {
            epochs: epochs.unwrap_or(defaults.epochs),
            ..defaults
        },
        num_layers: layers,
        selection: None,
        test_size,
        stratified: false,
        jobs,
    };
    let report = py
        .detach(|| run_experiment_rs(&graph.inner, &config))
        .map_err(to_py)?;
    let dict = to_python(py, &report)?;
    dict.cast::<PyDict>()?
        .set_item("accuracies", report.accuracies())?;
    Ok(dict)
}

#[pymodule(name = "golf_dns")]
fn golf_dns_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyForest>()?;
    m.add_class::<PyLabelSet>()?;
    m.add_function(wrap_pyfunction!(karate_club, m)?)?;
    m.add_function(wrap_pyfunction!(load, m)?)?;
    m.add_function(wrap_pyfunction!(build_forest, m)?)?;
    m.add_function(wrap_pyfunction!(select, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
