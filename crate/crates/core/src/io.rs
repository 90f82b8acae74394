//! Dataset loading and saving.
//!
//! Two on-disk formats are supported:
//!
//! * **Container** (`.golf`): one line of compact JSON ([`ContainerHeader`])
//!   terminated by `\n`, then `num_nodes * feature_dim` little-endian `f32`
//!   feature values in row-major order, then `num_edges` pairs of
//!   little-endian `u32` node ids (`u < v`, ascending), then `num_nodes`
//!   little-endian `u32` labels when `has_labels` is set. Nothing may follow.
//! * **Edge list + TSV**: a whitespace-delimited file with two integer
//!   columns per edge (`#` starts a comment), and a tab-separated feature
//!   file whose header row is `id`, optionally `label`, then one column per
//!   feature. Every id in `0..rows` must appear exactly once.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

pub const CONTAINER_FORMAT: &str = "golf-graph";
pub const CONTAINER_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContainerHeader {
    pub format: String,
    pub version: u32,
    pub name: String,
    pub num_nodes: usize,
    pub feature_dim: usize,
    pub num_classes: usize,
    pub num_edges: usize,
    /// Edge records in the upstream source before deduplication.
    pub raw_edges: usize,
    pub has_labels: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSource {
    Container(PathBuf),
    EdgeList { edges: PathBuf, features: PathBuf },
}

/// Environment variable naming the directory searched for `<name>.golf`.
pub const DATA_DIR_ENV: &str = "GOLF_DATA_DIR";

/// Locates the container for a named dataset: `$GOLF_DATA_DIR/<name>.golf`
/// if the variable is set, then `data/<name>.golf` under the working
/// directory and each of its ancestors.
pub fn find_dataset(name: &str) -> Option<PathBuf> {
    let file = format!("{}.golf", name.to_ascii_lowercase());
    if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
        let candidate = PathBuf::from(dir).join(&file);
        if candidate.is_file() {
            return Some(candidate);
        }
    }
    let cwd = std::env::current_dir().ok()?;
    cwd.ancestors()
        .map(|dir| dir.join("data").join(&file))
        .find(|candidate| candidate.is_file())
}

pub fn load_dataset(source: &DatasetSource) -> Result<Graph> {
    match source {
        DatasetSource::Container(path) => load_container(path),
        DatasetSource::EdgeList { edges, features } => load_edge_list(edges, features),
    }
}

pub fn load_container(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let graph = read_container(BufReader::new(file))?;
    if graph.name().is_empty() {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        return Ok(graph.with_name(stem));
    }
    Ok(graph)
}

pub fn save_container(graph: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    write_container(graph, &mut writer).map_err(|e| Error::io(path, e))?;
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn write_container<W: Write>(graph: &Graph, mut w: W) -> std::io::Result<()> {
    let header = ContainerHeader {
        format: CONTAINER_FORMAT.to_owned(),
        version: CONTAINER_VERSION,
        name: graph.name().to_owned(),
        num_nodes: graph.num_nodes(),
        feature_dim: graph.feature_dim(),
        num_classes: graph.num_classes(),
        num_edges: graph.num_edges(),
        raw_edges: graph.raw_edge_count(),
        has_labels: graph.labels().is_some(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for &x in graph.features() {
        w.write_all(&x.to_le_bytes())?;
    }
    for (u, v) in graph.edges() {
        w.write_all(&(u as u32).to_le_bytes())?;
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    if let Some(labels) = graph.labels() {
        for &y in labels {
            w.write_all(&y.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_container<R: BufRead>(mut r: R) -> Result<Graph> {
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)
        .map_err(|e| Error::Container(format!("reading header: {e}")))?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Container("missing header terminator".into()));
    }
    let header: ContainerHeader = serde_json::from_slice(&line[..line.len() - 1])
        .map_err(|e| Error::Container(format!("bad header: {e}")))?;
    if header.format != CONTAINER_FORMAT {
        return Err(Error::Container(format!(
            "unknown format {:?}",
            header.format
        )));
    }
    if header.version != CONTAINER_VERSION {
        return Err(Error::Container(format!(
            "unsupported version {}",
            header.version
        )));
    }

    let n = header.num_nodes;
    let mut features = vec![0f32; n * header.feature_dim];
    let mut buf = [0u8; 4];
    let mut next_u32 = |r: &mut R, what: &str| -> Result<[u8; 4]> {
        r.read_exact(&mut buf)
            .map_err(|_| Error::Container(format!("truncated {what} section")))?;
        Ok(buf)
    };
    for x in features.iter_mut() {
        *x = f32::from_le_bytes(next_u32(&mut r, "feature")?);
    }
    let mut edges = Vec::with_capacity(header.num_edges);
    for _ in 0..header.num_edges {
        let u = u32::from_le_bytes(next_u32(&mut r, "edge")?) as usize;
        let v = u32::from_le_bytes(next_u32(&mut r, "edge")?) as usize;
        edges.push((u, v));
    }
    let labels = if header.has_labels {
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            labels.push(u32::from_le_bytes(next_u32(&mut r, "label")?));
        }
        Some(labels)
    } else {
        None
    };
    let mut rest = [0u8; 1];
    if r.read(&mut rest)
        .map_err(|e| Error::Container(e.to_string()))?
        != 0
    {
        return Err(Error::Container(
            "trailing bytes after label section".into(),
        ));
    }

    let graph = Graph::from_edges(
        n,
        &edges,
        features,
        header.feature_dim,
        labels,
        header.num_classes,
    )?;
    if graph.num_edges() != header.num_edges {
        return Err(Error::Container(format!(
            "header declares {} edges but the edge section deduplicates to {}",
            header.num_edges,
            graph.num_edges()
        )));
    }
    Ok(graph
        .with_raw_edge_count(header.raw_edges)
        .with_name(header.name))
}

/// Loads the edge-list + TSV pair described in the module docs.
pub fn load_edge_list(edges_path: &Path, features_path: &Path) -> Result<Graph> {
    let table = read_feature_tsv(features_path)?;
    let n = table.rows;

    let file = File::open(edges_path).map_err(|e| Error::io(edges_path, e))?;
    let mut edges = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(edges_path, e))?;
        let lineno = idx + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(format_error(
                edges_path,
                lineno,
                format!("expected 2 columns, found {}", fields.len()),
            ));
        }
        let mut ends = [0usize; 2];
        for (slot, field) in ends.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| {
                format_error(edges_path, lineno, format!("not a node id: {field:?}"))
            })?;
            if *slot >= n {
                return Err(format_error(
                    edges_path,
                    lineno,
                    format!("node {slot} outside [0, {n}) declared by the feature file"),
                ));
            }
        }
        edges.push((ends[0], ends[1]));
    }

    let num_classes = table
        .labels
        .as_ref()
        .map(|l| l.iter().max().map_or(0, |&m| m as usize + 1))
        .unwrap_or(0);
    let name = edges_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_owned();
    Ok(Graph::from_edges(
        n,
        &edges,
        table.features,
        table.dim,
        table.labels,
        num_classes,
    )?
    .with_name(name))
}

struct FeatureTable {
    rows: usize,
    dim: usize,
    features: Vec<f32>,
    labels: Option<Vec<u32>>,
}

fn read_feature_tsv(path: &Path) -> Result<FeatureTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::io(path, e))?,
        None => return Err(format_error(path, 1, "empty feature file".into())),
    };
    let columns: Vec<&str> = header.split('\t').map(str::trim).collect();
    if columns.first() != Some(&"id") {
        return Err(format_error(
            path,
            1,
            "header must start with an `id` column".into(),
        ));
    }
    let has_labels = columns.get(1) == Some(&"label");
    let skip = if has_labels { 2 } else { 1 };
    let dim = columns.len() - skip;

    let mut rows: Vec<(usize, Vec<f32>, u32)> = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != columns.len() {
            return Err(format_error(
                path,
                lineno,
                format!("expected {} columns, found {}", columns.len(), fields.len()),
            ));
        }
        let id: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| format_error(path, lineno, format!("bad id {:?}", fields[0])))?;
        let label = if has_labels {
            fields[1]
                .trim()
                .parse()
                .map_err(|_| format_error(path, lineno, format!("bad label {:?}", fields[1])))?
        } else {
            0
        };
        let values = fields[skip..]
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f32>()
                    .map_err(|_| format_error(path, lineno, format!("bad feature value {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((id, values, label));
    }

    let n = rows.len();
    let mut features = vec![0f32; n * dim];
    let mut labels = vec![0u32; n];
    let mut seen = vec![false; n];
    for (row_idx, (id, values, label)) in rows.into_iter().enumerate() {
        let lineno = row_idx + 2;
        if id >= n || seen[id] {
            return Err(format_error(
                path,
                lineno,
                format!("id {id} is duplicated or outside [0, {n})"),
            ));
        }
        seen[id] = true;
        features[id * dim..(id + 1) * dim].copy_from_slice(&values);
        labels[id] = label;
    }
    Ok(FeatureTable {
        rows: n,
        dim,
        features,
        labels: has_labels.then_some(labels),
    })
}

fn format_error(path: &Path, line: usize, message: String) -> Error {
    Error::Format {
        path: path.to_owned(),
        line,
        message,
    }
}
