use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub role: String,
    /// File path, or `builtin:<name>` for generated datasets.
    pub source: String,
    pub sha256: Option<String>,
    pub bytes: Option<u64>,
}

/// Wall-clock seconds per pipeline stage; stages a subcommand does not run
/// stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub load: f64,
    pub aggregation: Option<f64>,
    pub golf: Option<f64>,
    pub selection: Option<f64>,
    pub training: Option<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Fully resolved settings; passing this file back with `--config`
    /// repeats the run.
    pub config: Map<String, Value>,
    pub inputs: Vec<InputRecord>,
    pub artifacts: Vec<PathBuf>,
    pub timings: StageTimings,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        RunManifest {
            tool: "golf-dns".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            config: Map::new(),
            inputs: Vec::new(),
            artifacts: Vec::new(),
            timings: StageTimings::default(),
            warnings: Vec::new(),
        }
    }

    pub fn add_input_file(&mut self, role: &str, path: &Path) -> Result<(), CliError> {
        let bytes =
            fs::read(path).map_err(|e| CliError::format(format!("{}: {e}", path.display())))?;
        self.inputs.push(InputRecord {
            role: role.into(),
            source: path.display().to_string(),
            sha256: Some(sha256_hex(&bytes)),
            bytes: Some(bytes.len() as u64),
        });
        Ok(())
    }

    pub fn add_builtin(&mut self, role: &str, name: &str) {
        self.inputs.push(InputRecord {
            role: role.into(),
            source: format!("builtin:{name}"),
            sha256: None,
            bytes: None,
        });
    }

    /// Writes `contents` to `path` and records it as an artifact.
    pub fn write_artifact(&mut self, path: &Path, contents: &str) -> Result<(), CliError> {
        fs::write(path, contents)
            .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
        self.artifacts.push(path.to_owned());
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n")
            .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Manifest location: explicit path, else next to the primary output
/// (`labels.json` -> `labels.manifest.json`), else
/// `golf-dns-<subcommand>.manifest.json` in the working directory.
pub fn manifest_path(explicit: Option<&Path>, primary: Option<&Path>, subcommand: &str) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_owned();
    }
    match primary {
        Some(out) => {
            let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("output");
            out.with_file_name(format!("{stem}.manifest.json"))
        }
        None => PathBuf::from(format!("golf-dns-{subcommand}.manifest.json")),
    }
}

/// Times a closure, returning its result and the elapsed seconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64())
}
