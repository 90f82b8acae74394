use std::path::PathBuf;

use thiserror::Error;

use crate::graph::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("malformed container: {0}")]
    Container(String),

    #[error("graph failed validation: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error(
        "infeasible constraint: k={k} x {groups} groups = {required} exceeds budget l={budget}"
    )]
    Infeasible {
        k: usize,
        groups: usize,
        required: usize,
        budget: usize,
    },

    #[error("instance too large for exhaustive search: {assignments} assignments (limit {limit})")]
    SizeGuard { assignments: f64, limit: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
