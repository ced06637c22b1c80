use std::path::PathBuf;

use thiserror::Error;

use crate::graph::VertexId;

/// Errors produced anywhere in the pipeline.
///
/// The variants are grouped by how a driver should react to them: input
/// problems (`Parse`, `Validation`), instances that cannot be solved
/// (`Infeasible`), and runs that did not settle (`NonConvergence`).
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("infeasible instance: client {client} cannot reach any facility")]
    Infeasible { client: VertexId },

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
