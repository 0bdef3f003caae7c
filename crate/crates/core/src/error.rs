use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("mesh: {0}")]
    Mesh(String),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("non-physical cell solution at phi={phi}, nu={nu}: {reason}")]
    NonPhysical { phi: f64, nu: f64, reason: String },

    #[error("surrogate input {name}={value} outside the trusted range [{lo}, {hi}]")]
    Extrapolation {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("training diverged for {output}: non-finite loss at epoch {epoch} (lr {lr})")]
    Diverged {
        output: String,
        epoch: usize,
        lr: f64,
    },

    #[error("bundle format: {0}")]
    Format(String),

    #[error("tangent lost positive definiteness: {0}")]
    Indefinite(String),

    #[error("increment rejected at quadrature point {point}: {reason}")]
    Rejected { point: usize, reason: String },

    #[error("{context}: {source}")]
    Io {
        context: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),

    /// An acceptance gate was not met; the computed artifact is still valid.
    #[error("gate failed: {0}")]
    Gate(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            context: path.into(),
            source,
        }
    }
}
