//! Error type shared across the pipeline.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A line of an asset file could not be parsed.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// An asset parsed but violates an invariant (duplicate id, unknown
    /// topic reference, ...).
    #[error("validation: {0}")]
    Validation(String),

    /// Domain string could not be normalized.
    #[error("cannot normalize {0:?}: empty host")]
    Normalization(String),

    /// The fallback classification provider failed for a domain.
    #[error("classification of {domain:?} failed: {message}")]
    Classification { domain: String, message: String },

    /// Input records were rejected during ingestion.
    #[error("ingestion: {0}")]
    Ingestion(String),

    /// Invalid configuration value or missing required config.
    #[error("config: {0}")]
    Config(String),

    /// An operation was asked for something outside its domain
    /// (e.g. a random draw from an empty taxonomy).
    #[error("domain: {0}")]
    Domain(String),

    /// Simulation asked for an epoch without a computed profile, or a week
    /// before the disclosure window is full.
    #[error("simulation: {0}")]
    Simulation(String),

    /// Synthetic trace generation could not realize the requested profiles.
    #[error("generation: {0}")]
    Generation(String),

    /// Attack scoring received inconsistent inputs.
    #[error("evaluation: {0}")]
    Evaluation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
