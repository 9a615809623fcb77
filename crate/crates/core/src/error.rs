use std::path::PathBuf;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("rank deficient input: numerical rank {rank} < {expected} columns")]
    Rank { rank: usize, expected: usize },

    #[error("numerical failure in {context}: residual {residual:e}")]
    Numerical { context: String, residual: f64 },

    #[error("flow diverged at t = {time} (Frobenius norm {norm:e})")]
    Divergence { time: f64, norm: f64 },

    #[error("rendering error: {0}")]
    Render(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
