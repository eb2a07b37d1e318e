use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the tensor algebra, the Krylov processes and the
/// imaging pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid start tensor: {0}")]
    InvalidStart(&'static str),

    #[error("singular projected system: {0}")]
    Singular(String),

    #[error("cannot extend a decomposition that broke down at step {step}")]
    Extension { step: usize },

    #[error("discrepancy bound {eps:e} is not below the data norm {norm:e}")]
    Infeasible { eps: f64, norm: f64 },

    #[error("undefined metric: {0}")]
    Metric(&'static str),

    #[error("non-finite value in input data")]
    NonFinite,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}
