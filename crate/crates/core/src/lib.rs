//! Self-supervised shadow removal toolkit.
//!
//! A two-branch residual generator maps differently-shadowed views of a scene
//! to a common shadow-free output, while a Wasserstein critic with gradient
//! penalty pulls that output toward the style of an unpaired pool of
//! shadow-free reference images. The crate bundles the full pipeline: dataset
//! ingestion and pairing, Otsu shadow masking, the generator/critic networks
//! with a tape-based autodiff engine, all training losses, the optimization
//! loop, the Lab-space evaluation protocol, and FLOPs/parameter profiling.

pub mod config;
pub mod data;
pub mod evaluation;
pub mod losses;
pub mod masking;
pub mod networks;
pub mod nn;
pub mod profiling;
pub mod tape;
pub mod tensor;
pub mod training;

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Error type shared by every module. The `class` string printed by the CLI
/// maps 1:1 onto these variants.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("record errors in {path}: {details}")]
    Records { path: PathBuf, details: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("backbone error: {0}")]
    Backbone(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("non-finite value: {0}")]
    Numeric(String),
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("image error at {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    /// Stable machine-parseable class name for CLI diagnostics.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Data(_) => "data",
            Error::Records { .. } => "records",
            Error::Shape(_) => "shape",
            Error::Backbone(_) => "backbone",
            Error::Checkpoint(_) => "checkpoint",
            Error::Numeric(_) => "numeric",
            Error::Io { .. } => "io",
            Error::Image { .. } => "image",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
