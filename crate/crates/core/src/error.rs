use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An operator was routed to the wrong application path, e.g. a geometric
    /// op handed to the photometric applier.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("placement rejected: only {on_canvas:.3} of the silhouette lies on the canvas")]
    PlacementRejected { on_canvas: f64 },

    #[error("generation failed for scene {index}: {reason}")]
    Generation { index: usize, reason: String },

    #[error("seed asset `{asset}`: {reason}")]
    Ingestion { asset: String, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("writing scene {index} to {}: {reason}", path.display())]
    SceneWrite {
        index: usize,
        path: PathBuf,
        reason: String,
    },

    #[error("manifest {}: {reason}", path.display())]
    Manifest { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
