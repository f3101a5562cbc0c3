//! Error type shared by the geometry pipeline.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown manifold `{0}`")]
    UnknownManifold(String),

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("parameter out of range: {0}")]
    ParamRange(String),

    #[error("point outside chart domain: {0}")]
    OutsideDomain(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("resolution unsupported: {0}")]
    Resolution(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
