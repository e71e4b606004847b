use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no lattice node has the required clearance from the shape boundary")]
    EmptyInterior,
    #[error("invalid shape: {0}")]
    BadShape(String),
    #[error("point ({x}, {y}) lies outside the shape")]
    OutsideDomain { x: f64, y: f64 },
    #[error("operation not supported for shape kind `{0}`")]
    UnsupportedShape(&'static str),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Format { path: PathBuf, line: usize, msg: String },
    #[error("seed set is empty")]
    EmptySeedSet,
    #[error("inner distance routes disagree by {gap} (allowed {allowed})")]
    CrossCheckFailure { gap: f64, allowed: f64 },
    #[error("function vanishes identically")]
    ZeroFunction,
    #[error("exponent p = {0} must lie in (1, inf)")]
    BadP(f64),
    #[error("generalized inball covers every interior node; no sign-changing minimizer exists")]
    StadiumDomain,
    #[error("field has Lipschitz constant {0}, expected 1")]
    NotNormalized(f64),
    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),
    #[error("measure has negative weight {weight} at node {node}")]
    SignedMeasure { node: usize, weight: f64 },
    #[error("flow solver failed: {0}")]
    SolverFailure(String),
    #[error("measures carry different total mass ({0} vs {1})")]
    UnbalancedMass(f64, f64),
    #[error("dual functional vanishes on this measure")]
    ZeroDual,
    #[error("field and domain size mismatch: {expected} nodes expected, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Format { path: path.into(), line, msg: msg.into() }
    }
}
