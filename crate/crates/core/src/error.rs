use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid network size {0}: at least 2 nodes are required")]
    InvalidSize(usize),
    #[error("invalid edge ({0}, {1}) for a network of {2} nodes")]
    InvalidEdge(usize, usize, usize),
    #[error("invalid tau {tau}: must lie in [2, {n}]")]
    InvalidTau { tau: usize, n: usize },
    #[error("path cap {cap} cannot cover all {n} nodes (need at least {min})")]
    InfeasibleCap { cap: usize, n: usize, min: usize },
    #[error("paths of {tau} vertices do not cover node {node}")]
    UncoveredNode { node: usize, tau: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("node index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("coupling coefficient for node {0} is zero")]
    SingularScaling(usize),
    #[error("start point violates the coupling constraint (residual {0:e})")]
    InfeasibleStart(f64),
    #[error("distribution support does not connect all nodes")]
    DisconnectedSupport,
    #[error("vector is not on the coupling subspace (residual {0:e})")]
    NotOnSubspace(f64),
    #[error("level set of node {0} is unbounded")]
    UnboundedRadius(usize),
    #[error("could not bracket the optimal multiplier")]
    NoBracket,
    #[error("trace never reached gap {0:e}")]
    NotReached(f64),
    #[error("enumeration of {0} paths exceeds the configured limit")]
    EnumerationTooLarge(usize),
    #[error("iterate norm {0:e} exceeded the divergence ceiling")]
    Diverged(f64),
    #[error("iteration cap {0} reached before convergence")]
    IterationCap(usize),
    #[error("distribution is not defined over the given network")]
    ForeignDistribution,
    #[error("{0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
