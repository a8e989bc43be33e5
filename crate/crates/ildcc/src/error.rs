use thiserror::Error;

/// Errors produced by the deployment library.
#[derive(Debug, Error)]
pub enum Error {
    /// A vertex lies outside the grid bounds.
    #[error("vertex [{0}, {1}, {2}] is outside the grid")]
    VertexOutOfBounds(usize, usize, usize),

    /// An instance violates a structural invariant (duplicate vertices,
    /// wrong role counts, candidate/node overlap, ...).
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// No relay path exists between two vertices within the grid bounds.
    #[error("no feasible relay path between [{0:?}] and [{1:?}]")]
    NoRelayPath([usize; 3], [usize; 3]),

    /// A matrix handed to the eigensolver is not symmetric.
    #[error("matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),

    /// The eigensolver hit its sweep cap before reaching the tolerance.
    #[error("eigensolver did not converge within {0} sweeps")]
    NoConvergence(usize),

    /// A metric that requires a connected graph was asked of a
    /// disconnected one.
    #[error("graph is disconnected (algebraic connectivity below tolerance)")]
    Disconnected,

    /// A numeric argument is outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration file or value is unusable.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
