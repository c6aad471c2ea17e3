use thiserror::Error;

#[derive(Debug, Error)]
pub enum GcsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("set of {owner} is unbounded")]
    Unbounded { owner: String },

    #[error("set of {owner} is empty")]
    EmptySet { owner: String },

    #[error("invalid cost on {owner}: {reason}")]
    InvalidCost { owner: String, reason: String },

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("unknown edge `{0}`")]
    UnknownEdge(String),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("{which} point is not in the set of vertex `{vertex}`")]
    EndpointOutsideSet { which: &'static str, vertex: String },

    #[error("no edge from `{from}` to `{to}` at step {step}")]
    MissingEdge { step: usize, from: String, to: String },

    #[error("invalid walk: {0}")]
    InvalidWalk(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("enumeration cap of {cap} walks exceeded at K = {k}")]
    EnumerationCap { cap: usize, k: usize },

    #[error("sampling failed for {0}")]
    Sampling(String),

    #[error("bounds were synthesized for instance {expected}, but this instance hashes to {found}")]
    HashMismatch { expected: String, found: String },

    #[error("search failed: {0}")]
    SearchFailed(String),

    #[error("{file}: {message}")]
    Parse { file: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GcsError>;
