use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge {edge} joins two vertices of the same parity")]
    NonBipartite { edge: String },
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("opposite of edge {edge} is inconsistent")]
    BrokenOpposite { edge: String },
    #[error("graph is disconnected: vertex {vertex} is unreachable")]
    Disconnected { vertex: String },
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("power iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("grading mismatch: {left} vs {right}")]
    GradingMismatch { left: usize, right: usize },
    #[error("malformed word for grading {k}: {reason}")]
    MalformedWord { k: usize, reason: String },
    #[error("word is not a path: {0}")]
    NotAPath(String),
    #[error("series has a constant term, degree inverse undefined")]
    ConstantTerm,
    #[error("image of edge {edge} does not run between its endpoints")]
    IncompatibleImage { edge: String },
    #[error("word of length {len} exceeds the hard limit {limit}")]
    WordTooLong { len: usize, limit: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("perturbation too large: degree-0 chain proxy {xi:.4} is not below 1")]
    PerturbationTooLarge { xi: f64 },
    #[error("fixed point iteration did not converge in {iterations} steps (last delta {last:e})")]
    FixedPointNoConvergence { iterations: usize, last: f64 },
    #[error("inverse iteration diverged at step {step}")]
    Divergence { step: usize, history: Vec<f64> },
    #[error("invalid document: {0}")]
    Document(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
