use alloc::string::String;

/// Errors produced by the localization core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid node pair ({a}, {b}) for a network with N = {n}")]
    InvalidPair { a: usize, b: usize, n: usize },
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("invalid parameter vector: {0}")]
    InvalidTheta(String),
    #[error("singular geometry: nodes {a} and {b} coincide")]
    SingularGeometry { a: usize, b: usize },
    #[error("covariance structure is not positive definite")]
    InvalidQ,
    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("entropy bound infeasible: (1 - eps_bound) * n = {0} must exceed 1")]
    InfeasibleBound(f64),
    #[error("invalid solver settings: {0}")]
    InvalidSettings(String),
    #[error("unsupported technique: {0}")]
    UnsupportedTechnique(String),
    #[error("underdetermined system: {rows} equations for {unknowns} unknowns")]
    Underdetermined { rows: usize, unknowns: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("index {index} out of range (count {count})")]
    IndexOutOfRange { index: usize, count: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
