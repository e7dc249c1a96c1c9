use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("insufficient depth: {requested} coefficients needed, {available} materialized")]
    InsufficientDepth { requested: usize, available: usize },

    #[error("depth cap exceeded: requested depth {requested}, achievable depth {achievable} under a {bit_cap}-bit coefficient cap")]
    DepthCapExceeded {
        requested: usize,
        achievable: usize,
        bit_cap: u64,
    },

    #[error("precision unavailable: {0}")]
    PrecisionUnavailable(String),

    #[error("box size {size} exceeds the configured maximum {max}")]
    BoxTooLarge { size: usize, max: usize },

    #[error("energy is an eigenvalue of the box [{x1}, {x2}]")]
    SingularBox { x1: i64, x2: i64 },

    #[error("near-singular box: condition number {condition:.3e} exceeds {limit:.1e}")]
    NearSingular { condition: f64, limit: f64 },

    #[error("degenerate node pair ({i}, {j}): cosines coincide to working precision")]
    DegenerateNodePair { i: i64, j: i64 },

    #[error("eigenvector is not localized: participation ratio {participation:.1} exceeds {limit:.1}")]
    NotLocalized { participation: f64, limit: f64 },

    #[error("eigensolver failed to converge for eigenvalue index {0}")]
    Convergence(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
