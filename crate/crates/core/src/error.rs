use thiserror::Error;

/// Errors produced by the geometry, solver and data layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Cholesky factorization broke down at the given leading minor (0-based).
    #[error("factorization failed at leading minor {index} (pivot {pivot:e})")]
    Factorization { index: usize, pivot: f64 },

    #[error("metric is not positive definite (smallest eigenvalue {smallest_eigenvalue:e})")]
    MetricNotPositiveDefinite { smallest_eigenvalue: f64 },

    #[error("metric produced non-finite values")]
    NonFiniteMetric,

    #[error("metric failure at knot {knot} (t = {t}): {message}")]
    MetricFailure { knot: usize, t: f64, message: String },

    #[error("metric failure along curve at t = {t}: {message}")]
    CurveEvaluation { t: f64, message: String },

    #[error("integrator step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("graph is disconnected: node {node} unreachable")]
    DisconnectedGraph { node: String },

    #[error("generator: {0}")]
    Generator(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
