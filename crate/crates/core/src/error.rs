use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid potential: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty grid")]
    EmptyGrid,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("insufficient range: {0}")]
    InsufficientRange(String),

    #[error("infeasible fit: {0}")]
    Infeasible(String),

    #[error("spectral truncation too coarse for t = {t}: e^(-t(λ_k-λ_0)) = {estimate:e}")]
    KernelTruncation { t: f64, estimate: f64 },

    #[error("x-grid spacing {grid} does not match kernel step {kernel}")]
    SpacingMismatch { grid: f64, kernel: f64 },

    #[error("noise path does not match run: {0}")]
    NoiseMismatch(String),

    #[error("{needed} replicas needed for tolerance {tol}, got {got}")]
    InsufficientReplicas { needed: usize, got: usize, tol: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(xs: &[f64], what: &'static str) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
