use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("step budget of {max_steps} exceeded at t = {t}")]
    StepBudgetExceeded { max_steps: usize, t: f64 },

    #[error("non-finite state encountered at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("quadrature on [{a}, {b}] did not reach tolerance {tol} (estimate {estimate:e})")]
    ToleranceNotMet {
        a: f64,
        b: f64,
        tol: f64,
        estimate: f64,
    },

    #[error("Picard iteration did not converge after {iterations} iterations (last difference {last_diff:e})")]
    NoConvergence { iterations: usize, last_diff: f64 },

    #[error("Jacobian of the perturbation is unavailable (smoothness order 0 and no finite-difference fallback)")]
    MissingJacobian,

    #[error(
        "damped Newton iteration diverged after {iterations} iterations (residual {residual:e})"
    )]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("certificate rejected: {inequality} violated ({detail})")]
    CertificateRejected { inequality: String, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
