use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("r = {r} lies outside the sampled range [{lo}, {hi}]")]
    Extrapolation { r: f64, lo: f64, hi: f64 },
    #[error("integral diverges on [{a:e}, {b:e}]: {detail}")]
    Divergence { a: f64, b: f64, detail: String },
    #[error("tail integral of 1/(aS) does not converge: {0}")]
    Nonparabolicity(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("hypothesis fails: {0}")]
    Hypothesis(String),
    #[error("could not bracket the eigenvalue: {0}")]
    Bracket(String),
    #[error("solution loses positivity at r = {r:e}")]
    Positivity { r: f64 },
    #[error("auxiliary solution is not monotone on the requested range")]
    Monotone,
    #[error("matching failed: {0}")]
    Match(String),
    #[error("supersolution check fails at r = {r:e}: residual {residual:e} exceeds {bound:e}")]
    Verification { r: f64, residual: f64, bound: f64 },
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("certificate mismatch for {condition}: expected {expected}, observed {observed}")]
    Certificate {
        condition: String,
        expected: String,
        observed: String,
    },
    #[error("ill-conditioned quotient: {0}")]
    Conditioning(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid profile: {0}")]
    Profile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
