use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A bracketing root finder was handed an interval without a sign change.
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// An iterative solver stopped before meeting its tolerance.
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// A periodic-orbit search stopped at its iteration cap. The best iterate is kept.
    #[error("orbit search for ({p},{q}) did not converge, residual {residual:e}")]
    OrbitNotConverged {
        p: u32,
        q: u32,
        residual: f64,
        best: Vec<f64>,
    },

    /// A least-squares design matrix is too ill-conditioned to trust.
    #[error("ill-conditioned fit (condition number {condition:e}); narrow the rotation-number range or lower K")]
    IllConditioned { condition: f64 },

    /// A table description violates strict convexity.
    #[error("table is not strictly convex: {0}")]
    NotConvex(String),

    /// A table description or run configuration is malformed.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
