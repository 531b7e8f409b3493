use thiserror::Error;

/// Errors raised by the solvers and diagnostics in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("state outside model domain: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "linear stability violated: lambda = {lambda} exceeds 1/2 \
         (require dt <= dx^2/max{{2, 2d}}, i.e. dt <= {dt_max})"
    )]
    Stability { lambda: f64, dt_max: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("no convergence after {iterations} iterations (last difference {last_difference:e})")]
    NonConvergence {
        iterations: usize,
        last_difference: f64,
    },

    #[error("no sign change on [{lo}, {hi}]: phi(lo) = {f_lo:e}, phi(hi) = {f_hi:e}")]
    NoBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
