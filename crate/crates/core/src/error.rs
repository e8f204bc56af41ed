use thiserror::Error;

/// Errors raised by the solver suite.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid frequency vector: {0}")]
    InvalidFrequency(String),

    #[error("resonant frequency vector: omega . {nu:?} = 0")]
    ZeroDivisor { nu: Vec<i32> },

    #[error("search budget exceeded: {needed} points requested, cap is {cap}")]
    BudgetExceeded { needed: u128, cap: u128 },

    #[error("multi-index must be nonzero")]
    ZeroIndex,

    #[error("unknown standard frequency {0:?}")]
    UnknownName(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("conjugate symmetry violated: {0}")]
    SymmetryViolation(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("vanishing denominator at mode {nu:?}")]
    VanishingDenominator { nu: Vec<i32> },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("divergence detected at iteration {iteration} (residual {residual:e})")]
    Divergence { iteration: usize, residual: f64 },

    #[error("no sign change on [{lo}, {hi}]: gamma = ({gamma_lo:e}, {gamma_hi:e})")]
    NoSignChange {
        lo: f64,
        hi: f64,
        gamma_lo: f64,
        gamma_hi: f64,
    },

    #[error("divisor {divisor:e} too small for scale table of depth {depth}")]
    DivisorTooSmall { divisor: f64, depth: usize },

    #[error("cutoff depth {requested} exceeds table depth {available}")]
    DepthExceeded { requested: usize, available: usize },

    #[error("step rejected at t = {t}: per-step Newton failed")]
    StepRejected { t: f64 },

    #[error("trajectory blew up at t = {t} (|x| = {x:e})")]
    Blowup { t: f64, x: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
