use thiserror::Error;

/// Errors raised by the solvers and model constructors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("weight does not satisfy the sign condition (a2): {0}")]
    NotA2(String),

    #[error("mesh too coarse: {points} points, need at least {required}")]
    MeshTooCoarse { points: usize, required: usize },

    #[error("quadrature budget exhausted on [{lo}, {hi}] (error estimate {estimate:e})")]
    BudgetExhausted { lo: f64, hi: f64, estimate: f64 },

    #[error("step size underflow at t = {at}")]
    StepUnderflow { at: f64 },

    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),

    #[error("no bracket found: {0}")]
    BracketNotFound(String),

    #[error("root refinement failed: {0}")]
    RootNotConverged(String),

    #[error("continuation start not converged (|theta(1)| = {residual:e})")]
    StartNotConverged { residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
