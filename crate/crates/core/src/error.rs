use thiserror::Error;

/// Errors raised by the leafwise solvers and scenario drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("fields live on different grids")]
    GridMismatch,

    /// The positive potential lost positivity (maximum principle violated).
    #[error("field is not positive: min {min} at node {index}")]
    NonPositiveField { min: f64, index: usize },

    #[error("singular tridiagonal system at row {row} (pivot {pivot:e})")]
    SolverSingular { row: usize, pivot: f64 },

    #[error("explicit step violates stability bound: dt {dt:e} > {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("velocity field is not a gradient: circulation {circulation:e} exceeds {tolerance:e}")]
    NotConservative { circulation: f64, tolerance: f64 },

    #[error("eigen-solver did not converge after {iterations} iterations (ritz values {ritz:?})")]
    ConvergenceFailure { iterations: usize, ritz: Vec<f64> },

    #[error("inconsistent extrinsic data: {0}")]
    InconsistentData(String),

    #[error("degenerate profile: {0}")]
    ProfileDegenerate(String),

    #[error("spectral gap {gap:e} too small for rate reporting")]
    GapTooSmall { gap: f64 },

    #[error("run not converged: deviation {deviation:e} > {tolerance:e}")]
    NotConverged { deviation: f64, tolerance: f64 },

    #[error("step failed at t = {t}: {source}")]
    StepFailed {
        t: f64,
        #[source]
        source: Box<FlowError>,
    },
}

impl FlowError {
    /// Innermost error, unwrapping any `StepFailed` layers.
    pub fn root(&self) -> &FlowError {
        match self {
            FlowError::StepFailed { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, FlowError>;
