use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpdError {
    #[error("matrix is not positive definite (minimal eigenvalue {lambda_min:e})")]
    SingularMatrix { lambda_min: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{solver} did not reach tolerance {tolerance:e} in {iterations} iterations (residual {residual:e})")]
pub struct SolverDivergence {
    pub solver: &'static str,
    pub iterations: usize,
    pub residual: f64,
    pub tolerance: f64,
}

/// Failures of the time integrator. All of them leave the caller's last
/// valid state untouched.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("positivity lost at cell {cell:?}: minimal eigenvalue {lambda_min:e}")]
    PositivityLoss { cell: [usize; 3], lambda_min: f64 },
    #[error(transparent)]
    SolverDivergence(#[from] SolverDivergence),
    #[error("CFL number {cfl:.4} exceeds the limit {limit}")]
    CflViolation { cfl: f64, limit: f64 },
    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),
    #[error("inadmissible initial data at cell {cell:?}: minimal eigenvalue {lambda_min:e}")]
    InadmissibleInitialData { cell: [usize; 3], lambda_min: f64 },
    #[error("non-finite value in the {field} field")]
    NonFinite { field: &'static str },
}

/// A [`StepError`] tagged with the step at which it happened.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("step {step}: {source}")]
pub struct RunError {
    pub step: u64,
    #[source]
    pub source: StepError,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonitorError {
    #[error(transparent)]
    Singular(#[from] SpdError),
    #[error("invalid test field: {0}")]
    InvalidTestField(String),
    #[error("states are not ordered in time (dt = {0})")]
    NonIncreasingTime(f64),
    #[error("budget history needs at least {needed} entries, got {got}")]
    ShortHistory { needed: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("axis {axis}: {reason}")]
    InvalidAxis { axis: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("{key}: {constraint}")]
    Invalid {
        key: &'static str,
        constraint: String,
    },
}
