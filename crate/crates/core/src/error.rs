use thiserror::Error;

/// Errors raised by the solvers. Payloads are stored as `f64` so the type
/// does not depend on the scalar the computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {x} outside the trusted domain [0, {max}] of the nonlinearity")]
    Domain { x: f64, max: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no zero found: solution stays positive up to {reached} (limit {limit})")]
    NoZeroFound { reached: f64, limit: f64 },

    #[error("integrator step underflow at t = {t} (h = {h})")]
    StepFailure { t: f64, h: f64 },

    #[error("integrator exceeded {0} steps")]
    TooManySteps(usize),

    #[error("no sign change on [{a}, {b}] (f(a) = {fa}, f(b) = {fb})")]
    NoBracket { a: f64, b: f64, fa: f64, fb: f64 },

    #[error("root finder did not converge in {0} iterations")]
    RootMaxIter(usize),

    #[error("value {value} outside the tabulated range [{min}, {max}]; extend the grid")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("not a comparison triple: {0}")]
    NotAComparisonTriple(String),

    #[error("solution maximum {found} differs from the triple maximum {expected}")]
    MaximumMismatch { found: f64, expected: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("linearized operator is numerically singular (pivot {pivot} at row {row})")]
    SingularLinearization { row: usize, pivot: f64 },

    #[error("fit stalled with residual {residual} above tolerance {tol}")]
    NoSolution { residual: f64, tol: f64 },

    #[error("gradient too small ({grad}) for the level-set curvature formula")]
    NearCritical { grad: f64 },

    #[error("maximum set contains no closed curve")]
    NoMaxCurve,

    #[error("level-curve extraction failed: {0}")]
    Extraction(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
