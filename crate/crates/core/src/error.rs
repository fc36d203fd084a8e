use thiserror::Error;

/// Errors raised by protocol design, propagation and verification.
///
/// Times and values are reported as `f64` regardless of the scalar type the
/// failing routine was instantiated with.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StaError {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("boundary conditions are linearly dependent (condition number {cond:.3e})")]
    SingularSystem { cond: f64 },
    #[error("t = {t} is outside [0, {tf}]")]
    OutOfDomain { t: f64, tf: f64 },
    #[error("scaling factor is non-positive at t = {t} (rho = {rho})")]
    NonPositiveScaling { t: f64, rho: f64 },
    #[error("Ermakov integration left the admissible range at t = {t} (rho = {rho})")]
    BlowUp { t: f64, rho: f64 },
    #[error("ODE step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("frequency ramp has a pole inside [0, tf]")]
    PoleInRamp,
    #[error("coupling constant is non-positive at t = {t}")]
    NonPositiveCoupling { t: f64 },
    #[error("operation requires the {expected} variant, got {found}")]
    VariantMismatch { expected: String, found: String },
    #[error("edge mismatch: {0}")]
    EdgeMismatch(String),
    #[error("gap closes at t = {t} (|Omega| = {gap:.3e})")]
    DegenerateGap { t: f64, gap: f64 },
    #[error("shooting failed: {0}")]
    ShootingFailed(String),
    #[error("boundary condition violated: {0}")]
    BoundaryConditionViolated(String),
    #[error("degenerate spectrum at t = {t} (gap {gap:.3e})")]
    DegenerateSpectrum { t: f64, gap: f64 },
    #[error("mode k = {k} closes its gap at lambda = {lambda}")]
    GapClosure { k: f64, lambda: f64 },
    #[error("density vanishes on the interior at x = {x}")]
    ZeroDensity { x: f64 },
    #[error("box too small: boundary density {density:.3e} at t = {t}")]
    BoxTooSmall { t: f64, density: f64 },
    #[error("time step too large: dt * bandwidth = {product:.3e}")]
    StepTooLarge { product: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("schema error at {path}: {message}")]
    SchemaError { path: String, message: String },
    #[error("verification failed: {what} = {measured} (threshold {threshold})")]
    VerificationFailed {
        what: String,
        measured: f64,
        threshold: f64,
    },
    #[error("scan budget exceeded: {points} points (limit {limit})")]
    BudgetExceeded { points: usize, limit: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

impl StaError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        StaError::SchemaError {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for StaError {
    fn from(e: std::io::Error) -> Self {
        StaError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for StaError {
    fn from(e: serde_json::Error) -> Self {
        StaError::schema(format!("line {} column {}", e.line(), e.column()), e.to_string())
    }
}

pub type Result<T, E = StaError> = std::result::Result<T, E>;
