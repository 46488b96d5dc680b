use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {value} outside domain {domain}")]
    OutOfDomain { value: f64, domain: String },
    #[error("turning parameter {0} is not attained by the profile")]
    OutOfRange(f64),
    #[error("turning parameter {p} lies in the jump gap at breakpoint {breakpoint}")]
    JumpTangency { p: f64, breakpoint: f64 },
    #[error("invalid wave speed profile: {0}")]
    InvalidProfile(String),
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("division by a value below 1e-12 at x = {0}")]
    DivisionByZero(f64),
    #[error("Neumann contraction failed: remainder estimate {estimate} at layer width {width}")]
    ContractionFailure { estimate: f64, width: f64 },
    #[error("Neumann iteration did not converge after {iterations} terms (residual {residual})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("conserved quantity drift {0} exceeds 1e-6; reduce the step")]
    StepTooLarge(f64),
    #[error("radius {0} is not periodic within the requested tolerance")]
    NotPeriodic(f64),
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("projection residual {0} exceeds 1e-8")]
    ProjectionResidual(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
