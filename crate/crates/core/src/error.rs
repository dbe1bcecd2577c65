use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("vortices {i} and {j} collide (separation {separation:e})")]
    Collision { i: usize, j: usize, separation: f64 },

    #[error("vortex {index} lies outside the domain")]
    Domain { index: usize },

    #[error("point is within {distance:e} of the domain boundary")]
    Boundary { distance: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("iterate left the domain after {halvings} step halvings")]
    LeftDomain { halvings: usize },

    #[error("total vorticity vanishes")]
    ZeroTotalVorticity,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate frame: |Zdot| = {norm:e}")]
    DegenerateFrame { norm: f64 },

    #[error("permutation does not preserve the vorticities")]
    VorticityMismatch,

    #[error("{block} block is numerically singular (condition number {condition:e})")]
    SingularOperator { block: &'static str, condition: f64 },

    #[error("contraction factor {factor:.3} exceeds the guard {guard:.3}")]
    ContractionFailure { factor: f64, guard: f64 },

    #[error("phase defect: full gradient {full:e} vs projected {projected:e}")]
    PhaseDefect { full: f64, projected: f64 },

    #[error("iterate left the admissible loop set: {0}")]
    DomainExit(String),

    #[error("at quadrature node {node}: {source}")]
    AtNode { node: usize, source: Box<Error> },

    #[error("spectral tail {tail:e} exceeds {limit:e}; increase the number of modes")]
    Unresolved { tail: f64, limit: f64 },

    #[error("continuation produced no converged point")]
    EmptyPath,

    #[error("collision approached at t = {t}")]
    CollisionApproach { t: f64 },

    #[error("domain boundary approached at t = {t}")]
    BoundaryApproach { t: f64 },

    #[error("minimum step size reached at t = {t}")]
    MinStepReached { t: f64 },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
