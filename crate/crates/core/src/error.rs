//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide error enum. Operations return `Result<T>` with this type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must have full row rank {expected}, found rank {found}")]
    RankDeficient { expected: usize, found: usize },

    #[error("quotient requires m < s, got m={m}, s={s}")]
    NotStrictQuotient { m: usize, s: usize },

    #[error("scale must be nonzero")]
    DegenerateScale,

    #[error("lp solver could not certify tolerance {tol:e}: worst residual {residual:e}")]
    SolverTolerance { tol: f64, residual: f64 },

    #[error("value {index} misses its fiber by {residual:e}")]
    NotOnFiber { index: usize, residual: f64 },

    #[error("operands live over different bases")]
    MixedBases,

    #[error("combination coefficients must be nonzero")]
    ZeroCoefficient,

    #[error("operation requires unit-scale sections, got scale {found}")]
    UnsupportedScale { found: f64 },

    #[error("need at least {needed} base points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("exponent q must lie in (1, inf), got {q}")]
    BadExponent { q: f64 },

    #[error("point {index} has no neighbor within radius {radius}")]
    EmptyBall { index: usize, radius: f64 },

    #[error("section is not admissible: {reason}")]
    NotAdmissible { reason: String },

    #[error("admissibility constant {given} is below the required {needed}")]
    AdmissibilityViolated { given: f64, needed: f64 },

    #[error("base points {i} and {j} coincide")]
    DuplicateBasePoint { i: usize, j: usize },

    #[error("scale radii must be positive and strictly decreasing")]
    BadSchedule,

    #[error("empty certificate list")]
    EmptyInput,

    #[error("certificate failed verification: {check}")]
    UnverifiedCertificate { check: String },

    #[error("invalid dimensions: {reason}")]
    BadDims { reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid field {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
