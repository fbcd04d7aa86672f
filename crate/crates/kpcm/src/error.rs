//! Error types, one enum per subsystem.

use thiserror::Error;

/// Errors from scalar, series, polynomial and root-finding arithmetic.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("backend mismatch")]
    BackendMismatch,
    #[error("variable mismatch")]
    VariableMismatch,
    #[error("division by zero")]
    DivisionByZero,
    #[error("constant term is not a unit")]
    NonUnitConstantTerm,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("polynomial degree must be at least 1 with nonzero leading coefficient")]
    DegenerateInput,
    #[error("root polishing failed to converge")]
    NonConvergence,
    #[error("parse error: {0}")]
    Parse(String),
}

/// Errors from the microdifferential-operator algebra.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MicroError {
    #[error("truncation policy mismatch")]
    PolicyMismatch,
    #[error("backend mismatch")]
    BackendMismatch,
    #[error("operator is not a Volterra operator (order-0 part must be Id, no positive orders)")]
    NotVolterra,
    #[error("operator violates the Lax normalization (Id at order 1, zero at order 0)")]
    NotLax,
    #[error("window too shallow: needed order {needed}, determined down to {floor}")]
    WindowTooShallow { needed: i32, floor: i32 },
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Errors from the Sato-Grassmannian window model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SatoError {
    #[error("window too shallow for this operation")]
    WindowTooShallow,
    #[error("lattice is not in the big cell")]
    NotGeneric,
    #[error(transparent)]
    Micro(#[from] MicroError),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Errors from special functions and Calogero-Moser dynamics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CmError {
    #[error("argument at a lattice point")]
    PoleAtLatticePoint,
    #[error("argument at the origin of the potential")]
    PoleAtOrigin,
    #[error("particles too close: separation {sep:e} below threshold")]
    ParticleCollision { sep: f64 },
    #[error("collision detected during integration at time {time}")]
    CollisionDetected { time: f64 },
    #[error("step size underflow during adaptive halving at time {time}")]
    StepUnderflow { time: f64 },
    #[error("unsupported potential kind for this operation")]
    UnsupportedKind,
}

/// Errors from the KP/CM correspondence.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrError {
    #[error("rank-one certificate failed: residual {residual:e}")]
    CertificateFailed { residual: f64 },
    #[error("calibration search exhausted without an exact solution")]
    CalibrationFailed,
    #[error("pole-to-particle matching ambiguous at t2 = {t2}")]
    MatchingAmbiguous { t2: f64 },
    #[error(transparent)]
    Cm(#[from] CmError),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Errors from configuration parsing and the experiment runner.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {reason}")]
    Validation { key: String, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("acceptance check failed: {0}")]
    CheckFailed(String),
    #[error("{0}")]
    Run(String),
}
