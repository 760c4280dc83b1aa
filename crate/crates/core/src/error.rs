//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("evaluation point ({x}, {y}) lies on a branch cut")]
    BranchCutHit { x: f64, y: f64 },
    #[error("wavenumber mismatch: {0} vs {1}")]
    WavenumberMismatch(f64, f64),
    #[error("no sign change of J_{mu} on the search interval")]
    NoSignChange { mu: f64 },
    #[error("seed ({x}, {y}) is not on a regular part of the nodal set")]
    SeedNotOnCurve { x: f64, y: f64 },
    #[error("curve does not close (gap {gap})")]
    NotClosed { gap: f64 },
    #[error("curve self-intersects near ({x}, {y})")]
    SelfIntersecting { x: f64, y: f64 },
    #[error("domain boundary does not close (gap {gap})")]
    DomainNotClosed { gap: f64 },
    #[error("start point ({x}, {y}) is stationary")]
    StartIsStationary { x: f64, y: f64 },
    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),
    #[error("assertion failed: {0}")]
    AssertionFailure(String),
    #[error("boundary condition not satisfied on the symmetry axis (residual {0})")]
    BcNotSatisfiedOnAxis(f64),
    #[error("inversion of the diffeomorphism failed at ({x}, {y})")]
    InversionFailure { x: f64, y: f64 },
    #[error("condition set violated: {0}")]
    ConditionSetViolated(String),
    #[error("cannot satisfy the Jacobian bound: {0}")]
    CannotSatisfyJacobianBound(String),
    #[error("linear solver failed: {0}")]
    SolverDiverged(String),
    #[error("wavelength under-resolved: {0}")]
    WavelengthUnderResolved(String),
    #[error("point source lies inside the scatterer neighbourhood")]
    SourceInsideNeighborhood,
    #[error("problem too large: {0} unknowns")]
    TooLarge(usize),
}
