//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// d = eta^2 - tau^2 is at the confinement value -4, where the
    /// one-sided jump relation degenerates and the shell decouples the
    /// interior from the exterior.
    #[error("confinement case: eta^2 - tau^2 = -4 (within {tol:e}); the jump matrix is singular")]
    ConfinementCase { tol: f64 },

    /// d lies on the excluded set (2k+1)^2 pi^2 where the rescaling factor
    /// has a pole.
    #[error("excluded input: d = {d} is within {tol:e} of (2k+1)^2 pi^2 for k = {k}")]
    ExcludedInput { d: f64, k: u32, tol: f64 },

    /// The requested renormalized pair has no preimage on the principal
    /// branch (the tanh branch only reaches d_hat in (-4, 0)).
    #[error("no preimage: d_hat = {d_hat} <= -4 is outside the image of the rescaling map")]
    NoPreimage { d_hat: f64 },

    /// Chart tangent vectors are numerically dependent at the query point.
    #[error("degenerate chart: |t1 x t2| = {cross_norm:e} below tolerance")]
    DegenerateChart { cross_norm: f64 },

    /// Normal offset exceeds the validated tube half-width.
    #[error("tube exceeded: |p| = {p_abs} >= gamma = {gamma}")]
    TubeExceeded { p_abs: f64, gamma: f64 },

    /// Point is farther from the surface than the tube half-width.
    #[error("point outside the tubular neighborhood (gamma = {gamma})")]
    OutsideTube { gamma: f64 },

    /// Newton projection failed to converge.
    #[error("projection did not converge after {max_iter} iterations (residual {residual:e})")]
    NonConvergence { max_iter: usize, residual: f64 },

    /// The one-sided primitive is undefined at p = 0; callers pick a side.
    #[error("primitive evaluated exactly at p = 0; use the one-sided limits")]
    EvaluationAtZero,

    /// Twist field queried on the surface itself.
    #[error("twist field evaluated on the surface (|p| = {p_abs:e})")]
    OnSurface { p_abs: f64 },

    /// Matrix exponential argument outside the documented range.
    #[error("matrix exponential overflow: norm {norm} exceeds {max}")]
    Overflow { norm: f64, max: f64 },

    /// Layer integrator cannot meet the requested tolerance.
    #[error("step underflow: requested step {step:e} below resolution")]
    StepUnderflow { step: f64 },

    /// Energy failed the eigenvalue matching residual.
    #[error("not an eigenvalue: matching residual {residual:e} exceeds {tol:e}")]
    NotAnEigenvalue { residual: f64, tol: f64 },

    /// No delta-shell eigenpair exists for the requested configuration.
    #[error("no eigenpair in the spectral gap for the requested channel and coupling")]
    NoEigenpair,

    /// Rate fit rejected: differences at noise level or too few records.
    #[error("degenerate fit: {reason}")]
    DegenerateFit { reason: String },

    /// Invalid user-facing parameter.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
