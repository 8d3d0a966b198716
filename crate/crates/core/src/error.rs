//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by the stability analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Requested series order exceeds the configured maximum.
    #[error("order {requested} exceeds the configured maximum {max}")]
    OrderCapacity { requested: usize, max: usize },

    /// Nonlinearity degree must satisfy Z >= 1.
    #[error("nonlinearity degree must be at least 1, got {0}")]
    InvalidDegree(u32),

    /// The closed forms have a pole at r = 1.
    #[error("singular at r = 1 (pole of the closed form)")]
    PoleAtOne,

    /// The perturbation series does not converge at this point.
    #[error("series diverges: theta = {theta} exceeds theta_max = {theta_max}")]
    SeriesDiverges { theta: f64, theta_max: f64 },

    /// Border and gap formulas are defined for non-negative eps_hat only.
    #[error("eps_hat must be non-negative, got {0}")]
    NegativeEpsHat(f64),

    /// Explicit amplitudes converge only for |r| < 1.
    #[error("|r| >= 1 is outside the explicit convergence domain (r = {0})")]
    OutsideConvergenceDomain(f64),

    /// Inputs to an iteration must be finite.
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    /// Implicit update pivot vanished.
    #[error("singular implicit step at iteration {iteration} (pivot = {pivot:e})")]
    SingularStep { iteration: usize, pivot: f64 },

    /// Frequency vector does not match the symbol dimension.
    #[error("frequency vector has dimension {got}, symbol expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A Fourier symbol needs at least one term.
    #[error("Fourier symbol has no terms")]
    EmptySymbol,

    /// A derivative order of zero is not a differential operator term.
    #[error("derivative order must be at least 1")]
    InvalidDerivativeOrder,

    /// Scan axes must be nonempty, sorted and finite.
    #[error("invalid scan axis: {0}")]
    InvalidAxis(&'static str),

    /// A bisection bracket did not straddle the stability edge.
    #[error("scan range does not bracket the stability edge: {0}")]
    ScanRange(String),

    /// Iteration limit configuration is unusable.
    #[error("invalid iteration limits: {0}")]
    InvalidLimits(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
