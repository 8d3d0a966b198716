//! Nonlinear stability analysis of discrete Picard iteration time-marching.
//!
//! The iteration `U_{n+1} = U_0 + r (1 + eps U_n^Z) U_n` resolves into a
//! perturbation series whose coefficients are the Pfaff-Fuss-Catalan numbers.
//! The series converges exactly when the nonlinear stability number
//! `theta = r eps_hat / (1-r)^(Z+1)` stays within `Z^Z / (Z+1)^(Z+1)`, which
//! produces closed-form stability borders for the explicit iteration, an
//! instability gap for the implicit one, and time-step bounds for discretized
//! PDE systems. Every closed form here is paired with a brute-force iteration
//! oracle.
//!
//! Modules:
//! - [`combinatorics`]: exact Catalan / Fuss-Catalan coefficients.
//! - [`series`]: theta, closed-form shifts and solutions, stability borders.
//! - [`perturbation`]: the amplitude cascades and their converged values.
//! - [`dpi`]: trajectory classification and the (r, eps_hat) region scanner.
//! - [`pde`]: Fourier-symbol stability test and the nonlinear Poisson
//!   example with analytic and measured CFL bounds.

pub mod combinatorics;
pub mod dpi;
pub mod error;
pub mod pde;
pub mod perturbation;
pub mod series;

pub use combinatorics::{catalan, fuss_catalan, BigCount};
pub use dpi::{
    iterate_explicit, iterate_implicit, scan_region, IterationLimits, IterationOutcome,
    IterationStatus, RegionGrid, Scheme,
};
pub use error::{Error, Result};
pub use pde::{
    analytic_cfl_bound, experimental_cfl_bound, fourier_eigenvalue, fourier_stability,
    simulate_poisson, FourierSymbol, PoissonConfig, PoissonRun, SymbolTerm,
};
pub use perturbation::{
    converged_amplitude, explicit_cascade, implicit_cascade, implicit_closed_amplitude,
    AmplitudeTable,
};
pub use series::{
    converged_solution, explicit_border_r, implicit_gap, nonlinear_shift, shift_partial_sum,
    theta, theta_max, BorderVerdict, ImplicitGap, StabilityPoint,
};
