//! Brute-force iteration oracles and the stability region scanner.
//!
//! These routines classify actual trajectories of the scalar recurrences and
//! are the empirical counterpart to the closed forms in [`crate::series`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::series::{self};

/// Iteration budget and thresholds for trajectory classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationLimits {
    /// Maximum number of iterations before giving up.
    pub max_iter: usize,
    /// Convergence is `|U_{n+1} - U_n| < tolerance * max(1, |U_n|)`.
    pub tolerance: f64,
    /// Divergence is `|U_n| > blowup`.
    pub blowup: f64,
}

impl Default for IterationLimits {
    fn default() -> Self {
        Self {
            max_iter: 100_000,
            tolerance: 1e-12,
            blowup: 1e10,
        }
    }
}

impl IterationLimits {
    pub fn with_max_iter(max_iter: usize) -> Self {
        Self {
            max_iter,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidLimits("max_iter must be at least 1"));
        }
        if !(self.tolerance > 0.0 && self.blowup > 0.0) {
            return Err(Error::InvalidLimits("tolerance and blowup must be positive"));
        }
        Ok(())
    }
}

/// How a trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IterationStatus {
    Converged,
    Diverged,
    MaxIterations,
}

/// Classified result of running a recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationOutcome {
    pub status: IterationStatus,
    /// Last iterate normalized by the initial condition (U/u0); meaningful
    /// when converged.
    pub final_value: f64,
    pub iterations_used: usize,
}

fn check_finite(values: &[(f64, &'static str)]) -> Result<()> {
    for (v, name) in values {
        if !v.is_finite() {
            return Err(Error::NonFinite(name));
        }
    }
    Ok(())
}

fn outcome(status: IterationStatus, u: f64, u0: f64, n: usize) -> IterationOutcome {
    IterationOutcome {
        status,
        final_value: if u0 != 0.0 { u / u0 } else { u },
        iterations_used: n,
    }
}

/// Iterate `U_{n+1} = u0 + r (1 + eps U_n^Z) U_n` from `U_0 = u0`.
pub fn iterate_explicit(
    r: f64,
    epsilon: f64,
    u0: f64,
    z: u32,
    limits: &IterationLimits,
) -> Result<IterationOutcome> {
    if z == 0 {
        return Err(Error::InvalidDegree(z));
    }
    check_finite(&[(r, "r"), (epsilon, "epsilon"), (u0, "u0")])?;
    limits.validate()?;
    let mut u = u0;
    for n in 1..=limits.max_iter {
        let next = u0 + r * (1.0 + epsilon * u.powi(z as i32)) * u;
        if !next.is_finite() || next.abs() > limits.blowup {
            return Ok(outcome(IterationStatus::Diverged, next, u0, n));
        }
        if (next - u).abs() < limits.tolerance * u.abs().max(1.0) {
            return Ok(outcome(IterationStatus::Converged, next, u0, n));
        }
        u = next;
    }
    Ok(outcome(IterationStatus::MaxIterations, u, u0, limits.max_iter))
}

/// Iterate the implicit update `(1 - r (1 + 2 eps U_n)) U_{n+1} = u0 - r eps U_n^2`
/// from `U_0 = u0`. Each step is an exact linear solve; a vanishing pivot is
/// reported as its own error, distinct from divergence.
pub fn iterate_implicit(
    r: f64,
    epsilon: f64,
    u0: f64,
    limits: &IterationLimits,
) -> Result<IterationOutcome> {
    check_finite(&[(r, "r"), (epsilon, "epsilon"), (u0, "u0")])?;
    limits.validate()?;
    let mut u = u0;
    for n in 1..=limits.max_iter {
        let pivot = 1.0 - r * (1.0 + 2.0 * epsilon * u);
        if pivot.abs() < 1e-14 {
            return Err(Error::SingularStep { iteration: n, pivot });
        }
        let next = (u0 - r * epsilon * u * u) / pivot;
        if !next.is_finite() || next.abs() > limits.blowup {
            return Ok(outcome(IterationStatus::Diverged, next, u0, n));
        }
        if (next - u).abs() < limits.tolerance * u.abs().max(1.0) {
            return Ok(outcome(IterationStatus::Converged, next, u0, n));
        }
        u = next;
    }
    Ok(outcome(IterationStatus::MaxIterations, u, u0, limits.max_iter))
}

/// Which recurrence a scan drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Explicit,
    Implicit,
}

/// Empirical classification of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellStatus {
    Converged,
    Diverged,
    MaxIterations,
    /// The implicit update hit an exactly singular pivot.
    SingularStep,
}

impl CellStatus {
    pub fn label(self) -> &'static str {
        match self {
            CellStatus::Converged => "converged",
            CellStatus::Diverged => "diverged",
            CellStatus::MaxIterations => "maxiter",
            CellStatus::SingularStep => "error",
        }
    }
}

/// Paired analytic/empirical verdicts over an (r, eps_hat) grid, stored
/// row-major with eps_hat as the slow axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGrid {
    pub r_axis: Vec<f64>,
    pub eps_hat_axis: Vec<f64>,
    /// Analytic verdict per cell: true = stable.
    pub analytic: Vec<bool>,
    pub empirical: Vec<CellStatus>,
    pub iterations: Vec<usize>,
}

impl RegionGrid {
    fn index(&self, ie: usize, ir: usize) -> usize {
        ie * self.r_axis.len() + ir
    }

    pub fn analytic_at(&self, ie: usize, ir: usize) -> bool {
        self.analytic[self.index(ie, ir)]
    }

    pub fn empirical_at(&self, ie: usize, ir: usize) -> CellStatus {
        self.empirical[self.index(ie, ir)]
    }

    /// Cells where the analytic verdict and the trajectory disagree.
    /// Budget-exhausted cells are counted as non-converged but are reported
    /// separately by [`RegionGrid::maxiter_cells`].
    pub fn disagreement_cells(&self) -> usize {
        self.analytic
            .iter()
            .zip(&self.empirical)
            .filter(|(a, e)| **a != matches!(e, CellStatus::Converged))
            .count()
    }

    pub fn maxiter_cells(&self) -> usize {
        self.empirical
            .iter()
            .filter(|e| matches!(e, CellStatus::MaxIterations))
            .count()
    }

    /// CSV rows `eps_hat,r,analytic,empirical,iterations`, row-major in
    /// (eps_hat, r), floats with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "eps_hat,r,analytic,empirical,iterations")?;
        for (ie, &eps_hat) in self.eps_hat_axis.iter().enumerate() {
            for (ir, &r) in self.r_axis.iter().enumerate() {
                let k = ie * self.r_axis.len() + ir;
                writeln!(
                    w,
                    "{:.16e},{:.16e},{},{},{}",
                    eps_hat,
                    r,
                    if self.analytic[k] { "stable" } else { "unstable" },
                    self.empirical[k].label(),
                    self.iterations[k],
                )?;
            }
        }
        Ok(())
    }
}

fn validate_axis(axis: &[f64], name: &'static str) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::InvalidAxis(name));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidAxis(name));
    }
    if axis.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidAxis(name));
    }
    Ok(())
}

/// Scan a rectangular (r, eps_hat) grid, pairing the analytic border verdict
/// with the brute-force trajectory at every cell.
///
/// `u0` sets the iteration's initial condition; each cell runs with
/// `epsilon = eps_hat / u0^Z`. The grid is evaluated in parallel but
/// assembled in deterministic row-major order.
pub fn scan_region(
    r_axis: &[f64],
    eps_hat_axis: &[f64],
    z: u32,
    scheme: Scheme,
    u0: f64,
    limits: &IterationLimits,
) -> Result<RegionGrid> {
    if z == 0 {
        return Err(Error::InvalidDegree(z));
    }
    if scheme == Scheme::Implicit && z != 1 {
        return Err(Error::InvalidDegree(z));
    }
    if u0 == 0.0 || !u0.is_finite() {
        return Err(Error::NonFinite("u0"));
    }
    validate_axis(r_axis, "r")?;
    validate_axis(eps_hat_axis, "eps_hat")?;
    limits.validate()?;

    // Analytic verdicts depend on eps_hat only through the border location,
    // so resolve one border (or gap) per row.
    let mut row_border = Vec::with_capacity(eps_hat_axis.len());
    for &eps_hat in eps_hat_axis {
        if eps_hat < 0.0 {
            return Err(Error::NegativeEpsHat(eps_hat));
        }
        match scheme {
            Scheme::Explicit => {
                let b = series::explicit_border_r(eps_hat, z)?;
                row_border.push((b.r_max, f64::NAN));
            }
            Scheme::Implicit => {
                let g = series::implicit_gap(eps_hat)?;
                row_border.push((g.r_low, g.r_high));
            }
        }
    }

    let nr = r_axis.len();
    let cells: Vec<(bool, CellStatus, usize)> = (0..eps_hat_axis.len() * nr)
        .into_par_iter()
        .map(|k| {
            let ie = k / nr;
            let ir = k % nr;
            let eps_hat = eps_hat_axis[ie];
            let r = r_axis[ir];
            let analytic = match scheme {
                Scheme::Explicit => r <= row_border[ie].0,
                // Stable on and outside the gap borders, unstable strictly
                // inside.
                Scheme::Implicit => !(r > row_border[ie].0 && r < row_border[ie].1),
            };
            let epsilon = eps_hat / u0.powi(z as i32);
            let run = match scheme {
                Scheme::Explicit => iterate_explicit(r, epsilon, u0, z, limits),
                Scheme::Implicit => iterate_implicit(r, epsilon, u0, limits),
            };
            let (status, iters) = match run {
                Ok(o) => {
                    let s = match o.status {
                        IterationStatus::Converged => CellStatus::Converged,
                        IterationStatus::Diverged => CellStatus::Diverged,
                        IterationStatus::MaxIterations => CellStatus::MaxIterations,
                    };
                    (s, o.iterations_used)
                }
                Err(Error::SingularStep { iteration, .. }) => {
                    (CellStatus::SingularStep, iteration)
                }
                Err(_) => (CellStatus::SingularStep, 0),
            };
            (analytic, status, iters)
        })
        .collect();

    let mut grid = RegionGrid {
        r_axis: r_axis.to_vec(),
        eps_hat_axis: eps_hat_axis.to_vec(),
        analytic: Vec::with_capacity(cells.len()),
        empirical: Vec::with_capacity(cells.len()),
        iterations: Vec::with_capacity(cells.len()),
    };
    for (a, e, n) in cells {
        grid.analytic.push(a);
        grid.empirical.push(e);
        grid.iterations.push(n);
    }
    Ok(grid)
}

/// Locate the empirical stability edge in r at fixed amplitude by bisection,
/// classifying a trajectory as stable only when it converges.
///
/// The bracket is [0, hi]; `hi` must be unstable (r just above the border
/// always is for the explicit scheme with positive amplitude).
pub fn empirical_border_r(
    eps_hat: f64,
    z: u32,
    resolution: f64,
    limits: &IterationLimits,
) -> Result<f64> {
    if eps_hat < 0.0 {
        return Err(Error::NegativeEpsHat(eps_hat));
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let stable = |r: f64| -> Result<bool> {
        let o = iterate_explicit(r, eps_hat, 1.0, z, limits)?;
        Ok(o.status == IterationStatus::Converged)
    };
    if !stable(lo)? {
        return Err(Error::ScanRange(format!("r = {lo} is not stable")));
    }
    if stable(hi)? {
        return Err(Error::ScanRange(format!("r = {hi} is not unstable")));
    }
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if stable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
