//! Perturbation-amplitude cascades.
//!
//! Expanding the iterate in powers of the perturbation parameter turns the
//! nonlinear recurrence into a ladder of linear ones: each order i is driven
//! by a source assembled from lower orders (a discrete convolution of the
//! amplitude vector). The explicit ladder is iterated in n; the implicit
//! ladder is solved order by order and is independent of n.

use crate::combinatorics::fuss_catalan;
use crate::error::{Error, Result};

/// Amplitude magnitude past which an order is flagged divergent.
const AMPLITUDE_BLOWUP: f64 = 1e12;
/// Relative change below which an order counts as converged.
const AMPLITUDE_TOL: f64 = 1e-12;
/// Number of consecutive quiet steps required for convergence.
const AMPLITUDE_QUIET_STEPS: usize = 10;

/// Table of perturbation amplitudes `u[i][n]` for orders `0..=order` and
/// iterations `0..=iterations`.
#[derive(Debug, Clone)]
pub struct AmplitudeTable {
    amplitudes: Vec<Vec<f64>>,
    diverged_at: Vec<Option<usize>>,
    pub order: usize,
    pub iterations: usize,
    pub r: f64,
    pub u0: f64,
    pub z: u32,
}

impl AmplitudeTable {
    fn with_initial(order: usize, iterations: usize, r: f64, u0: f64, z: u32) -> Self {
        let mut amplitudes = vec![vec![0.0; iterations + 1]; order + 1];
        amplitudes[0][0] = u0;
        Self {
            amplitudes,
            diverged_at: vec![None; order + 1],
            order,
            iterations,
            r,
            u0,
            z,
        }
    }

    /// Raw amplitude `u[i][n]`.
    pub fn raw(&self, i: usize, n: usize) -> f64 {
        self.amplitudes[i][n]
    }

    /// Amplitude normalized by `u0^(Z i + 1)`, the scale on which the
    /// converged values read `C(i,Z) r^i / (1-r)^((Z+1)i+1)`.
    pub fn normalized(&self, i: usize, n: usize) -> f64 {
        self.amplitudes[i][n] / self.u0.powi((self.z as i32) * (i as i32) + 1)
    }

    /// First iteration at which order `i` exceeded the blow-up threshold.
    pub fn diverged_at(&self, i: usize) -> Option<usize> {
        self.diverged_at[i]
    }

    /// First iteration after which order `i` stayed within relative
    /// `1e-12` for ten consecutive steps.
    pub fn convergence_iteration(&self, i: usize) -> Option<usize> {
        let row = &self.amplitudes[i];
        let mut quiet = 0usize;
        for n in 1..row.len() {
            let scale = row[n].abs().max(1e-300);
            if (row[n] - row[n - 1]).abs() < AMPLITUDE_TOL * scale {
                quiet += 1;
                if quiet >= AMPLITUDE_QUIET_STEPS {
                    return Some(n);
                }
            } else {
                quiet = 0;
            }
        }
        None
    }

    /// Reconstruct `U_n = sum_i u[i][n] epsilon^i` at the final iteration.
    pub fn solution_at(&self, n: usize, epsilon: f64) -> f64 {
        let mut acc = 0.0;
        let mut pw = 1.0;
        for i in 0..=self.order {
            acc += self.amplitudes[i][n] * pw;
            pw *= epsilon;
        }
        acc
    }

    fn mark_divergence(&mut self, n: usize) {
        for i in 0..=self.order {
            let v = self.amplitudes[i][n];
            if self.diverged_at[i].is_none() && (v.is_nan() || v.abs() > AMPLITUDE_BLOWUP) {
                self.diverged_at[i] = Some(n);
            }
        }
    }
}

/// Truncated coefficients of `U^(Z+1)` from the amplitude vector at one
/// iteration, by repeated discrete convolution.
fn power_coefficients(values: &[f64], z: u32, len: usize) -> Vec<f64> {
    let base = &values[..len.min(values.len())];
    let mut pow = base.to_vec();
    for _ in 0..z {
        let mut next = vec![0.0; len];
        for (a, &va) in pow.iter().enumerate() {
            if va == 0.0 {
                continue;
            }
            for (b, &vb) in base.iter().enumerate() {
                if a + b < len {
                    next[a + b] += va * vb;
                }
            }
        }
        pow = next;
    }
    pow
}

/// Run the explicit cascade: `u[i][n+1] = r u[i][n] + r (U_n^(Z+1))_{i-1}`
/// with `u[0][n+1] = u0 + r u[0][n]`.
///
/// Orders that overflow are flagged per entry rather than reported as errors.
pub fn explicit_cascade(
    r: f64,
    u0: f64,
    z: u32,
    order: usize,
    iterations: usize,
) -> AmplitudeTable {
    assert!(z >= 1, "degree must be at least 1");
    assert!(iterations >= 1);
    let mut table = AmplitudeTable::with_initial(order, iterations, r, u0, z);
    let mut current: Vec<f64> = (0..=order).map(|i| table.amplitudes[i][0]).collect();
    for n in 0..iterations {
        // Coefficient of eps^(i-1) in U_n^(Z+1); only order-1 entries needed.
        let source = power_coefficients(&current, z, order.max(1));
        let mut next = vec![0.0; order + 1];
        next[0] = u0 + r * current[0];
        for i in 1..=order {
            next[i] = r * current[i] + r * source[i - 1];
        }
        for (i, &v) in next.iter().enumerate() {
            table.amplitudes[i][n + 1] = v;
        }
        table.mark_divergence(n + 1);
        current = next;
    }
    table
}

/// Converged amplitude `u_{i,inf} = C(i,Z) r^i u0^(Zi+1) / (1-r)^((Z+1)i+1)`.
///
/// Valid on the explicit convergence domain |r| < 1.
pub fn converged_amplitude(i: usize, r: f64, u0: f64, z: u32) -> Result<f64> {
    if r.abs() >= 1.0 {
        return Err(Error::OutsideConvergenceDomain(r));
    }
    let c = coefficient_f64(i, z)?;
    let denom = (1.0 - r).powi((z as i32 + 1) * i as i32 + 1);
    Ok(c * r.powi(i as i32) * u0.powi(z as i32 * i as i32 + 1) / denom)
}

fn coefficient_f64(i: usize, z: u32) -> Result<f64> {
    use num_traits::ToPrimitive;
    let c = fuss_catalan(i, z)?;
    c.to_f64().ok_or(Error::NonFinite("coefficient"))
}

/// Closed-form implicit amplitude `C(i) r^i u0^(i+1) / (1-r)^(2i+1)`.
///
/// Same expression as [`converged_amplitude`] at degree 1, but valid for any
/// r away from the pole: the implicit ladder does not require |r| < 1.
pub fn implicit_closed_amplitude(i: usize, r: f64, u0: f64) -> Result<f64> {
    if r == 1.0 {
        return Err(Error::PoleAtOne);
    }
    let c = coefficient_f64(i, 1)?;
    Ok(c * r.powi(i as i32) * u0.powi(i as i32 + 1) / (1.0 - r).powi(2 * i as i32 + 1))
}

/// Solve the implicit ladder `(1-r) u_i = u0 [i=0] + r (U U)_{i-1}` order by
/// order, where the quadratic source uses the already-converged lower
/// orders. Each order is therefore a single deterministic arithmetic path,
/// making the table exactly independent of the iteration index for n >= 1.
pub fn implicit_cascade(r: f64, u0: f64, order: usize) -> Result<AmplitudeTable> {
    implicit_cascade_n(r, u0, order, 1)
}

/// [`implicit_cascade`] with the table widened to `iterations` columns; every
/// column n >= 1 holds the same fixed-point amplitudes.
pub fn implicit_cascade_n(
    r: f64,
    u0: f64,
    order: usize,
    iterations: usize,
) -> Result<AmplitudeTable> {
    if r == 1.0 {
        return Err(Error::PoleAtOne);
    }
    let mut fixed = vec![0.0; order + 1];
    fixed[0] = u0 / (1.0 - r);
    for i in 1..=order {
        let mut source = 0.0;
        for j in 0..i {
            source += fixed[j] * fixed[i - 1 - j];
        }
        fixed[i] = r * source / (1.0 - r);
    }
    let mut table = AmplitudeTable::with_initial(order, iterations.max(1), r, u0, 1);
    for (row, &value) in table.amplitudes.iter_mut().zip(&fixed) {
        for slot in row.iter_mut().skip(1) {
            *slot = value;
        }
    }
    table.mark_divergence(table.iterations);
    Ok(table)
}
