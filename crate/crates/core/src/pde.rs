//! Stability of time-dependent PDE systems.
//!
//! The linearized spatial operator is diagonalized by a Fourier transform,
//! its largest eigenvalue magnitude plays the role of the linear stability
//! number r, and the scalar theory then bounds the allowable time step. The
//! worked example is a one-dimensional diffusion problem with quadratic
//! nonlinearity on [-1, 1], discretized with the symmetric second-order
//! stencil, for which both the analytic bound and the directly measured
//! stability edge of the iteration are computed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dpi::{IterationLimits, IterationOutcome, IterationStatus};
use crate::error::{Error, Result};

/// One term `a * d^m/dx_l^m` of a constant-coefficient linear operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolTerm {
    /// Spatial dimension index, 1-based.
    pub dim: usize,
    /// Derivative order, at least 1.
    pub order: u32,
    pub coeff: f64,
}

/// A linear spatial operator in symbol form.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSymbol {
    terms: Vec<SymbolTerm>,
    dim: usize,
}

impl FourierSymbol {
    pub fn new(terms: Vec<SymbolTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptySymbol);
        }
        let mut dim = 0;
        for t in &terms {
            if t.order == 0 {
                return Err(Error::InvalidDerivativeOrder);
            }
            if t.dim == 0 {
                return Err(Error::DimensionMismatch {
                    expected: 1,
                    got: 0,
                });
            }
            dim = dim.max(t.dim);
        }
        Ok(Self { terms, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[SymbolTerm] {
        &self.terms
    }

    /// Operator eigenvalue `sum a_lm (i eta_l)^m` at one frequency vector.
    pub fn eigenvalue(&self, eta: &[f64]) -> Result<Complex64> {
        if eta.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: eta.len(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let ie = Complex64::new(0.0, eta[t.dim - 1]);
            acc += t.coeff * ie.powu(t.order);
        }
        Ok(acc)
    }
}

/// Free-function form of [`FourierSymbol::eigenvalue`].
pub fn fourier_eigenvalue(sym: &FourierSymbol, eta: &[f64]) -> Result<Complex64> {
    sym.eigenvalue(eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityVerdict {
    Stable,
    Unstable,
    /// r sits on the pole of the theta formula.
    Undecided,
}

impl StabilityVerdict {
    pub fn label(self) -> &'static str {
        match self {
            StabilityVerdict::Stable => "stable",
            StabilityVerdict::Unstable => "unstable",
            StabilityVerdict::Undecided => "undecided",
        }
    }
}

/// Outcome of the Fourier stability test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierStability {
    /// Largest eigenvalue magnitude over the frequency grid.
    pub r: f64,
    /// `r eps_hat / (1-r)^2`; NaN when undecided.
    pub theta: f64,
    pub verdict: StabilityVerdict,
}

fn theta_verdict(r: f64, eps_hat: f64) -> (f64, StabilityVerdict) {
    if r == 1.0 {
        return (f64::NAN, StabilityVerdict::Undecided);
    }
    let theta = r * eps_hat / ((1.0 - r) * (1.0 - r));
    let verdict = if theta.abs() <= 0.25 {
        StabilityVerdict::Stable
    } else {
        StabilityVerdict::Unstable
    };
    (theta, verdict)
}

/// Evaluate `r = max |lambda(eta)|` over a frequency grid and test the
/// stability predicate `|r eps_hat / (1-r)^2| <= 1/4`.
pub fn fourier_stability(
    sym: &FourierSymbol,
    eta_grid: &[Vec<f64>],
    eps_hat: f64,
) -> Result<FourierStability> {
    if eta_grid.is_empty() {
        return Err(Error::InvalidAxis("eta_grid"));
    }
    let mut r = 0.0f64;
    for eta in eta_grid {
        r = r.max(sym.eigenvalue(eta)?.norm());
    }
    let (theta, verdict) = theta_verdict(r, eps_hat);
    Ok(FourierStability { r, theta, verdict })
}

/// One iso-contour sample of the per-frequency stability field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourSample {
    pub eta: Vec<f64>,
    pub theta: f64,
    pub verdict: StabilityVerdict,
}

/// Per-frequency theta samples for contour plotting.
pub fn fourier_contour(
    sym: &FourierSymbol,
    eta_grid: &[Vec<f64>],
    eps_hat: f64,
) -> Result<Vec<ContourSample>> {
    eta_grid
        .iter()
        .map(|eta| {
            let r = sym.eigenvalue(eta)?.norm();
            let (theta, verdict) = theta_verdict(r, eps_hat);
            Ok(ContourSample {
                eta: eta.clone(),
                theta,
                verdict,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Nonlinear Poisson example on [-1, 1].
// ---------------------------------------------------------------------------

/// Which residual the Poisson iteration applies the Laplacian to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Residual {
    /// u + u^2, the nonlinear problem.
    #[default]
    Nonlinear,
    /// u alone, the heat-equation control case.
    Linear,
}

/// Configuration of one Poisson run. Deserializes from JSON
/// `{"M": .., "beta": .., "max_iter": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonConfig {
    /// Interior grid points; the mesh spacing is 2/(M+1).
    #[serde(rename = "M")]
    pub m: usize,
    /// CFL number dt/dx^2.
    pub beta: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub residual: Residual,
}

fn default_max_iter() -> usize {
    100_000
}

impl PoissonConfig {
    pub fn new(m: usize, beta: f64) -> Self {
        Self {
            m,
            beta,
            max_iter: default_max_iter(),
            residual: Residual::Nonlinear,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidLimits("M must be at least 2"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidLimits("beta must be positive and finite"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidLimits("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// Completed Poisson run: configuration, outcome and per-step max-norms.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonRun {
    pub config: PoissonConfig,
    pub outcome: IterationOutcome,
    /// Max-norm of the iterate at steps 0..=steps.
    pub norm_history: Vec<f64>,
}

fn initial_parabola(m: usize) -> Vec<f64> {
    (1..=m)
        .map(|k| {
            let x = -1.0 + 2.0 * k as f64 / (m as f64 + 1.0);
            (1.0 - x) * (1.0 + x)
        })
        .collect()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()))
}

/// Apply the (1,-2,1) stencil with homogeneous Dirichlet ends.
fn stencil(w: &[f64], out: &mut [f64]) {
    let m = w.len();
    for j in 0..m {
        let left = if j > 0 { w[j - 1] } else { 0.0 };
        let right = if j + 1 < m { w[j + 1] } else { 0.0 };
        out[j] = left - 2.0 * w[j] + right;
    }
}

fn poisson_iterate(cfg: &PoissonConfig, mut history: Option<&mut Vec<f64>>) -> IterationOutcome {
    let m = cfg.m;
    let u0 = initial_parabola(m);
    let mut u = u0.clone();
    let mut w = vec![0.0; m];
    let mut lap = vec![0.0; m];
    if let Some(h) = history.as_deref_mut() {
        h.push(max_norm(&u));
    }
    let blowup = 1e10;
    let tol = 1e-12;
    for n in 1..=cfg.max_iter {
        match cfg.residual {
            Residual::Nonlinear => {
                for j in 0..m {
                    w[j] = u[j] + u[j] * u[j];
                }
            }
            Residual::Linear => w.copy_from_slice(&u),
        }
        stencil(&w, &mut lap);
        let mut delta = 0.0f64;
        let mut norm = 0.0f64;
        for j in 0..m {
            let next = u0[j] + cfg.beta * lap[j];
            delta = delta.max((next - u[j]).abs());
            norm = norm.max(next.abs());
            u[j] = next;
        }
        if let Some(h) = history.as_deref_mut() {
            h.push(norm);
        }
        if !norm.is_finite() || norm > blowup {
            return IterationOutcome {
                status: IterationStatus::Diverged,
                final_value: norm,
                iterations_used: n,
            };
        }
        if delta < tol * norm.max(1.0) {
            return IterationOutcome {
                status: IterationStatus::Converged,
                final_value: norm,
                iterations_used: n,
            };
        }
    }
    IterationOutcome {
        status: IterationStatus::MaxIterations,
        final_value: max_norm(&u),
        iterations_used: cfg.max_iter,
    }
}

/// Run the Poisson iteration `u_{n+1} = u0 + beta * stencil(u_n + u_n^2)`
/// from the initial parabola, recording the max-norm history.
pub fn simulate_poisson(cfg: &PoissonConfig) -> Result<PoissonRun> {
    cfg.validate()?;
    let mut history = Vec::with_capacity(1024.min(cfg.max_iter + 1));
    let outcome = poisson_iterate(cfg, Some(&mut history));
    Ok(PoissonRun {
        config: *cfg,
        outcome,
        norm_history: history,
    })
}

// ---------------------------------------------------------------------------
// Spectrum estimators.
// ---------------------------------------------------------------------------

/// Eigenvalue `2 (cos(k pi / (M+1)) - 1)` of the unscaled (1,-2,1) stencil.
pub fn stencil_eigenvalue(k: usize, m: usize) -> f64 {
    2.0 * ((k as f64 * PI / (m as f64 + 1.0)).cos() - 1.0)
}

/// Estimated stability parameters of the Poisson problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoissonSpectrum {
    /// max_k |2 beta (cos(g pi) - 1)(1 + 8 g (1-g))|, the matched-index
    /// eigenvalue estimate with g = k/(M+1).
    pub r: f64,
    /// 2 beta max_k |(cos(g pi) - 1)(u0(g) + u0(g)^2)| with u0(g) = 4g(1-g).
    pub v0: f64,
    /// 2 beta (1 - cos(M pi/(M+1))) / r.
    pub epsilon: f64,
    /// epsilon * v0.
    pub eps_hat: f64,
}

/// Discrete-k spectrum estimators. The maxima run over the actual grid
/// indices rather than a continuous extremum.
pub fn poisson_spectrum(m: usize, beta: f64) -> Result<PoissonSpectrum> {
    if m < 2 {
        return Err(Error::InvalidLimits("M must be at least 2"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidLimits("beta must be positive and finite"));
    }
    let mp1 = m as f64 + 1.0;
    let mut r = 0.0f64;
    let mut v0 = 0.0f64;
    for k in 1..=m {
        let g = k as f64 / mp1;
        let base = (g * PI).cos() - 1.0;
        let weight = 1.0 + 8.0 * g * (1.0 - g);
        r = r.max((2.0 * beta * base * weight).abs());
        let u0g = 4.0 * g * (1.0 - g);
        v0 = v0.max((2.0 * beta * base * (u0g + u0g * u0g)).abs());
    }
    let epsilon = 2.0 * beta * (1.0 - (m as f64 * PI / mp1).cos()) / r;
    Ok(PoissonSpectrum {
        r,
        v0,
        epsilon,
        eps_hat: epsilon * v0,
    })
}

/// Continuous-limit slopes (r/beta, V0/beta) from a fine maximization over
/// the index fraction, for comparison against the discrete estimators.
pub fn continuous_spectrum_slopes() -> (f64, f64) {
    let f = |g: f64| (2.0 * ((g * PI).cos() - 1.0) * (1.0 + 8.0 * g * (1.0 - g))).abs();
    let h = |g: f64| {
        let u = 4.0 * g * (1.0 - g);
        (2.0 * ((g * PI).cos() - 1.0) * (u + u * u)).abs()
    };
    (maximize_on_unit_interval(f), maximize_on_unit_interval(h))
}

fn maximize_on_unit_interval<F: Fn(f64) -> f64>(f: F) -> f64 {
    let n = 200_000;
    let mut best_g = 0.5;
    let mut best = 0.0f64;
    for i in 1..n {
        let g = i as f64 / n as f64;
        let v = f(g);
        if v > best {
            best = v;
            best_g = g;
        }
    }
    // Parabolic refinement around the grid maximum.
    let dg = 1.0 / n as f64;
    let (fm, f0, fp) = (f(best_g - dg), best, f(best_g + dg));
    let denom = fm - 2.0 * f0 + fp;
    if denom.abs() > 0.0 {
        let shift = 0.5 * (fm - fp) / denom;
        best = f(best_g + shift.clamp(-1.0, 1.0) * dg);
    }
    best.max(f0)
}

/// True spectral radius of `beta * stencil * diag(1 + 2 u0(x))`, for
/// comparison with the matched-index estimate in [`poisson_spectrum`]. The
/// product is similar to a symmetric tridiagonal matrix because the diagonal
/// weight is positive.
pub fn product_matrix_spectral_radius(m: usize, beta: f64) -> f64 {
    let weights: Vec<f64> = initial_parabola(m).iter().map(|&u| 1.0 + 2.0 * u).collect();
    let diag: Vec<f64> = weights.iter().map(|&d| -2.0 * d).collect();
    let off: Vec<f64> = (0..m - 1)
        .map(|j| (weights[j] * weights[j + 1]).sqrt())
        .collect();
    let eig = symtridiag_eigenvalues(&diag, &off);
    beta * eig.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()))
}

/// Largest beta with `theta(beta) <= 1/4`, using the discrete estimators.
/// Both r and eps_hat scale linearly in beta, so theta is monotone on
/// (0, 1/r-slope) and bisection isolates the unique crossing.
pub fn analytic_cfl_bound(m: usize) -> Result<f64> {
    let unit = poisson_spectrum(m, 1.0)?;
    let theta = |beta: f64| {
        let r = unit.r * beta;
        r * (unit.eps_hat * beta) / ((1.0 - r) * (1.0 - r))
    };
    let mut lo = 0.0f64;
    let mut hi = (1.0 - 1e-12) / unit.r;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if theta(mid) <= 0.25 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Empirical stability edge of the Poisson iteration, by bisection on beta
/// at a fixed resolution of 5e-4.
///
/// A probe counts as stable only when the iteration converges; a probe that
/// exhausts its budget is retried once with ten times the budget before
/// being classified unstable.
pub fn experimental_cfl_bound(
    m: usize,
    residual: Residual,
    limits: &IterationLimits,
) -> Result<f64> {
    let resolution = 5e-4;
    let classify = |beta: f64| -> Result<bool> {
        let mut cfg = PoissonConfig::new(m, beta);
        cfg.residual = residual;
        cfg.max_iter = limits.max_iter;
        let first = poisson_iterate(&cfg, None);
        let status = if first.status == IterationStatus::MaxIterations {
            cfg.max_iter = limits.max_iter.saturating_mul(10);
            poisson_iterate(&cfg, None).status
        } else {
            first.status
        };
        Ok(status == IterationStatus::Converged)
    };
    let mut lo = 1e-3;
    let mut hi = 1.0;
    if !classify(lo)? {
        return Err(Error::ScanRange(format!("beta = {lo} is not stable")));
    }
    if classify(hi)? {
        return Err(Error::ScanRange(format!("beta = {hi} is not unstable")));
    }
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if classify(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

// ---------------------------------------------------------------------------
// Symmetric tridiagonal eigenvalues, Sturm-count bisection.
// ---------------------------------------------------------------------------

/// All eigenvalues of the symmetric tridiagonal matrix with the given
/// diagonal and off-diagonal, in ascending order.
///
/// Uses the Sturm sequence of leading-minor signs: the number of negative
/// pivots of the shifted LDL^T factorization counts eigenvalues below the
/// shift, and bisection isolates each one. Independent of any eigenvalue
/// formula, which is what makes it usable as an oracle.
pub fn symtridiag_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(n >= 1 && off.len() + 1 == n);
    let radius: f64 = (0..n)
        .map(|i| {
            let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let right = if i < n - 1 { off[i].abs() } else { 0.0 };
            left + right
        })
        .fold(0.0f64, f64::max);
    let lo = diag.iter().fold(f64::INFINITY, |a, &b| a.min(b)) - radius;
    let hi = diag.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) + radius;

    let count_below = |x: f64| -> usize {
        let mut count = 0usize;
        let mut q = diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let denom = if q == 0.0 { 1e-300 } else { q };
            q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };

    let scale = hi.abs().max(lo.abs()).max(1.0);
    (0..n)
        .map(|k| {
            let mut a = lo;
            let mut b = hi;
            while b - a > 1e-14 * scale {
                let mid = 0.5 * (a + b);
                if count_below(mid) > k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}
