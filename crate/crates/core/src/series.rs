//! Closed-form stability machinery for polynomial nonlinearity.
//!
//! The central object is the nonlinear stability number
//! `theta = r * eps_hat / (1 - r)^(Z+1)`. The perturbation series converges
//! exactly when `theta` stays within the Fuss-Catalan radius
//! `theta_max(Z) = Z^Z / (Z+1)^(Z+1)`, and the stability borders of both the
//! explicit and implicit iterations follow from `theta = theta_max`.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::combinatorics::fuss_catalan_ratio;
use crate::error::{Error, Result};

/// Relative size at which series accumulation stops.
const SERIES_TERM_CUTOFF: f64 = 1e-15;
/// Hard cap on accumulated series terms.
const SERIES_MAX_TERMS: usize = 10_000;
/// Absolute tolerance of the general-degree border bisection.
const BORDER_BISECTION_TOL: f64 = 1e-12;
const BORDER_BISECTION_MAX_ITER: usize = 200;

/// A location in stability-parameter space.
///
/// `r` is the linear stability number, `eps_hat` the combined perturbation
/// amplitude (perturbation parameter times the Z-th power of the initial
/// condition), and `z` the polynomial degree of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityPoint {
    pub r: f64,
    pub eps_hat: f64,
    pub z: u32,
}

impl StabilityPoint {
    pub fn new(r: f64, eps_hat: f64, z: u32) -> Result<Self> {
        if z == 0 {
            return Err(Error::InvalidDegree(z));
        }
        if !r.is_finite() {
            return Err(Error::NonFinite("r"));
        }
        if !eps_hat.is_finite() {
            return Err(Error::NonFinite("eps_hat"));
        }
        Ok(Self { r, eps_hat, z })
    }

    /// Nonlinear stability number `r * eps_hat / (1 - r)^(Z+1)`.
    pub fn theta(&self) -> Result<f64> {
        theta(self)
    }
}

/// Nonlinear stability number of a point. Fails at the pole r = 1.
pub fn theta(p: &StabilityPoint) -> Result<f64> {
    if p.r == 1.0 {
        return Err(Error::PoleAtOne);
    }
    Ok(p.r * p.eps_hat / (1.0 - p.r).powi(p.z as i32 + 1))
}

/// Convergence radius `Z^Z / (Z+1)^(Z+1)` of the degree-Z coefficient series.
///
/// Evaluated as `(Z/(Z+1))^Z / (Z+1)`, which cannot overflow for any degree.
pub fn theta_max(z: u32) -> f64 {
    debug_assert!(z >= 1);
    let zf = z as f64;
    (zf / (zf + 1.0)).powi(z as i32) / (zf + 1.0)
}

/// `theta_max` as an exact rational pair `(Z^Z, (Z+1)^(Z+1))`.
pub fn theta_max_rational(z: u32) -> (BigUint, BigUint) {
    let num = BigUint::from(z).pow(z);
    let den = BigUint::from(z + 1).pow(z + 1);
    (num, den)
}

/// Signed-theta convergence predicate: `|theta| <= theta_max(Z)`.
pub fn theta_within_radius(theta_val: f64, z: u32) -> bool {
    theta_val.abs() <= theta_max(z)
}

/// Exact nonlinear shift `4 theta / ((1-r)(1 + sqrt(1-4 theta))^2)` for the
/// quadratic nonlinearity (degree 1).
pub fn nonlinear_shift(p: &StabilityPoint) -> Result<f64> {
    if p.z != 1 {
        return Err(Error::InvalidDegree(p.z));
    }
    let th = theta(p)?;
    let t_max = theta_max(1);
    if th > t_max {
        return Err(Error::SeriesDiverges {
            theta: th,
            theta_max: t_max,
        });
    }
    let root = (1.0 - 4.0 * th).sqrt();
    Ok(4.0 * th / ((1.0 - p.r) * (1.0 + root) * (1.0 + root)))
}

/// Exact converged solution `U/u0 = (1 + 4 theta/(1+sqrt(1-4 theta))^2)/(1-r)`
/// for the quadratic nonlinearity. Reduces to `1/(1-r)` at eps_hat = 0.
pub fn converged_solution(p: &StabilityPoint) -> Result<f64> {
    if p.z != 1 {
        return Err(Error::InvalidDegree(p.z));
    }
    let th = theta(p)?;
    let t_max = theta_max(1);
    if th > t_max {
        return Err(Error::SeriesDiverges {
            theta: th,
            theta_max: t_max,
        });
    }
    let root = (1.0 - 4.0 * th).sqrt();
    Ok((1.0 + 4.0 * th / ((1.0 + root) * (1.0 + root))) / (1.0 - p.r))
}

/// Converged solution `U/u0 = (1 + sum C(i,Z) theta^i) / (1 - r)` for any
/// degree, with the coefficient series accumulated to the truncation rule.
/// This is the series route that the degree-1 closed form must agree with.
pub fn series_solution(p: &StabilityPoint) -> Result<f64> {
    let th = theta(p)?;
    let t_max = theta_max(p.z);
    if th.abs() > t_max {
        return Err(Error::SeriesDiverges {
            theta: th,
            theta_max: t_max,
        });
    }
    Ok((1.0 + coefficient_series(th, p.z, SERIES_MAX_TERMS, true)) / (1.0 - p.r))
}

/// Partial sum `sum_{i=1}^{terms} C(i,Z) theta^i`.
///
/// Terms are accumulated through exact coefficient ratios so that very long
/// prefixes neither overflow (the raw coefficients exceed f64 range near
/// i = 300) nor underflow (theta^i vanishes first).
pub fn shift_partial_sum(theta_val: f64, z: u32, terms: usize) -> Result<f64> {
    if z == 0 {
        return Err(Error::InvalidDegree(z));
    }
    Ok(coefficient_series(theta_val, z, terms, false))
}

fn coefficient_series(theta_val: f64, z: u32, terms: usize, adaptive: bool) -> f64 {
    if terms == 0 || theta_val == 0.0 {
        return 0.0;
    }
    // C(1, Z) = 1 for every degree.
    let mut term = theta_val;
    let mut sum = term;
    for i in 1..terms {
        term *= fuss_catalan_ratio(i as u64, z as u64) * theta_val;
        sum += term;
        if adaptive && term.abs() < SERIES_TERM_CUTOFF * sum.abs() {
            break;
        }
    }
    sum
}

/// Largest stable linear stability number at a given amplitude and degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorderVerdict {
    /// Largest stable r.
    pub r_max: f64,
    /// Value of theta on the border; equals `theta_max(Z)` up to solver
    /// tolerance (taken as the exact limit at eps_hat = 0).
    pub theta_at_border: f64,
}

/// Stability border of the explicit iteration.
///
/// Degree 1 has the closed parabola `r = 1 + 2e - 2 sqrt(e + e^2)`. Higher
/// degrees solve the canonical polynomial `rt^(Z+1) + b rt = b` with
/// `rt = 1 - r` and `b = (Z+1)^(Z+1) eps_hat / Z^Z` by bisection; the left
/// side is strictly increasing on rt > 0 so the root in (0, 1] is unique,
/// which selects the branch with |r| <= 1.
pub fn explicit_border_r(eps_hat: f64, z: u32) -> Result<BorderVerdict> {
    if z == 0 {
        return Err(Error::InvalidDegree(z));
    }
    if !eps_hat.is_finite() || eps_hat < 0.0 {
        return Err(Error::NegativeEpsHat(eps_hat));
    }
    if eps_hat == 0.0 {
        // Linear limit: the border closes on r = 1 and theta tends to
        // theta_max along it.
        return Ok(BorderVerdict {
            r_max: 1.0,
            theta_at_border: theta_max(z),
        });
    }
    let r_max = if z == 1 {
        1.0 + 2.0 * eps_hat - 2.0 * (eps_hat + eps_hat * eps_hat).sqrt()
    } else {
        let b = theta_max(z).recip() * eps_hat;
        let f = |rt: f64| rt.powi(z as i32 + 1) + b * rt - b;
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        for _ in 0..BORDER_BISECTION_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if f(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < BORDER_BISECTION_TOL {
                break;
            }
        }
        1.0 - 0.5 * (lo + hi)
    };
    let theta_at_border = theta(&StabilityPoint {
        r: r_max,
        eps_hat,
        z,
    })?;
    Ok(BorderVerdict {
        r_max,
        theta_at_border,
    })
}

/// Instability interval of the implicit iteration at quadratic nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImplicitGap {
    pub r_low: f64,
    pub r_high: f64,
}

/// Both roots of `r eps_hat / (1-r)^2 = 1/4`, i.e.
/// `r = 1 + 2e -+ 2 sqrt(e + e^2)`. The iteration is predicted stable for
/// r < r_low and r > r_high and unstable strictly inside; the roots multiply
/// to exactly one.
pub fn implicit_gap(eps_hat: f64) -> Result<ImplicitGap> {
    if !eps_hat.is_finite() || eps_hat < 0.0 {
        return Err(Error::NegativeEpsHat(eps_hat));
    }
    let r_high = 1.0 + 2.0 * eps_hat + 2.0 * (eps_hat + eps_hat * eps_hat).sqrt();
    // The small root loses digits to cancellation at large amplitude;
    // evaluate it through the exact root product r_low * r_high = 1.
    Ok(ImplicitGap {
        r_low: 1.0 / r_high,
        r_high,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(r: f64, eps_hat: f64, z: u32) -> StabilityPoint {
        StabilityPoint { r, eps_hat, z }
    }

    #[test]
    fn theta_direct_substitution() {
        assert_eq!(theta(&pt(0.5, 0.1, 1)).unwrap(), 0.2);
        assert_eq!(theta(&pt(0.5, 0.1, 2)).unwrap(), 0.4);
        assert_eq!(theta(&pt(0.3, 0.0, 1)).unwrap(), 0.0);
        assert_eq!(theta(&pt(1.0, 0.1, 1)), Err(Error::PoleAtOne));
    }

    #[test]
    fn theta_max_small_degrees() {
        assert_eq!(theta_max(1), 0.25);
        assert!((theta_max(2) - 4.0 / 27.0).abs() < 1e-16);
        assert!((theta_max(3) - 27.0 / 256.0).abs() < 1e-16);
        assert!((theta_max(4) - 256.0 / 3125.0).abs() < 1e-16);
        assert!((theta_max(5) - 3125.0 / 46656.0).abs() < 1e-16);
    }

    #[test]
    fn theta_max_rational_pairs() {
        let expect: [(u64, u64); 5] = [(1, 4), (4, 27), (27, 256), (256, 3125), (3125, 46656)];
        for (z, (n, d)) in expect.iter().enumerate() {
            let (num, den) = theta_max_rational(z as u32 + 1);
            assert_eq!(num, BigUint::from(*n));
            assert_eq!(den, BigUint::from(*d));
        }
    }

    #[test]
    fn theta_max_large_degree_stays_finite() {
        // For large Z the radius behaves like 1/(e Z).
        let z = 10_000u32;
        let v = theta_max(z);
        assert!(v.is_finite() && v > 0.0);
        let asymptotic = 1.0 / (std::f64::consts::E * (z as f64 + 1.0));
        assert!((v / asymptotic - 1.0).abs() < 1e-4);
    }

    /// Test-local oracle: the shift series summed from u64 Catalan numbers.
    fn shift_series_oracle(r: f64, eps_hat: f64, terms: usize) -> f64 {
        let mut cat = vec![1u128];
        for i in 1..=terms as u128 {
            let prev = cat[(i - 1) as usize];
            cat.push(prev * 2 * (2 * i - 1) / (i + 1));
        }
        let th = r * eps_hat / ((1.0 - r) * (1.0 - r));
        (1..=terms)
            .map(|i| cat[i] as f64 * th.powi(i as i32))
            .sum::<f64>()
            / (1.0 - r)
    }

    #[test]
    fn shift_vanishes_without_perturbation() {
        for r in [-0.5, 0.0, 0.3, 0.9] {
            assert_eq!(nonlinear_shift(&pt(r, 0.0, 1)).unwrap(), 0.0);
        }
    }

    #[test]
    fn shift_at_interior_point_matches_series_oracle() {
        // theta = 0.03125; 60 terms are converged to machine precision.
        let closed = nonlinear_shift(&pt(0.2, 0.1, 1)).unwrap();
        assert!((closed - 0.04171306613029308).abs() < 1e-15);
        let oracle = shift_series_oracle(0.2, 0.1, 60);
        assert!((closed - oracle).abs() < 1e-12);
    }

    #[test]
    fn shift_at_the_border_is_finite() {
        // theta = 1/4 exactly: shift = 4*(1/4) / ((1-r) * 1) = 1/(1-r).
        let s = nonlinear_shift(&pt(0.5, 0.125, 1)).unwrap();
        assert!((s - 2.0).abs() < 1e-15);
    }

    #[test]
    fn shift_rejects_divergent_theta() {
        assert!(matches!(
            nonlinear_shift(&pt(0.5, 0.2, 1)),
            Err(Error::SeriesDiverges { .. })
        ));
    }

    #[test]
    fn converged_solution_linear_case() {
        assert_eq!(converged_solution(&pt(0.5, 0.0, 1)).unwrap(), 2.0);
    }

    #[test]
    fn converged_solution_unity_at_zero_r() {
        for eps_hat in [0.0, 0.05, 0.2] {
            assert_eq!(converged_solution(&pt(0.0, eps_hat, 1)).unwrap(), 1.0);
        }
    }

    #[test]
    fn converged_solution_at_border_matches_fixed_point_oracle() {
        // Brute-force oracle: U = 1 + 0.5 (1 + 0.125 U) U has its tangent
        // fixed point at exactly 4.
        let mut u = 1.0f64;
        for _ in 0..10_000_000u64 {
            u = 1.0 + 0.5 * (1.0 + 0.125 * u) * u;
        }
        let closed = converged_solution(&pt(0.5, 0.125, 1)).unwrap();
        assert_eq!(closed, 4.0);
        assert!((u - closed).abs() < 1e-3, "tangent approach is algebraic");
    }

    #[test]
    fn series_solution_agrees_with_closed_form() {
        for (r, eps_hat) in [(0.2, 0.1), (0.5, 0.08), (0.7, 0.02), (-0.4, 0.3)] {
            let p = pt(r, eps_hat, 1);
            let a = converged_solution(&p).unwrap();
            let b = series_solution(&p).unwrap();
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "r={r} e={eps_hat}");
        }
    }

    #[test]
    fn partial_sum_examples() {
        assert_eq!(shift_partial_sum(0.0, 3, 50).unwrap(), 0.0);
        // Frozen from the 100-term accumulation; the closed form at
        // theta = 0.2 is 0.38196601125010526.
        let s = shift_partial_sum(0.2, 1, 100).unwrap();
        assert!((s - 0.3819660112496812).abs() < 1e-13);
        // At the radius the partial sums approach 1 from below.
        let s = shift_partial_sum(0.25, 1, 5_000).unwrap();
        assert!(s < 1.0 && s > 0.97);
    }

    #[test]
    fn closed_form_and_long_partial_sums_agree_inside_radius() {
        for th in [0.01, 0.05, 0.1, 0.2] {
            let closed = 4.0 * th / (1.0 + (1.0f64 - 4.0 * th).sqrt()).powi(2);
            let sum = shift_partial_sum(th, 1, 200).unwrap();
            assert!((sum - closed).abs() < 1e-10, "theta={th}");
        }
        // At theta = 0.24 the 200-term truncation error is ~1.2e-6 by the
        // tail estimate; the identity holds only in the k -> infinity limit.
        let closed = 2.0 / 3.0;
        let sum = shift_partial_sum(0.24, 1, 200).unwrap();
        assert!((sum - closed).abs() < 2e-6);
        assert!((shift_partial_sum(0.24, 1, 4_000).unwrap() - closed).abs() < 1e-10);
    }

    #[test]
    fn ratio_test_recovers_radius() {
        for z in 1..=5u32 {
            let ratio = fuss_catalan_ratio(200, z as u64);
            let limit = ratio * theta_max(z);
            assert!((limit - 1.0).abs() < 0.02, "z={z} limit={limit}");
        }
    }

    #[test]
    fn border_examples() {
        assert_eq!(explicit_border_r(0.0, 1).unwrap().r_max, 1.0);
        let b = explicit_border_r(1.0, 1).unwrap();
        assert!((b.r_max - (3.0 - 2.0 * 2.0f64.sqrt())).abs() < 1e-15);
        // Degree 2 at eps_hat = 0.1: root of rt^3 + 0.675 rt = 0.675.
        let b = explicit_border_r(0.1, 2).unwrap();
        assert!((b.theta_at_border - theta_max(2)).abs() < 1e-10);
        let rt = 1.0 - b.r_max;
        assert!((rt.powi(3) + 0.675 * rt - 0.675).abs() < 1e-10);
    }

    #[test]
    fn border_theta_consistency() {
        for &eps_hat in &[0.01, 0.1, 1.0, 10.0] {
            for z in 1..=3u32 {
                let b = explicit_border_r(eps_hat, z).unwrap();
                assert!(
                    (b.theta_at_border - theta_max(z)).abs() < 1e-9,
                    "eps_hat={eps_hat} z={z} theta={}",
                    b.theta_at_border
                );
            }
        }
    }

    #[test]
    fn border_closed_form_and_bisection_agree_at_degree_one() {
        // Route the degree-1 case through the canonical polynomial as well.
        for &eps_hat in &[0.01, 0.1, 0.5, 1.0, 4.0] {
            let closed = explicit_border_r(eps_hat, 1).unwrap().r_max;
            let b = 4.0 * eps_hat;
            let f = |rt: f64| rt * rt + b * rt - b;
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert!((closed - (1.0 - 0.5 * (lo + hi))).abs() < 1e-10);
        }
    }

    #[test]
    fn gap_examples() {
        let g = implicit_gap(0.0).unwrap();
        assert_eq!((g.r_low, g.r_high), (1.0, 1.0));
        let g = implicit_gap(1.0).unwrap();
        assert!((g.r_low - 0.17157287525380990).abs() < 1e-15);
        assert!((g.r_high - 5.82842712474619).abs() < 1e-13);
        let g = implicit_gap(0.25).unwrap();
        assert!((g.r_low - (1.5 - 2.0 * 0.3125f64.sqrt())).abs() < 1e-15);
        assert!((g.r_high - (1.5 + 2.0 * 0.3125f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn negative_eps_hat_is_rejected() {
        assert!(matches!(
            explicit_border_r(-0.1, 1),
            Err(Error::NegativeEpsHat(_))
        ));
        assert!(matches!(implicit_gap(-0.1), Err(Error::NegativeEpsHat(_))));
    }

    proptest! {
        #[test]
        fn gap_roots_multiply_to_one(eps_hat in 0.0f64..100.0) {
            let g = implicit_gap(eps_hat).unwrap();
            prop_assert!((g.r_low * g.r_high - 1.0).abs() < 1e-12);
        }

        #[test]
        fn border_decreases_with_amplitude(
            e1 in 1e-3f64..10.0,
            factor in 1.01f64..10.0,
            z in 1u32..=3,
        ) {
            let r1 = explicit_border_r(e1, z).unwrap().r_max;
            let r2 = explicit_border_r(e1 * factor, z).unwrap().r_max;
            prop_assert!(r2 < r1);
        }

        #[test]
        fn border_decreases_with_degree(e in 1e-3f64..10.0, z in 1u32..=4) {
            let r1 = explicit_border_r(e, z).unwrap().r_max;
            let r2 = explicit_border_r(e, z + 1).unwrap().r_max;
            prop_assert!(r2 < r1);
        }

        #[test]
        fn partial_sum_monotone_in_terms(th in 1e-4f64..0.24, n in 1usize..100) {
            // Strictly increasing in exact arithmetic; in floats the tail
            // terms eventually fall below one ulp of the sum.
            let a = shift_partial_sum(th, 1, n).unwrap();
            let b = shift_partial_sum(th, 1, n + 1).unwrap();
            prop_assert!(b >= a);
        }
    }
}
