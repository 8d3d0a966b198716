//! Exact Catalan and Pfaff-Fuss-Catalan numbers.
//!
//! These integer sequences are the coefficients of the perturbation series
//! analysed elsewhere in the crate. They are computed with exact
//! arbitrary-precision arithmetic; floating point enters only when a caller
//! converts a coefficient (or a coefficient ratio) for series evaluation.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Exact non-negative coefficient count.
pub type BigCount = BigUint;

/// Default cap on the series order accepted by [`catalan`] and
/// [`fuss_catalan`]. Callers that need longer prefixes pass an explicit cap
/// through the `_with_max` variants.
pub const DEFAULT_MAX_ORDER: usize = 64;

/// i-th Catalan number, `(2i)! / (i! (i+1)!)`.
pub fn catalan(i: usize) -> Result<BigCount> {
    catalan_with_max(i, DEFAULT_MAX_ORDER)
}

/// [`catalan`] with an explicit order cap.
pub fn catalan_with_max(i: usize, max_order: usize) -> Result<BigCount> {
    fuss_catalan_with_max(i, 1, max_order)
}

/// Pfaff-Fuss-Catalan number `binom((Z+1)i, i) / (Zi + 1)` for degree `z >= 1`.
pub fn fuss_catalan(i: usize, z: u32) -> Result<BigCount> {
    fuss_catalan_with_max(i, z, DEFAULT_MAX_ORDER)
}

/// [`fuss_catalan`] with an explicit order cap.
pub fn fuss_catalan_with_max(i: usize, z: u32, max_order: usize) -> Result<BigCount> {
    if z == 0 {
        return Err(Error::InvalidDegree(z));
    }
    if i > max_order {
        return Err(Error::OrderCapacity {
            requested: i,
            max: max_order,
        });
    }
    let n = (z as u64 + 1) * i as u64;
    let binom = binomial(n, i as u64);
    let divisor = BigUint::from(z as u64 * i as u64 + 1);
    let rem = &binom % &divisor;
    debug_assert!(rem.is_zero(), "Fuss-Catalan division must be exact");
    Ok(binom / divisor)
}

/// Exact binomial coefficient by multiplicative accumulation. Every
/// intermediate division is exact because each prefix is itself a binomial
/// coefficient.
fn binomial(n: u64, k: u64) -> BigUint {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for j in 0..k {
        acc = acc * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    acc
}

/// Ratio `C(i+1, Z) / C(i, Z)` as a float built from exact integer factors.
///
/// The numerator is the product of the `Z+1` integers following `(Z+1)i`, the
/// denominator is `(i+1)` times the `Z` integers `Zi+2 ..= Zi+Z+1`. Each
/// factor is exactly representable in an f64 for any order reachable in
/// practice, so the only rounding is in the final multiplies and divides.
pub fn fuss_catalan_ratio(i: u64, z: u64) -> f64 {
    debug_assert!(z >= 1);
    let mut ratio = 1.0 / (i + 1) as f64;
    for k in 1..=z + 1 {
        ratio *= ((z + 1) * i + k) as f64;
        if k >= 2 {
            ratio /= (z * i + k) as f64;
        }
    }
    ratio
}
