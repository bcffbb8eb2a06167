//! Natural log of the modified Bessel function `I₀`.
//!
//! Two branches: the ascending power series `Σ (x/2)^{2k}/(k!)²` below
//! [`SERIES_LIMIT`], and the large-argument expansion
//! `e^x/√(2πx) · Σ ((2k−1)!!)²/(k! 8^k x^k)` above it. Both are summed
//! until the next term drops below double-precision resolution, which keeps
//! the relative error of `I₀` near 1e-16 on either side of the switchover.

use crate::error::{Error, Result};

/// Switchover between the series and the asymptotic expansion.
pub const SERIES_LIMIT: f64 = 20.0;

const TERM_EPS: f64 = 1e-17;

/// `ln I₀(x)` for `x ≥ 0`.
pub fn log_bessel_i0(x: f64) -> Result<f64> {
    if x.is_nan() || x == f64::INFINITY {
        return Err(Error::NonFinite("x"));
    }
    if x < 0.0 {
        return Err(Error::NegativeArgument(x));
    }
    Ok(ln_i0(x))
}

/// Unchecked `ln I₀(x)`; callers guarantee `x ≥ 0` and finite.
#[inline]
pub fn ln_i0(x: f64) -> f64 {
    if x < SERIES_LIMIT {
        ln_i0_series(x)
    } else {
        ln_i0_asymptotic(x)
    }
}

#[inline]
pub(crate) fn ln_i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < TERM_EPS * sum {
            break;
        }
        k += 1.0;
    }
    sum.ln()
}

#[inline]
pub(crate) fn ln_i0_asymptotic(x: f64) -> f64 {
    let inv8x = 1.0 / (8.0 * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    // Terms shrink until k ≈ 2x; for x ≥ 20 that is far past double resolution.
    while k < 60.0 {
        let m = 2.0 * k - 1.0;
        term *= m * m * inv8x / k;
        sum += term;
        if term < TERM_EPS {
            break;
        }
        k += 1.0;
    }
    x - 0.5 * (std::f64::consts::TAU * x).ln() + sum.ln()
}
