//! The angular coupling function of the three-envelope density,
//!
//! ```text
//! G(α₁,α₂,α₃) = (2π)⁻² ∫∫ exp(α₁cosφ₁ + α₂cosφ₂ + α₃cos(φ₂−φ₁)) dφ₁ dφ₂.
//! ```
//!
//! Integrating over φ₁ first gives a Bessel function of the resultant of the
//! two φ₁-dependent terms, leaving
//!
//! ```text
//! G = (1/2π) ∫₀^{2π} I₀(√(α₁²+α₃²+2α₁α₃cosφ)) e^{α₂cosφ} dφ,
//! ```
//!
//! which is smooth, periodic and even in φ. The trapezoid rule on `[0, π]`
//! is then spectrally accurate; we double the node count until two levels
//! agree to a relative 1e-13 and accumulate in the log domain.

use std::sync::OnceLock;

use super::bessel::ln_i0;
use super::logsum::LogSumExp;
use crate::error::{Error, Result};

const MAX_LEVEL: u32 = 16;
const MIN_LEVEL: u32 = 3;
const CONVERGED: f64 = 1e-13;

fn cos_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = 1usize << MAX_LEVEL;
        (0..=n)
            .map(|k| (std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect()
    })
}

/// `ln G(α₁, α₂, α₃)` for non-negative finite arguments.
pub fn g_function_log(a1: f64, a2: f64, a3: f64) -> Result<f64> {
    for a in [a1, a2, a3] {
        if !a.is_finite() {
            return Err(Error::NonFinite("alpha"));
        }
        if a < 0.0 {
            return Err(Error::NegativeArgument(a));
        }
    }
    Ok(ln_g(a1, a2, a3))
}

/// Unchecked `ln G`; arguments must be finite and non-negative.
pub fn ln_g(a1: f64, a2: f64, a3: f64) -> f64 {
    if a1 == 0.0 || a3 == 0.0 {
        // The φ-dependence of the Bessel argument vanishes and the remaining
        // integral is the integral representation of I₀(α₂).
        return ln_i0(a1 + a3) + ln_i0(a2);
    }
    let table = cos_table();
    let d2 = (a1 - a3) * (a1 - a3);
    let c = 2.0 * a1 * a3;
    let log_integrand = |cos_phi: f64| ln_i0((d2 + c * (1.0 + cos_phi)).sqrt()) + a2 * cos_phi;

    // Level L uses N = 2^L intervals on [0, π]; the mean of the trapezoid
    // weights gives G directly.
    let mut acc = LogSumExp::new();
    let ends_half = std::f64::consts::LN_2;
    acc.add(log_integrand(1.0) - ends_half);
    acc.add(log_integrand(-1.0) - ends_half);
    let n0 = 1usize << MIN_LEVEL;
    let stride0 = 1usize << (MAX_LEVEL - MIN_LEVEL);
    for k in 1..n0 {
        acc.add(log_integrand(table[k * stride0]));
    }
    let mut prev = acc.value() - (n0 as f64).ln();
    for level in MIN_LEVEL + 1..=MAX_LEVEL {
        let n = 1usize << level;
        let stride = 1usize << (MAX_LEVEL - level);
        for k in (1..n).step_by(2) {
            acc.add(log_integrand(table[k * stride]));
        }
        let cur = acc.value() - (n as f64).ln();
        if (cur - prev).abs() < CONVERGED * cur.abs().max(1.0) {
            return cur;
        }
        prev = cur;
    }
    prev
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    /// Direct 2-D periodic trapezoid of the defining double integral.
    pub(crate) fn brute_force_ln_g(a1: f64, a2: f64, a3: f64, n: usize) -> f64 {
        let h = TAU / n as f64;
        let cs: Vec<(f64, f64)> = (0..n).map(|k| ((k as f64 * h).cos(), (k as f64 * h).sin())).collect();
        let shift = a1 + a2 + a3;
        let mut sum = 0.0;
        for &(c1, s1) in &cs {
            let mut row = 0.0;
            for &(c2, s2) in &cs {
                // cos(φ₂ − φ₁) = c2c1 + s2s1
                row += (a1 * c1 + a2 * c2 + a3 * (c2 * c1 + s2 * s1) - shift).exp();
            }
            sum += row;
        }
        shift + (sum / (n * n) as f64).ln()
    }

    #[test]
    fn trivial_values() {
        assert_eq!(g_function_log(0.0, 0.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(g_function_log(2.0, 0.0, 0.0).unwrap(), 0.823_993_541_482_956_3, max_relative = 1e-14);
        assert!(g_function_log(-1.0, 0.0, 0.0).is_err());
        assert!(g_function_log(1.0, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn matches_brute_force_grid() {
        // 2048² grid, frozen from the oracle below; mpmath agrees to 1e-15.
        let oracle = brute_force_ln_g(1.0, 0.5, 0.25, 2048);
        assert!((oracle - 0.339_575_817_737_766_66).abs() < 1e-12);
        assert!((g_function_log(1.0, 0.5, 0.25).unwrap() - oracle).abs() < 1e-9);

        for (a1, a2, a3) in [(3.0, 2.0, 1.5), (20.0, 5.0, 7.0), (0.0, 4.0, 2.5), (6.0, 0.0, 3.0), (0.3, 9.0, 0.0)] {
            let bf = brute_force_ln_g(a1, a2, a3, 1024);
            let g = g_function_log(a1, a2, a3).unwrap();
            assert!((g - bf).abs() < 1e-9, "{a1} {a2} {a3}: {g} vs {bf}");
        }
        // mpmath reference
        assert!((g_function_log(20.0, 5.0, 7.0).unwrap() - 27.372_471_463_084_000_6).abs() < 1e-9);
    }

    #[test]
    fn separable_cases() {
        // G(α₁,0,α₃) = I₀(α₁)I₀(α₃) and G(0,α₂,α₃) = I₀(α₂)I₀(α₃).
        for (x, y) in [(1.5, 2.5), (30.0, 0.2), (100.0, 250.0)] {
            let prod = ln_i0(x) + ln_i0(y);
            assert!((ln_g(x, 0.0, y) - prod).abs() < 1e-9 * prod.abs().max(1.0));
            assert!((ln_g(0.0, x, y) - prod).abs() < 1e-12 * prod.abs().max(1.0));
        }
    }

    #[test]
    fn large_arguments_stay_finite() {
        let v = ln_g(5e4, 300.0, 200.0);
        assert!(v.is_finite());
        // Upper bound: the integrand never exceeds exp(α₁+α₂+α₃).
        assert!(v <= 5e4 + 300.0 + 200.0);
    }
}
