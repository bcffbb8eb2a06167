//! Special functions and numerical integration for the envelope densities.

mod bessel;
mod gfun;
mod logsum;

pub use bessel::{ln_i0, log_bessel_i0, SERIES_LIMIT};
pub use gfun::{g_function_log, ln_g};
pub use logsum::LogSumExp;

pub use crate::quad::{integrate_nd, QuadOptions, QuadratureResult};

#[cfg(test)]
pub(crate) use gfun::tests::brute_force_ln_g;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_86;

/// Envelope-sampling penalty `χ = ½·log₂(4π / e^{1+γ})` in bits.
pub fn chi() -> f64 {
    0.5 * ((4.0 * std::f64::consts::PI).ln() - (1.0 + EULER_GAMMA)) / std::f64::consts::LN_2
}
