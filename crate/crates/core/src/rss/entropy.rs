//! Joint differential entropies of envelope tuples by adaptive cubature.
//!
//! The integrals run over the positive orthant in polar (two envelopes) or
//! spherical (three envelopes) coordinates. At high SNR the densities
//! concentrate around a ray through the origin; in angular coordinates that
//! ray is a thin slab parallel to the radial axis, which axis-aligned
//! bisection resolves cheaply. The radial range `√n · r_max` contains the
//! whole cube `[0, r_max]ⁿ`, `r_max = 7√(p + max σ²)`.

use std::f64::consts::{FRAC_PI_2, LN_2};

use crate::error::Result;
use crate::params::{ChannelParams, Which};
use crate::quad::{integrate_nd, QuadOptions, QuadratureResult};

use super::pdf::{Pdf2, Pdf3, LOG_UNDERFLOW};

/// Truncation radius per envelope, in units of the envelope RMS.
pub const TRUNCATION_SIGMAS: f64 = 7.0;

/// Per-axis truncation point for the envelopes of `which`.
pub fn truncation(params: &ChannelParams, which: Which) -> f64 {
    let s = match which {
        Which::AB => params.sigma_a2.max(params.sigma_b2),
        Which::AE => params.sigma_a2.max(params.sigma_e2),
        Which::BE => params.sigma_b2.max(params.sigma_e2),
        Which::ABE => params.sigma_max2().max(params.sigma_e2),
    };
    TRUNCATION_SIGMAS * (params.p + s).sqrt()
}

#[derive(Clone, Copy)]
enum Functional {
    Entropy,
    Mass,
}

impl Functional {
    #[inline]
    fn apply(self, lf: f64) -> f64 {
        if lf <= LOG_UNDERFLOW {
            return 0.0;
        }
        match self {
            Functional::Entropy => -lf.exp() * lf / LN_2,
            Functional::Mass => lf.exp(),
        }
    }
}

fn integrate(params: &ChannelParams, which: Which, opts: &QuadOptions, g: Functional) -> Result<QuadratureResult> {
    let r_max = truncation(params, which);
    match which {
        Which::AB | Which::AE | Which::BE => {
            let pair = match which {
                Which::AB => crate::params::Pair::AB,
                Which::AE => crate::params::Pair::AE,
                _ => crate::params::Pair::BE,
            };
            let pdf = Pdf2::new(params, pair)?;
            let f = move |x: &[f64]| {
                let (r, t) = (x[0], x[1]);
                let (s, c) = t.sin_cos();
                r * g.apply(pdf.ln(r * c, r * s))
            };
            integrate_nd(f, &[0.0, 0.0], &[2f64.sqrt() * r_max, FRAC_PI_2], opts)
        }
        Which::ABE => {
            let pdf = Pdf3::new(params)?;
            let f = move |x: &[f64]| {
                let (r, t, u) = (x[0], x[1], x[2]);
                let (st, ct) = t.sin_cos();
                let (su, cu) = u.sin_cos();
                r * r * st * g.apply(pdf.ln(r * st * cu, r * st * su, r * ct))
            };
            integrate_nd(f, &[0.0, 0.0, 0.0], &[3f64.sqrt() * r_max, FRAC_PI_2, FRAC_PI_2], opts)
        }
    }
}

/// `h = −∫ f log₂ f` over the envelopes selected by `which`, in bits.
pub fn joint_entropy(params: &ChannelParams, which: Which, opts: &QuadOptions) -> Result<QuadratureResult> {
    integrate(params, which, opts, Functional::Entropy)
}

/// `∫ f` over the same truncated domain; 1 up to truncation and quadrature
/// error.
pub fn normalization(params: &ChannelParams, which: Which, opts: &QuadOptions) -> Result<QuadratureResult> {
    integrate(params, which, opts, Functional::Mass)
}
