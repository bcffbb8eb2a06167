//! Secret-key capacity bounds when the parties only sample the envelope
//! (received signal strength) of their channel estimates.
//!
//! Single-envelope entropies are closed form (Rayleigh); joint entropies are
//! computed by cubature over the exact joint densities, and the mutual
//! informations are assembled from them. Every derived quantity carries the
//! root-sum-square of the quadrature error estimates that went into it.

mod entropy;
mod pdf;

use serde::{Deserialize, Serialize};

pub use entropy::{joint_entropy, normalization, truncation, TRUNCATION_SIGMAS};
pub use pdf::{log_pdf2, log_pdf2_high_snr, log_pdf3, log_pdf_rayleigh, Pdf2, Pdf3, LOG_UNDERFLOW};

use crate::error::{Error, Result};
use crate::par::Exec;
use crate::params::{ChannelParams, Pair, Party, Which};
use crate::quad::{QuadOptions, QuadratureResult};
use crate::specfun::{chi, EULER_GAMMA};

/// Quadrature settings for envelope computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RssOptions {
    /// Absolute tolerance for two-envelope entropies, bits.
    pub tol2: f64,
    /// Absolute tolerance for the three-envelope entropy, bits.
    pub tol3: f64,
    pub exec: Exec,
}

impl Default for RssOptions {
    fn default() -> Self {
        Self {
            tol2: 1e-5,
            tol3: 1e-3,
            exec: Exec::default(),
        }
    }
}

impl RssOptions {
    pub fn quad(&self, which: Which) -> QuadOptions {
        let tol = match which {
            Which::ABE => self.tol3,
            _ => self.tol2,
        };
        QuadOptions::with_tol(tol).exec(self.exec)
    }
}

/// A value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }
}

fn rss(errors: &[f64]) -> f64 {
    errors.iter().map(|e| e * e).sum::<f64>().sqrt()
}

/// Quadrature diagnostics of the joint entropies behind a report. `None`
/// where the entropy was not needed (exact independence).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EntropyDiagnostics {
    pub ab: Option<QuadratureResult>,
    pub ae: Option<QuadratureResult>,
    pub be: Option<QuadratureResult>,
    pub abe: Option<QuadratureResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RssCapacityReport {
    pub h_ra: f64,
    pub h_rb: f64,
    pub h_re: f64,
    pub mi_ab: Estimate,
    pub mi_ae: Estimate,
    pub mi_be: Estimate,
    pub cond_mi_ab_given_e: Estimate,
    /// May be negative.
    pub lower_bound: Estimate,
    pub lower_bound_clamped: f64,
    pub upper_bound: Estimate,
    pub diagnostics: EntropyDiagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RssHighSnr {
    pub mi_ab_asym: f64,
    pub mi_ae_asym: f64,
    pub mi_be_asym: f64,
    pub lb_asym: f64,
    pub chi: f64,
}

/// Differential entropy (bits) of a Rayleigh envelope with `E[R²] = v`.
pub fn rayleigh_entropy(total_variance: f64) -> Result<f64> {
    if !(total_variance > 0.0) || !total_variance.is_finite() {
        return Err(Error::NonPositiveVariance(total_variance));
    }
    Ok(0.5 * (total_variance / 4.0).log2() + 0.5 * (2.0 + EULER_GAMMA) / std::f64::consts::LN_2)
}

fn h_a(c: &ChannelParams) -> Result<f64> {
    rayleigh_entropy(c.p + c.sigma_a2)
}

fn h_b(c: &ChannelParams) -> Result<f64> {
    rayleigh_entropy(c.p + c.sigma_b2)
}

fn h_e(c: &ChannelParams) -> Result<f64> {
    rayleigh_entropy(c.p + c.sigma_e2)
}

fn mi2_with(params: &ChannelParams, pair: Pair, opts: &RssOptions) -> Result<(Estimate, QuadratureResult)> {
    let c = params.validate()?;
    let (h1, h2) = match pair {
        Pair::AB => (h_a(&c)?, h_b(&c)?),
        Pair::AE => (h_a(&c)?, h_e(&c)?),
        Pair::BE => (h_b(&c)?, h_e(&c)?),
    };
    let which = Which::from(pair);
    let h12 = joint_entropy(&c, which, &opts.quad(which))?;
    Ok((
        Estimate {
            value: h1 + h2 - h12.value,
            error: h12.error_estimate,
        },
        h12,
    ))
}

/// `I(R̂_X; R̂_Y) = h(R̂_X) + h(R̂_Y) − h(R̂_X, R̂_Y)`.
pub fn mi2(params: &ChannelParams, pair: Pair, opts: &RssOptions) -> Result<Estimate> {
    mi2_with(params, pair, opts).map(|(e, _)| e)
}

/// `I(R̂_A; R̂_B | R̂_E) = h(R̂_A,R̂_E) − h(R̂_E) + h(R̂_B,R̂_E) − h(R̂_A,R̂_B,R̂_E)`.
pub fn cond_mi(params: &ChannelParams, opts: &RssOptions) -> Result<Estimate> {
    let c = params.validate()?;
    let ae = joint_entropy(&c, Which::AE, &opts.quad(Which::AE))?;
    let be = joint_entropy(&c, Which::BE, &opts.quad(Which::BE))?;
    let abe = joint_entropy(&c, Which::ABE, &opts.quad(Which::ABE))?;
    cond_mi_from(&c, &ae, &be, &abe)
}

fn cond_mi_from(c: &ChannelParams, ae: &QuadratureResult, be: &QuadratureResult, abe: &QuadratureResult) -> Result<Estimate> {
    Ok(Estimate {
        value: ae.value - h_e(c)? + be.value - abe.value,
        error: rss(&[ae.error_estimate, be.error_estimate, abe.error_estimate]),
    })
}

/// Envelope lower and upper bounds with all intermediate quantities.
///
/// With `ρ = 0` Eve's envelope is independent of the legitimate ones, so her
/// mutual informations are exactly zero and the conditional MI equals
/// `I(R̂_A; R̂_B)`; those integrals are skipped.
pub fn bounds(params: &ChannelParams, opts: &RssOptions) -> Result<RssCapacityReport> {
    let c = params.validate()?;
    let mut diag = EntropyDiagnostics::default();
    let (ab, hab) = mi2_with(&c, Pair::AB, opts)?;
    diag.ab = Some(hab);

    let (ae, be, cond) = if c.rho_abs2() == 0.0 {
        (Estimate::exact(0.0), Estimate::exact(0.0), ab)
    } else {
        let (ae, hae) = mi2_with(&c, Pair::AE, opts)?;
        let (be, hbe) = mi2_with(&c, Pair::BE, opts)?;
        let habe = joint_entropy(&c, Which::ABE, &opts.quad(Which::ABE))?;
        diag.ae = Some(hae);
        diag.be = Some(hbe);
        diag.abe = Some(habe);
        (ae, be, cond_mi_from(&c, &hae, &hbe, &habe)?)
    };

    let leak = if ae.value <= be.value { ae } else { be };
    let lb = Estimate {
        value: ab.value - leak.value,
        error: rss(&[ab.error, leak.error]),
    };
    let ub = if ab.value <= cond.value { ab } else { cond };
    Ok(RssCapacityReport {
        h_ra: h_a(&c)?,
        h_rb: h_b(&c)?,
        h_re: h_e(&c)?,
        mi_ab: ab,
        mi_ae: ae,
        mi_be: be,
        cond_mi_ab_given_e: cond,
        lower_bound: lb,
        lower_bound_clamped: lb.value.max(0.0),
        upper_bound: ub,
        diagnostics: diag,
    })
}

/// Leading high-SNR behaviour of the envelope quantities.
pub fn high_snr(params: &ChannelParams) -> Result<RssHighSnr> {
    let c = params.validate()?;
    let s = c.sigma_a2 + c.sigma_b2;
    if s <= 0.0 {
        return Err(Error::InfiniteMi);
    }
    let chi = chi();
    let leak = |party: Party| {
        let d = c.p * (1.0 - c.rho_abs2()) + c.noise(party) + c.sigma_e2;
        if d <= 0.0 {
            return Err(Error::InfiniteMi);
        }
        Ok(0.5 * (c.p / d).log2() - chi)
    };
    let d_star = c.p * (1.0 - c.rho_abs2()) + c.sigma_max2() + c.sigma_e2;
    let lb_asym = if d_star > 0.0 {
        0.5 * ((c.p / s).log2() - (c.p / d_star).log2())
    } else {
        f64::NEG_INFINITY
    };
    Ok(RssHighSnr {
        mi_ab_asym: 0.5 * (c.p / s).log2() - chi,
        mi_ae_asym: leak(Party::A)?,
        mi_be_asym: leak(Party::B)?,
        lb_asym,
        chi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rayleigh_entropy_values() {
        // ½log₂(e^{2+γ}), mpmath
        assert!((rayleigh_entropy(4.0).unwrap() - 1.859_068_129_527_397).abs() < 1e-14);
        assert!((rayleigh_entropy(2.0).unwrap() - 1.359_068_129_527_397).abs() < 1e-14);
        let d = rayleigh_entropy(12.0).unwrap() - rayleigh_entropy(3.0).unwrap();
        assert!((d - 1.0).abs() < 1e-14);
        assert_eq!(rayleigh_entropy(0.0), Err(Error::NonPositiveVariance(0.0)));
    }

    #[test]
    fn high_snr_values() {
        let p = ChannelParams::with_real_rho(1.0, 0.001, 0.001, 0.001, 0.9);
        let h = high_snr(&p).unwrap();
        assert!((h.mi_ab_asym - 3.794_865).abs() < 1e-6);
        assert!((h.lb_asym - 0.5 * (500f64.log2() - (1.0f64 / 0.192).log2())).abs() < 1e-12);
        assert!((h.lb_asym - 3.292_481).abs() < 1e-6);
        let q = ChannelParams::with_real_rho(1.0, 1.0, 1.0, 1.0, 0.0);
        assert!((high_snr(&q).unwrap().mi_ab_asym + 1.188_027).abs() < 1e-6);
    }
}
