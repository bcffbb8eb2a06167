//! Joint densities of the observation envelopes `R̂_X = |Ĥ_X|`.
//!
//! Every density is evaluated in the log domain. The pieces that grow with
//! SNR (Bessel arguments and Gaussian exponents) cancel to a moderate value,
//! so they are combined as logs and only the final result is exponentiated.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::params::{ChannelParams, Pair};
use crate::specfun::{ln_g, ln_i0};

/// `ln f` at or below this is treated as zero density.
pub const LOG_UNDERFLOW: f64 = -745.0;

fn check_det(det: f64, params: &ChannelParams) -> Result<()> {
    let threshold = params.degenerate_threshold();
    if det < threshold || !det.is_finite() {
        return Err(Error::DegeneratePdf { det, threshold });
    }
    Ok(())
}

/// Precomputed bivariate envelope density of a pair.
#[derive(Debug, Clone, Copy)]
pub struct Pdf2 {
    ln_pref: f64,
    bessel: f64,
    q1: f64,
    q2: f64,
}

impl Pdf2 {
    pub fn new(params: &ChannelParams, pair: Pair) -> Result<Self> {
        let c = params.validate()?;
        let det = c.det_pair(pair);
        check_det(det, &c)?;
        let (s1, s2) = c.pair_noises(pair);
        let rho = c.pair_correlation(pair);
        Ok(Self {
            ln_pref: 2.0 * LN_2 - det.ln(),
            bessel: 2.0 * c.p * rho / det,
            q1: (c.p + s2) / det,
            q2: (c.p + s1) / det,
        })
    }

    #[inline]
    pub fn ln(&self, r1: f64, r2: f64) -> f64 {
        if !(r1 > 0.0 && r2 > 0.0) {
            return f64::NEG_INFINITY;
        }
        let x = self.bessel * r1 * r2;
        let base = self.ln_pref + r1.ln() + r2.ln() - self.q1 * r1 * r1 - self.q2 * r2 * r2;
        // ln I₀(x) ≤ x
        if base + x < LOG_UNDERFLOW {
            return f64::NEG_INFINITY;
        }
        base + ln_i0(x)
    }
}

/// Precomputed trivariate envelope density of `(R̂_A, R̂_B, R̂_E)`.
#[derive(Debug, Clone, Copy)]
pub struct Pdf3 {
    ln_pref: f64,
    k1: f64,
    k2: f64,
    k3: f64,
    qa: f64,
    qb: f64,
    qe: f64,
}

impl Pdf3 {
    pub fn new(params: &ChannelParams) -> Result<Self> {
        let c = params.validate()?;
        let det = c.det_abe();
        check_det(det, &c)?;
        let r = c.rho_abs();
        let p = c.p;
        Ok(Self {
            ln_pref: 3.0 * LN_2 - det.ln(),
            k1: 2.0 * p * (p * (1.0 - c.rho_abs2()) + c.sigma_e2) / det,
            k2: 2.0 * r * p * c.sigma_b2 / det,
            k3: 2.0 * r * p * c.sigma_a2 / det,
            qa: c.det_pair(Pair::BE) / det,
            qb: c.det_pair(Pair::AE) / det,
            qe: c.det_pair(Pair::AB) / det,
        })
    }

    /// The three arguments of `G` at a point.
    pub fn alphas(&self, ra: f64, rb: f64, re: f64) -> [f64; 3] {
        [self.k1 * ra * rb, self.k2 * ra * re, self.k3 * rb * re]
    }

    #[inline]
    pub fn ln(&self, ra: f64, rb: f64, re: f64) -> f64 {
        if !(ra > 0.0 && rb > 0.0 && re > 0.0) {
            return f64::NEG_INFINITY;
        }
        let [a1, a2, a3] = self.alphas(ra, rb, re);
        let base = self.ln_pref + ra.ln() + rb.ln() + re.ln()
            - self.qa * ra * ra
            - self.qb * rb * rb
            - self.qe * re * re;
        // ln G ≤ α₁+α₂+α₃
        if base + a1 + a2 + a3 < LOG_UNDERFLOW {
            return f64::NEG_INFINITY;
        }
        base + ln_g(a1, a2, a3)
    }
}

/// `ln f_{R̂_X}(r)`: Rayleigh with `E[R²] = v`.
pub fn log_pdf_rayleigh(v: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return f64::NEG_INFINITY;
    }
    (2.0 * r / v).ln() - r * r / v
}

fn check_envelopes(rs: &[f64]) -> Result<()> {
    for &r in rs {
        if r.is_nan() || r == f64::INFINITY {
            return Err(Error::NonFinite("envelope"));
        }
        if r < 0.0 {
            return Err(Error::NegativeArgument(r));
        }
    }
    Ok(())
}

/// Natural log of the joint envelope density of a pair.
pub fn log_pdf2(params: &ChannelParams, pair: Pair, r1: f64, r2: f64) -> Result<f64> {
    check_envelopes(&[r1, r2])?;
    Ok(Pdf2::new(params, pair)?.ln(r1, r2))
}

/// Natural log of the joint density of all three envelopes.
pub fn log_pdf3(params: &ChannelParams, ra: f64, rb: f64, re: f64) -> Result<f64> {
    check_envelopes(&[ra, rb, re])?;
    Ok(Pdf3::new(params)?.ln(ra, rb, re))
}

/// Limiting form of the pair density when the noises vanish (and, for
/// pairs with Eve, `|ρ| → 1`): a Rayleigh law of mean square `p` for one
/// envelope times a normal law for the other around its scaled value.
///
/// For `AB` the Rayleigh factor is on `r1`; for `AE`/`BE` it is on Eve's
/// envelope `r2`.
pub fn log_pdf2_high_snr(params: &ChannelParams, pair: Pair, r1: f64, r2: f64) -> Result<f64> {
    let c = params.validate()?;
    check_envelopes(&[r1, r2])?;
    let (s1, s2) = c.pair_noises(pair);
    let rho = c.pair_correlation(pair);
    let v = c.p * (1.0 - rho * rho) + s1 + s2;
    if v <= 0.0 {
        let threshold = c.degenerate_threshold();
        return Err(Error::DegeneratePdf { det: v, threshold });
    }
    let (ray, norm, mean) = match pair {
        Pair::AB => (r1, r2, r1),
        Pair::AE | Pair::BE => (r2, r1, rho * r2),
    };
    let d = norm - mean;
    Ok(log_pdf_rayleigh(c.p, ray) - d * d / v - 0.5 * (PI * v).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::brute_force_ln_g;

    fn unit(rho: f64) -> ChannelParams {
        ChannelParams::with_real_rho(1.0, 1.0, 1.0, 1.0, rho)
    }

    #[test]
    fn pair_density_example() {
        assert_eq!(log_pdf2(&unit(0.9), Pair::AB, 0.0, 1.0).unwrap(), f64::NEG_INFINITY);
        // (4/3)·I₀(2/3)·e^{−4/3}, I₀(2/3) = 1.1142359006… (mpmath)
        let f = log_pdf2(&unit(0.9), Pair::AB, 1.0, 1.0).unwrap().exp();
        let expect = 4.0 / 3.0 * 1.114_235_900_602_199_3 * (-4.0f64 / 3.0).exp();
        assert!((f - expect).abs() < 1e-14);
        assert!((f - 0.391_613).abs() < 1e-6);
    }

    #[test]
    fn independent_pair_factorizes() {
        let p = ChannelParams::with_real_rho(1.0, 0.4, 1.0, 2.5, 0.0);
        for (r1, r2) in [(0.3, 1.2), (2.0, 0.1), (1.0, 1.0)] {
            let joint = log_pdf2(&p, Pair::AE, r1, r2).unwrap();
            let prod = log_pdf_rayleigh(1.4, r1) + log_pdf_rayleigh(3.5, r2);
            assert!((joint - prod).abs() < 1e-13);
        }
    }

    #[test]
    fn triple_density_edges_and_factorization() {
        assert_eq!(log_pdf3(&unit(0.9), 1.0, 0.0, 1.0).unwrap(), f64::NEG_INFINITY);
        let p = ChannelParams::with_real_rho(1.0, 0.3, 0.7, 0.2, 0.0);
        for (a, b, e) in [(0.5, 0.6, 1.0), (1.5, 1.1, 0.2)] {
            let lhs = log_pdf3(&p, a, b, e).unwrap();
            let rhs = log_pdf2(&p, Pair::AB, a, b).unwrap() + log_pdf_rayleigh(1.2, e);
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn triple_density_against_brute_force_g() {
        let p = unit(0.9);
        let pdf = Pdf3::new(&p).unwrap();
        let [a1, a2, a3] = pdf.alphas(1.0, 1.0, 1.0);
        let direct = pdf.ln_pref + brute_force_ln_g(a1, a2, a3, 1024) - pdf.qa - pdf.qb - pdf.qe;
        assert!((log_pdf3(&p, 1.0, 1.0, 1.0).unwrap() - direct).abs() < 1e-9);
    }

    #[test]
    fn phase_of_rho_is_irrelevant() {
        let p = ChannelParams::with_real_rho(1.0, 0.5, 0.2, 0.1, 0.7);
        let q = p.with_rho_phase(2.1);
        let a = log_pdf3(&p, 0.8, 0.9, 0.7).unwrap();
        let b = log_pdf3(&q, 0.8, 0.9, 0.7).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn degenerate_densities_are_rejected() {
        let p = ChannelParams::with_real_rho(1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matches!(log_pdf2(&p, Pair::AB, 1.0, 1.0), Err(Error::DegeneratePdf { .. })));
        assert!(matches!(log_pdf3(&p, 1.0, 1.0, 1.0), Err(Error::DegeneratePdf { .. })));
        assert!(matches!(
            log_pdf2_high_snr(&p, Pair::AB, 1.0, 1.0),
            Err(Error::DegeneratePdf { .. })
        ));
        assert!(log_pdf2(&unit(0.5), Pair::AB, -1.0, 1.0).is_err());
    }

    #[test]
    fn huge_arguments_stay_finite() {
        let p = ChannelParams::with_real_rho(1.0, 1e-6, 1e-6, 1e-6, 0.999);
        let v = log_pdf3(&p, 1.0, 1.0, 0.999).unwrap();
        assert!(v.is_finite());
        let v = log_pdf2(&p, Pair::AB, 1.0, 1.0005).unwrap();
        assert!(v.is_finite());
    }
}
