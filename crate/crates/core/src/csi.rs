//! Secret-key capacity bounds when the parties sample the full complex
//! channel estimate. Everything here is closed form.
//!
//! All logs are base 2; results are in bits per channel observation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ChannelParams, Pair, Party};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsiCapacityReport {
    pub mi_ab: f64,
    pub mi_ae: f64,
    pub mi_be: f64,
    pub cond_mi_ab_given_e: f64,
    /// `I(A;B) − min(I(A;E), I(B;E))`, may be negative.
    pub lower_bound: f64,
    pub lower_bound_clamped: f64,
    pub upper_bound: f64,
    /// Eve independent: the bounds coincide.
    pub rho_zero: bool,
    /// Alice noiseless: `B − A − E` is a Markov chain and the bounds coincide.
    pub sigma_a_zero: bool,
    /// Bob noiseless: `A − B − E` is a Markov chain and the bounds coincide.
    pub sigma_b_zero: bool,
}

impl CsiCapacityReport {
    pub fn is_tight(&self) -> bool {
        self.rho_zero || self.sigma_a_zero || self.sigma_b_zero
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// The lower bound is positive iff `σ²_E` exceeds this. May be negative.
    pub sigma_e2_min: f64,
    /// The lower bound is positive iff `|ρ|²` is below this. May exceed 1.
    pub rho_sq_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsiHighSnr {
    pub mi_ab_asym: f64,
    pub lb_asym: f64,
    /// `None` when `|ρ| = 1`.
    pub capacity_asym: Option<f64>,
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// `I(Ĥ_A; Ĥ_B) = log₂(1 + p / (σ²_A + σ²_B + σ²_Aσ²_B/p))`.
pub fn mi_ab(params: &ChannelParams) -> Result<f64> {
    let c = params.validate()?;
    let s = c.sigma_a2 + c.sigma_b2 + c.sigma_a2 * c.sigma_b2 / c.p;
    if s <= 0.0 {
        return Err(Error::InfiniteMi);
    }
    Ok(log2_1p(c.p / s))
}

/// `I(Ĥ_X; Ĥ_E)` for `X ∈ {A, B}`.
pub fn mi_with_eve(params: &ChannelParams, party: Party) -> Result<f64> {
    let c = params.validate()?;
    let (sx, se) = c.pair_noises(party.with_eve());
    let r2 = c.rho_abs2();
    if r2 == 0.0 {
        return Ok(0.0);
    }
    let d = c.p * (1.0 - r2) + sx + se + sx * se / c.p;
    if d <= 0.0 {
        return Err(Error::InfiniteMi);
    }
    Ok(log2_1p(c.p * r2 / d))
}

/// `I(Ĥ_A; Ĥ_B | Ĥ_E) = log₂(|C_AE||C_BE| / ((p+σ²_E)|C_ABE|))`.
pub fn cond_mi(params: &ChannelParams) -> Result<f64> {
    let c = params.validate()?;
    if c.rho_abs2() == 0.0 {
        return mi_ab(&c);
    }
    let det = c.det_abe();
    if !(det > 0.0) {
        return Err(Error::DegenerateCovariance(det));
    }
    let ratio = c.det_pair(Pair::AE) * c.det_pair(Pair::BE) / ((c.p + c.sigma_e2) * det);
    Ok(ratio.log2().max(0.0))
}

pub fn bounds(params: &ChannelParams) -> Result<CsiCapacityReport> {
    let c = params.validate()?;
    let ab = mi_ab(&c)?;
    let ae = mi_with_eve(&c, Party::A)?;
    let be = mi_with_eve(&c, Party::B)?;
    let cond = cond_mi(&c)?;
    let lb = ab - ae.min(be);
    Ok(CsiCapacityReport {
        mi_ab: ab,
        mi_ae: ae,
        mi_be: be,
        cond_mi_ab_given_e: cond,
        lower_bound: lb,
        lower_bound_clamped: lb.max(0.0),
        upper_bound: ab.min(cond),
        rho_zero: c.rho_abs2() == 0.0,
        sigma_a_zero: c.sigma_a2 == 0.0,
        sigma_b_zero: c.sigma_b2 == 0.0,
    })
}

/// Eve-noise and correlation limits beyond which the lower bound turns
/// non-positive.
pub fn thresholds(params: &ChannelParams) -> Result<Thresholds> {
    let c = params.validate()?;
    let r2 = c.rho_abs2();
    let smin = c.sigma_min2();
    Ok(Thresholds {
        sigma_e2_min: c.p * (r2 - 1.0) + r2 * smin,
        rho_sq_max: (c.p + c.sigma_e2) / (c.p + smin),
    })
}

/// Leading high-SNR terms of the complex-sampling quantities.
pub fn high_snr(params: &ChannelParams) -> Result<CsiHighSnr> {
    let c = params.validate()?;
    let s = c.sigma_a2 + c.sigma_b2;
    if s <= 0.0 {
        return Err(Error::InfiniteMi);
    }
    let r2 = c.rho_abs2();
    let mi_ab_asym = (c.p / s).log2();
    let lb_asym = mi_ab_asym - (c.p / (c.p * (1.0 - r2) + c.sigma_max2() + c.sigma_e2)).log2();
    Ok(CsiHighSnr {
        mi_ab_asym,
        lb_asym,
        capacity_asym: capacity_asym(&c).ok(),
    })
}

/// High-SNR secret-key capacity `log₂(p(1−|ρ|²)/(σ²_A+σ²_B))`.
pub fn capacity_asym(params: &ChannelParams) -> Result<f64> {
    let c = params.validate()?;
    let s = c.sigma_a2 + c.sigma_b2;
    if s <= 0.0 {
        return Err(Error::InfiniteMi);
    }
    let r2 = c.rho_abs2();
    if r2 >= 1.0 {
        return Err(Error::AsymptoticUndefined);
    }
    Ok((c.p * (1.0 - r2) / s).log2())
}

/// The same MIs written as ratios of covariance determinants, evaluated
/// from the explicit matrices. Used to cross-check the simplified forms.
pub fn determinant_forms(params: &ChannelParams) -> Result<[f64; 4]> {
    use crate::params::{covariance, Which};
    let c = params.validate()?;
    let d = |w| covariance(&c, w).map(|m| m.determinant());
    let (ab, ae, be, abe) = (d(Which::AB)?, d(Which::AE)?, d(Which::BE)?, d(Which::ABE)?);
    let (pa, pb, pe) = (c.p + c.sigma_a2, c.p + c.sigma_b2, c.p + c.sigma_e2);
    Ok([
        (pa * pb / ab).log2(),
        (pa * pe / ae).log2(),
        (pb * pe / be).log2(),
        (ae * be / (pe * abe)).log2(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::sigma2_from_snr_db;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn all_noise(sigma2: f64, rho: f64) -> ChannelParams {
        ChannelParams::with_real_rho(1.0, sigma2, sigma2, sigma2, rho)
    }

    #[test]
    fn mi_ab_examples() {
        close(mi_ab(&all_noise(1.0, 0.9)).unwrap(), 0.415037, 1e-6);
        close(mi_ab(&all_noise(0.001, 0.9)).unwrap(), 8.967947, 1e-6);
        assert_eq!(mi_ab(&ChannelParams::with_real_rho(1.0, 1.0, 0.0, 1.0, 0.0)).unwrap(), 1.0);
        assert_eq!(mi_ab(&ChannelParams::with_real_rho(1.0, 0.0, 0.0, 1.0, 0.0)), Err(Error::InfiniteMi));
    }

    #[test]
    fn mi_with_eve_examples() {
        assert_eq!(mi_with_eve(&all_noise(0.3, 0.0), Party::A).unwrap(), 0.0);
        close(mi_with_eve(&all_noise(1.0, 0.9), Party::A).unwrap(), 0.415037 - 0.088594, 2e-6);
        let tiny = ChannelParams::with_real_rho(1.0, 1e-12, 1.0, 1e-12, 0.9);
        close(mi_with_eve(&tiny, Party::A).unwrap(), (1.0f64 / 0.19).log2(), 1e-9);
        let degenerate = ChannelParams::with_real_rho(1.0, 0.0, 1.0, 0.0, 1.0);
        assert_eq!(mi_with_eve(&degenerate, Party::A), Err(Error::InfiniteMi));
    }

    #[test]
    fn cond_mi_examples() {
        let p = all_noise(0.7, 0.0);
        assert_eq!(cond_mi(&p).unwrap(), mi_ab(&p).unwrap());
        close(cond_mi(&all_noise(1.0, 0.9)).unwrap(), 0.216182, 1e-6);
        let fig5 = ChannelParams::with_real_rho(1.0, 0.01, 0.01, 0.001, 0.8);
        close(cond_mi(&fig5).unwrap(), 4.231539, 1e-6);
    }

    #[test]
    fn bounds_examples() {
        let r = bounds(&all_noise(1.0, 0.9)).unwrap();
        close(r.lower_bound, 0.088594, 1e-6);
        close(r.upper_bound, 0.216182, 1e-6);
        assert!(!r.is_tight());

        let s = sigma2_from_snr_db(1.0, 5.0);
        let fig4 = ChannelParams::with_real_rho(1.0, 0.001, s, s, 0.6);
        let r = bounds(&fig4).unwrap();
        close(r.lower_bound, 1.716764, 1e-6);
        close(r.upper_bound, 1.716766, 1e-6);

        let r = bounds(&all_noise(0.2, 0.0)).unwrap();
        assert_eq!(r.lower_bound, r.mi_ab);
        assert_eq!(r.upper_bound, r.mi_ab);
        assert!(r.rho_zero);
    }

    #[test]
    fn negative_lower_bound_is_reported_raw() {
        let r = bounds(&ChannelParams::with_real_rho(1.0, 1.0, 1.0, 0.0, 1.0)).unwrap();
        assert!(r.lower_bound < 0.0);
        assert_eq!(r.lower_bound_clamped, 0.0);
    }

    #[test]
    fn noiseless_party_makes_bounds_tight() {
        let r = bounds(&ChannelParams::with_real_rho(1.0, 0.3, 0.0, 0.2, 0.7)).unwrap();
        assert!(r.sigma_b_zero);
        close(r.lower_bound, r.mi_ab - r.mi_ae, 1e-12);
        close(r.upper_bound, r.lower_bound, 1e-12);
        let r = bounds(&ChannelParams::with_real_rho(1.0, 0.0, 0.3, 0.2, 0.7)).unwrap();
        assert!(r.sigma_a_zero);
        close(r.lower_bound, r.mi_ab - r.mi_be, 1e-12);
        close(r.upper_bound, r.lower_bound, 1e-12);
    }

    #[test]
    fn threshold_examples() {
        let t = thresholds(&ChannelParams::with_real_rho(1.0, 1.0, 1.0, 0.5, 1.0)).unwrap();
        close(t.sigma_e2_min, 1.0, 1e-15);

        let p = ChannelParams::with_real_rho(1.0, 0.01, 0.01, 0.0, 0.9);
        let t = thresholds(&p).unwrap();
        close(t.sigma_e2_min, -0.1819, 1e-12);
        assert!(bounds(&p).unwrap().lower_bound > 0.0);

        let p = ChannelParams::with_real_rho(1.0, 1.0, 2.0, 0.0, 0.5f64.sqrt());
        close(thresholds(&p).unwrap().rho_sq_max, 0.5, 1e-15);
        let lb = |r: f64| bounds(&ChannelParams { rho: r.into(), ..p }).unwrap().lower_bound;
        assert!(lb(0.70) > 0.0 && lb(0.71) < 0.0);
    }

    #[test]
    fn high_snr_examples() {
        let h = high_snr(&all_noise(0.001, 0.0)).unwrap();
        close(h.mi_ab_asym, 500f64.log2(), 1e-12);
        close(h.mi_ab_asym, 8.965784, 1e-6);
        assert_eq!(h.capacity_asym, Some(h.mi_ab_asym));

        let h = high_snr(&all_noise(0.001, 0.9)).unwrap();
        close(h.capacity_asym.unwrap(), 95f64.log2(), 1e-12);
        close(h.capacity_asym.unwrap(), 6.569856, 1e-6);
        assert!(h.lb_asym > h.capacity_asym.unwrap());

        assert_eq!(high_snr(&all_noise(0.001, 1.0)).unwrap().capacity_asym, None);
        assert_eq!(capacity_asym(&all_noise(0.001, 1.0)), Err(Error::AsymptoticUndefined));
    }

    #[test]
    fn simplified_forms_match_determinant_forms() {
        for p in [
            all_noise(1.0, 0.9),
            ChannelParams::with_real_rho(2.5, 0.3, 1.7, 0.02, 0.4),
            ChannelParams::new(0.1, 0.05, 0.001, 0.4, num_complex::Complex64::from_polar(0.95, 2.0)),
        ] {
            let r = bounds(&p).unwrap();
            let d = determinant_forms(&p).unwrap();
            for (a, b) in [r.mi_ab, r.mi_ae, r.mi_be, r.cond_mi_ab_given_e].into_iter().zip(d) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn vanishing_noise_limit() {
        for r in [0.3, 0.9, 0.99] {
            let p = ChannelParams::with_real_rho(1.0, 1e-13, 1e-13, 1e-13, r);
            close(mi_with_eve(&p, Party::B).unwrap(), -(1.0 - r * r).log2(), 1e-9);
        }
    }
}
