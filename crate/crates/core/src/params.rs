//! Channel model: the five scalars of the reciprocal-channel source model and
//! the covariance matrices of the noisy observations they induce.
//!
//! Alice and Bob observe `Ĥ_A = H + W_A` and `Ĥ_B = H + W_B`, Eve observes
//! `Ĥ_E = H_E + W_E`. `(H, H_E)` is zero-mean circularly-symmetric complex
//! Gaussian with variance `p` on both components and correlation `ρ`; the
//! noises are independent with variances `σ²_A`, `σ²_B`, `σ²_E`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold below which a covariance determinant is treated as
/// singular by the envelope densities (scaled by `p²`).
pub const DEGENERATE_DET_REL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub p: f64,
    pub sigma_a2: f64,
    pub sigma_b2: f64,
    pub sigma_e2: f64,
    #[serde(with = "complex_serde")]
    pub rho: Complex64,
}

/// One of the two-observation subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pair {
    AB,
    AE,
    BE,
}

/// Any observation subset whose covariance the model defines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Which {
    AB,
    AE,
    BE,
    ABE,
}

/// Alice or Bob, when a formula is written for one legitimate party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl From<Pair> for Which {
    fn from(p: Pair) -> Self {
        match p {
            Pair::AB => Which::AB,
            Pair::AE => Which::AE,
            Pair::BE => Which::BE,
        }
    }
}

impl Party {
    pub fn with_eve(self) -> Pair {
        match self {
            Party::A => Pair::AE,
            Party::B => Pair::BE,
        }
    }
}

impl ChannelParams {
    pub fn new(p: f64, sigma_a2: f64, sigma_b2: f64, sigma_e2: f64, rho: Complex64) -> Self {
        Self {
            p,
            sigma_a2,
            sigma_b2,
            sigma_e2,
            rho,
        }
    }

    /// Real, non-negative correlation coefficient.
    pub fn with_real_rho(p: f64, sigma_a2: f64, sigma_b2: f64, sigma_e2: f64, rho: f64) -> Self {
        Self::new(p, sigma_a2, sigma_b2, sigma_e2, Complex64::new(rho, 0.0))
    }

    /// Build from per-party SNRs in dB, `SNR_X = p / σ²_X`.
    pub fn from_snr_db(p: f64, snr_a_db: f64, snr_b_db: f64, snr_e_db: f64, rho: Complex64) -> Self {
        Self::new(
            p,
            sigma2_from_snr_db(p, snr_a_db),
            sigma2_from_snr_db(p, snr_b_db),
            sigma2_from_snr_db(p, snr_e_db),
            rho,
        )
    }

    /// Return `self` unchanged iff every model constraint holds.
    pub fn validate(self) -> Result<Self> {
        if !self.p.is_finite() {
            return Err(Error::NonFinite("p"));
        }
        for (name, v) in self.noises() {
            if !v.is_finite() {
                return Err(Error::NonFinite(name));
            }
        }
        if !(self.rho.re.is_finite() && self.rho.im.is_finite()) {
            return Err(Error::NonFinite("rho"));
        }
        if self.p <= 0.0 {
            return Err(Error::NonPositiveChannelVariance(self.p));
        }
        for (name, value) in self.noises() {
            if value < 0.0 {
                return Err(Error::NegativeNoise { name, value });
            }
        }
        let r = self.rho.norm();
        // |ρ| computed from components can exceed 1 by an ulp for unit-modulus input.
        if r > 1.0 + 4.0 * f64::EPSILON {
            return Err(Error::CorrelationOutOfRange(r));
        }
        Ok(self)
    }

    fn noises(&self) -> [(&'static str, f64); 3] {
        [
            ("sigma_a2", self.sigma_a2),
            ("sigma_b2", self.sigma_b2),
            ("sigma_e2", self.sigma_e2),
        ]
    }

    pub fn rho_abs(&self) -> f64 {
        self.rho.norm().min(1.0)
    }

    pub fn rho_abs2(&self) -> f64 {
        self.rho.norm_sqr().min(1.0)
    }

    /// `σ²_* = max(σ²_A, σ²_B)`.
    pub fn sigma_max2(&self) -> f64 {
        self.sigma_a2.max(self.sigma_b2)
    }

    pub fn sigma_min2(&self) -> f64 {
        self.sigma_a2.min(self.sigma_b2)
    }

    pub fn noise(&self, party: Party) -> f64 {
        match party {
            Party::A => self.sigma_a2,
            Party::B => self.sigma_b2,
        }
    }

    /// Same parameters with Alice and Bob exchanged.
    pub fn swap_legitimate(&self) -> Self {
        Self {
            sigma_a2: self.sigma_b2,
            sigma_b2: self.sigma_a2,
            ..*self
        }
    }

    /// Same parameters with `ρ` rotated by `theta` radians.
    pub fn with_rho_phase(&self, theta: f64) -> Self {
        Self {
            rho: self.rho * Complex64::from_polar(1.0, theta),
            ..*self
        }
    }

    /// The two noise variances of a pair, in (first, second) order.
    pub fn pair_noises(&self, pair: Pair) -> (f64, f64) {
        match pair {
            Pair::AB => (self.sigma_a2, self.sigma_b2),
            Pair::AE => (self.sigma_a2, self.sigma_e2),
            Pair::BE => (self.sigma_b2, self.sigma_e2),
        }
    }

    /// Magnitude of the correlation between the underlying channels of a pair.
    pub fn pair_correlation(&self, pair: Pair) -> f64 {
        match pair {
            Pair::AB => 1.0,
            Pair::AE | Pair::BE => self.rho_abs(),
        }
    }

    /// `|C_XY| = p²(1−|c|²) + p(σ²_X+σ²_Y) + σ²_Xσ²_Y`, expanded form.
    pub fn det_pair(&self, pair: Pair) -> f64 {
        let (s1, s2) = self.pair_noises(pair);
        let c2 = match pair {
            Pair::AB => 1.0,
            _ => self.rho_abs2(),
        };
        self.p * self.p * (1.0 - c2) + self.p * (s1 + s2) + s1 * s2
    }

    /// `|C_ABE|`, expanded form.
    pub fn det_abe(&self) -> f64 {
        let p = self.p;
        let (sa, sb, se) = (self.sigma_a2, self.sigma_b2, self.sigma_e2);
        // Sum of non-negative terms: no cancellation as |ρ| → 1.
        p * p * (1.0 - self.rho_abs2()) * (sa + sb) + p * se * (sa + sb) + sa * sb * (p + se)
    }

    /// Determinant threshold used to reject singular envelope densities.
    pub fn degenerate_threshold(&self) -> f64 {
        DEGENERATE_DET_REL * self.p * self.p
    }
}

/// `SNR_dB = 10·log10(p/σ²)`.
pub fn snr_db(p: f64, sigma2: f64) -> f64 {
    10.0 * (p / sigma2).log10()
}

/// Inverse of [`snr_db`].
pub fn sigma2_from_snr_db(p: f64, snr_db: f64) -> f64 {
    p * 10f64.powf(-snr_db / 10.0)
}

/// A 2×2 or 3×3 Hermitian covariance matrix with its determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianCov {
    dim: usize,
    entries: [[Complex64; 3]; 3],
    det: f64,
}

impl HermitianCov {
    fn from_entries(dim: usize, entries: [[Complex64; 3]; 3]) -> Self {
        let det = match dim {
            2 => (entries[0][0] * entries[1][1] - entries[0][1] * entries[1][0]).re,
            _ => {
                let a = &entries;
                (a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]))
                    .re
            }
        };
        Self { dim, entries, det }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        assert!(i < self.dim && j < self.dim, "index out of range");
        self.entries[i][j]
    }

    /// Determinant computed by cofactor expansion of the stored entries.
    pub fn determinant(&self) -> f64 {
        self.det
    }
}

/// Covariance of the selected observation subset, in (A, B, E) order.
pub fn covariance(params: &ChannelParams, which: Which) -> Result<HermitianCov> {
    let pr = params.validate()?;
    let p = Complex64::new(pr.p, 0.0);
    let real = |x: f64| Complex64::new(x, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let rp = pr.rho * pr.p;
    let cov = match which {
        Which::AB => HermitianCov::from_entries(
            2,
            [
                [real(pr.p + pr.sigma_a2), p, zero],
                [p, real(pr.p + pr.sigma_b2), zero],
                [zero; 3],
            ],
        ),
        Which::AE | Which::BE => {
            let s = if which == Which::AE {
                pr.sigma_a2
            } else {
                pr.sigma_b2
            };
            HermitianCov::from_entries(
                2,
                [
                    [real(pr.p + s), rp, zero],
                    [rp.conj(), real(pr.p + pr.sigma_e2), zero],
                    [zero; 3],
                ],
            )
        }
        Which::ABE => HermitianCov::from_entries(
            3,
            [
                [real(pr.p + pr.sigma_a2), p, rp],
                [p, real(pr.p + pr.sigma_b2), rp],
                [rp.conj(), rp.conj(), real(pr.p + pr.sigma_e2)],
            ],
        ),
    };
    Ok(cov)
}

mod complex_serde {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        Repr { re: c.re, im: c.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let r = Repr::deserialize(d)?;
        Ok(Complex64::new(r.re, r.im))
    }
}
