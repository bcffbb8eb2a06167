//! Monte Carlo cross-checks of the closed forms and the quadrature.
//!
//! Samples are drawn from the channel model itself, so every estimate here
//! is independent of the formulas it is compared with.

mod count;
mod kdtree;
mod knn;
mod resub;
mod sample;

use serde::{Deserialize, Serialize};

pub use kdtree::{KdTree, MAX_DIM};
pub use knn::{jackknife_se, mi_knn, KnnEstimate, KnnOptions};
pub use resub::{entropy_resub, ks_uniform, KsResult, ResubEstimate};
pub use sample::{sample, Column, Obs, SampleBatch};

use crate::csi;
use crate::error::Result;
use crate::params::{ChannelParams, Pair, Which};
use crate::rss::{self, Pdf2, Pdf3, RssOptions};

/// Which family of cross-checks a [`Check`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckGroup {
    /// Nearest-neighbour MI of complex observations vs closed forms.
    ComplexMi,
    /// Resubstitution entropies vs quadrature.
    Entropy,
    /// Envelope sufficiency: `I(R̂_X; Ĥ_Y) = I(R̂_X; R̂_Y)`.
    EnvelopeEquality,
    /// Envelope/phase split: `I(Ĥ_X; Ĥ_Y) ≥ I(R̂_X; R̂_Y) + I(Φ̂_X; Φ̂_Y)`.
    SplitInequality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Equal,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub group: CheckGroup,
    pub relation: Relation,
    pub estimate: f64,
    pub reference: f64,
    pub std_error: f64,
    /// `(estimate − reference) / std_error`.
    pub sigmas: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, group: CheckGroup, relation: Relation, estimate: f64, reference: f64, std_error: f64, tol_sigma: f64) -> Self {
        let diff = estimate - reference;
        let sigmas = if std_error > 0.0 {
            diff / std_error
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        };
        let passed = match relation {
            Relation::Equal => sigmas.abs() <= tol_sigma,
            Relation::AtLeast => sigmas >= -tol_sigma,
        };
        Self {
            name: name.to_string(),
            group,
            relation,
            estimate,
            reference,
            std_error,
            sigmas,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub params: ChannelParams,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn group_passed(&self, group: CheckGroup) -> bool {
        self.checks.iter().filter(|c| c.group == group).all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub samples: usize,
    pub seed: u64,
    /// Pass band, in standard errors.
    pub tol_sigma: f64,
    pub knn: KnnOptions,
    pub rss: RssOptions,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            samples: 200_000,
            seed: 0x5eed,
            tol_sigma: 3.0,
            knn: KnnOptions::default(),
            rss: RssOptions::default(),
        }
    }
}

fn quad_se(se: f64, quad_err: f64) -> f64 {
    se.hypot(quad_err)
}

/// Run every Monte Carlo cross-check at one parameter point.
pub fn validate_point(params: &ChannelParams, opts: &ValidationOptions) -> Result<ValidationReport> {
    use CheckGroup::*;
    use Obs::{A, B, E};
    use Relation::*;

    let c = params.validate()?;
    let batch = sample(&c, opts.samples, opts.seed, opts.knn.exec)?;
    let t = opts.tol_sigma;
    let mut checks = Vec::new();

    let cx = [batch.complex_view(A), batch.complex_view(B), batch.complex_view(E)];
    let env = [batch.envelope_view(A), batch.envelope_view(B), batch.envelope_view(E)];
    let ph = [batch.phase_view(A), batch.phase_view(B), batch.phase_view(E)];
    let mi = |x: &Column, y: &Column| mi_knn(x, y, &opts.knn);
    let pairs = [(0usize, 1usize, "ab"), (0, 2, "ae"), (1, 2, "be")];

    // Complex MIs against the closed forms.
    let report = csi::bounds(&c)?;
    let closed = [report.mi_ab, report.mi_ae, report.mi_be];
    let mut complex_mi = Vec::new();
    for (k, &(i, j, tag)) in pairs.iter().enumerate() {
        let est = mi(&cx[i], &cx[j])?;
        checks.push(Check::new(&format!("csi_mi_{tag}"), ComplexMi, Equal, est.value, closed[k], est.std_error, t));
        complex_mi.push(est);
    }

    // Resubstitution entropies against quadrature.
    let exec = opts.knn.exec;
    for (pair, (i, j, tag)) in [Pair::AB, Pair::AE, Pair::BE].into_iter().zip(pairs) {
        let pdf = Pdf2::new(&c, pair)?;
        let view = Column::stack(&[&env[i], &env[j]]);
        let est = entropy_resub(&view, |r| pdf.ln(r[0], r[1]), exec)?;
        let which = Which::from(pair);
        let q = rss::joint_entropy(&c, which, &opts.rss.quad(which))?;
        checks.push(Check::new(
            &format!("entropy_{tag}"),
            Entropy,
            Equal,
            est.value,
            q.value,
            quad_se(est.std_error, q.error_estimate),
            t,
        ));
    }
    let pdf3 = Pdf3::new(&c)?;
    let view = Column::stack(&[&env[0], &env[1], &env[2]]);
    let est = entropy_resub(&view, |r| pdf3.ln(r[0], r[1], r[2]), exec)?;
    let q = rss::joint_entropy(&c, Which::ABE, &opts.rss.quad(Which::ABE))?;
    checks.push(Check::new(
        "entropy_abe",
        Entropy,
        Equal,
        est.value,
        q.value,
        quad_se(est.std_error, q.error_estimate),
        t,
    ));

    // Envelope sufficiency and the envelope/phase split.
    for (k, &(i, j, tag)) in pairs.iter().enumerate() {
        let rr = mi(&env[i], &env[j])?;
        let rh = mi(&env[i], &cx[j])?;
        checks.push(Check::new(
            &format!("envelope_sufficiency_{tag}"),
            EnvelopeEquality,
            Equal,
            rh.value,
            rr.value,
            rh.std_error.hypot(rr.std_error),
            t,
        ));
        let pp = mi(&ph[i], &ph[j])?;
        let hh = &complex_mi[k];
        checks.push(Check::new(
            &format!("envelope_phase_split_{tag}"),
            SplitInequality,
            AtLeast,
            hh.value,
            rr.value + pp.value,
            (hh.std_error.powi(2) + rr.std_error.powi(2) + pp.std_error.powi(2)).sqrt(),
            t,
        ));
    }

    Ok(ValidationReport {
        params: c,
        samples: opts.samples,
        seed: opts.seed,
        checks,
    })
}

/// The nine-point grid crossing equal SNRs `{0, 10, 20}` dB with
/// `|ρ| ∈ {0, 0.6, 0.9}`, at `p = 1`.
pub fn default_grid() -> Vec<ChannelParams> {
    let mut out = Vec::new();
    for snr in [0.0, 10.0, 20.0] {
        for rho in [0.0, 0.6, 0.9] {
            let s = crate::params::sigma2_from_snr_db(1.0, snr);
            out.push(ChannelParams::with_real_rho(1.0, s, s, s, rho));
        }
    }
    out
}
