//! Resubstitution entropy estimates and a uniformity test.

use serde::{Deserialize, Serialize};

use super::sample::Column;
use crate::error::{Error, Result};
use crate::par::{self, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResubEstimate {
    /// Bits.
    pub value: f64,
    pub std_error: f64,
}

/// `ĥ = −(1/n) Σ log₂ f(xᵢ)` with the sample standard error, where
/// `log_pdf` returns the natural log of the density.
pub fn entropy_resub<F>(view: &Column, log_pdf: F, exec: Exec) -> Result<ResubEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let n = view.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let terms = par::map_range(exec, n, |i| -log_pdf(view.row(i)) / std::f64::consts::LN_2);
    if let Some(i) = terms.iter().position(|t| !t.is_finite()) {
        return Err(Error::NonFiniteLogDensity(i));
    }
    let mean = terms.iter().sum::<f64>() / n as f64;
    let var = terms.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n - 1) as f64;
    Ok(ResubEstimate {
        value: mean,
        std_error: (var / n as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    /// Asymptotic critical value at the 1% level, `1.628/√n`.
    pub critical: f64,
    pub passed: bool,
}

/// One-sample Kolmogorov–Smirnov test against the uniform law on `[lo, hi)`.
pub fn ks_uniform(values: &[f64], lo: f64, hi: f64) -> KsResult {
    let mut v: Vec<f64> = values.iter().map(|x| (x - lo) / (hi - lo)).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let statistic = v
        .iter()
        .enumerate()
        .map(|(i, &u)| (u - i as f64 / n).max((i + 1) as f64 / n - u))
        .fold(0.0, f64::max);
    let critical = 1.628 / n.sqrt();
    KsResult {
        statistic,
        critical,
        passed: statistic <= critical,
    }
}
