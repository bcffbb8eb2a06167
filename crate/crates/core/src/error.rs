use thiserror::Error;

use crate::quad::QuadratureResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("channel variance must be strictly positive and finite (p = {0})")]
    NonPositiveChannelVariance(f64),

    #[error("correlation magnitude {0} exceeds 1")]
    CorrelationOutOfRange(f64),

    #[error("noise variance {name} is negative ({value})")]
    NegativeNoise { name: &'static str, value: f64 },

    #[error("non-finite value for {0}")]
    NonFinite(&'static str),

    #[error("argument must be non-negative (got {0})")]
    NegativeArgument(f64),

    #[error("quadrature tolerance not reached: {0:?}")]
    ToleranceNotReached(QuadratureResult),

    #[error("integrand returned a non-finite value at {0:?}")]
    NonFiniteIntegrand(Vec<f64>),

    #[error("mutual information is infinite for noiseless observations")]
    InfiniteMi,

    #[error("covariance determinant {0:e} is not positive")]
    DegenerateCovariance(f64),

    #[error("asymptotic expression undefined for |rho| = 1")]
    AsymptoticUndefined,

    #[error("variance must be strictly positive (got {0})")]
    NonPositiveVariance(f64),

    #[error("envelope density is degenerate: determinant {det:e} below {threshold:e}")]
    DegeneratePdf { det: f64, threshold: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("log-density is not finite at sample {0}")]
    NonFiniteLogDensity(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Coarse classification used by front ends to choose an exit status.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ToleranceNotReached(_)
                | Error::NonFiniteIntegrand(_)
                | Error::NonFiniteLogDensity(_)
                | Error::DegenerateCovariance(_)
                | Error::DegeneratePdf { .. }
                | Error::InfiniteMi
                | Error::AsymptoticUndefined
        )
    }
}
