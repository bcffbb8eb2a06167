//! Seeded draws of the three channel observations.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::params::ChannelParams;

/// Complex unit normals consumed per sample: `Z₁`, `Z₂` and three noises.
const NORMALS: usize = 5;
/// Keystream words (32-bit) per sample: two per uniform, two uniforms per
/// complex normal.
const WORDS_PER_SAMPLE: u128 = (NORMALS * 2 * 2) as u128;
const CHUNK: usize = 4096;

/// One of the three observers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Obs {
    A,
    B,
    E,
}

impl Obs {
    fn index(self) -> usize {
        match self {
            Obs::A => 0,
            Obs::B => 1,
            Obs::E => 2,
        }
    }
}

/// Real-valued view of one or more observations, row-major with `dim`
/// coordinates per sample. Periodic coordinates live on a circle of length
/// 2π (phases) and are compared with the circular distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub dim: usize,
    pub values: Vec<f64>,
    pub periodic: Vec<bool>,
}

impl Column {
    pub fn new(dim: usize, values: Vec<f64>, periodic: Vec<bool>) -> Self {
        assert_eq!(periodic.len(), dim);
        assert_eq!(values.len() % dim.max(1), 0);
        Self { dim, values, periodic }
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Side-by-side concatenation of columns of equal length.
    pub fn stack(parts: &[&Column]) -> Column {
        let n = parts[0].len();
        let dim: usize = parts.iter().map(|c| c.dim).sum();
        let mut values = Vec::with_capacity(n * dim);
        for i in 0..n {
            for c in parts {
                values.extend_from_slice(c.row(i));
            }
        }
        let periodic = parts.iter().flat_map(|c| c.periodic.iter().copied()).collect();
        Column { dim, values, periodic }
    }

    /// Rows with index in `keep`.
    pub(crate) fn rows(&self, keep: std::ops::Range<usize>) -> Column {
        Column {
            dim: self.dim,
            values: self.values[keep.start * self.dim..keep.end * self.dim].to_vec(),
            periodic: self.periodic.clone(),
        }
    }

    /// Rows whose index is not in `skip`.
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) fn without(&self, skip: std::ops::Range<usize>) -> Column {
        let mut values = Vec::with_capacity(self.values.len());
        values.extend_from_slice(&self.values[..skip.start * self.dim]);
        values.extend_from_slice(&self.values[skip.end * self.dim..]);
        Column {
            dim: self.dim,
            values,
            periodic: self.periodic.clone(),
        }
    }
}

/// `n` independent draws of `(Ĥ_A, Ĥ_B, Ĥ_E)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub params: ChannelParams,
    pub seed: u64,
    pub triples: Vec<[Complex64; 3]>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn observations(&self, who: Obs) -> impl Iterator<Item = Complex64> + '_ {
        self.triples.iter().map(move |t| t[who.index()])
    }

    pub fn envelopes(&self, who: Obs) -> Vec<f64> {
        self.observations(who).map(|h| h.norm()).collect()
    }

    /// Arguments in `[0, 2π)`.
    pub fn phases(&self, who: Obs) -> Vec<f64> {
        self.observations(who)
            .map(|h| {
                let a = h.arg();
                let a = if a < 0.0 { a + TAU } else { a };
                // -0 and values within an ulp of 2π
                if a >= TAU {
                    0.0
                } else {
                    a
                }
            })
            .collect()
    }

    pub fn complex_view(&self, who: Obs) -> Column {
        let values = self.observations(who).flat_map(|h| [h.re, h.im]).collect();
        Column::new(2, values, vec![false, false])
    }

    pub fn envelope_view(&self, who: Obs) -> Column {
        Column::new(1, self.envelopes(who), vec![false])
    }

    pub fn phase_view(&self, who: Obs) -> Column {
        Column::new(1, self.phases(who), vec![true])
    }
}

#[inline]
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Box–Muller pair as one unit-variance circularly-symmetric complex normal.
#[inline]
fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    let r = (-2.0 * u1.ln()).sqrt() * FRAC_1_SQRT_2;
    let (s, c) = (TAU * u2).sin_cos();
    Complex64::new(r * c, r * s)
}

/// Draw `n` observation triples. Sample `i` always consumes the same slice
/// of the keystream, so the batch is identical for every thread count.
pub fn sample(params: &ChannelParams, n: usize, seed: u64, exec: Exec) -> Result<SampleBatch> {
    let c = params.validate()?;
    if n == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let sp = c.p.sqrt();
    let rho_c = c.rho.conj();
    let rho_c = if c.rho.norm() > 1.0 { rho_c / c.rho.norm() } else { rho_c };
    let perp = (1.0 - c.rho_abs2()).max(0.0).sqrt();
    let (sa, sb, se) = (c.sigma_a2.sqrt(), c.sigma_b2.sqrt(), c.sigma_e2.sqrt());

    let mut triples = vec![[Complex64::new(0.0, 0.0); 3]; n];
    par::fill_chunks(exec, &mut triples, CHUNK, |chunk, out| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(WORDS_PER_SAMPLE * (chunk * CHUNK) as u128);
        for t in out.iter_mut() {
            let z1 = complex_normal(&mut rng);
            let z2 = complex_normal(&mut rng);
            let wa = complex_normal(&mut rng);
            let wb = complex_normal(&mut rng);
            let we = complex_normal(&mut rng);
            let h = z1 * sp;
            let he = (z1 * rho_c + z2 * perp) * sp;
            *t = [h + wa * sa, h + wb * sb, he + we * se];
        }
    });
    Ok(SampleBatch {
        params: c,
        seed,
        triples,
    })
}
