//! Globally adaptive cubature on axis-aligned boxes in one to three
//! dimensions.
//!
//! Each box is integrated with the tensor product of the 15-point
//! Gauss–Kronrod rule. The 7-point Gauss rule is embedded in it, so replacing
//! the Kronrod weights by Gauss weights along one axis gives a lower-order
//! estimate for free; the difference measures how poorly that axis is
//! resolved. The box error is the sum of these per-axis differences, and the
//! worst box is bisected across its worst axis until the total error meets
//! the tolerance.
//!
//! Boxes are refined in small batches whose membership depends only on the
//! error values, and box results are always combined in creation order, so
//! the output is bit-identical for every thread count.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Exec};

const NODES: usize = 15;

#[rustfmt::skip]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[rustfmt::skip]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[rustfmt::skip]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Nodes on [-1, 1] with Kronrod and embedded Gauss weights (0 where the
/// node is Kronrod-only).
struct Rule {
    x: [f64; NODES],
    wk: [f64; NODES],
    wg: [f64; NODES],
}

const fn rule() -> Rule {
    let mut x = [0.0; NODES];
    let mut wk = [0.0; NODES];
    let mut wg = [0.0; NODES];
    let mut i = 0;
    while i < 7 {
        x[i] = -XGK[i];
        x[NODES - 1 - i] = XGK[i];
        wk[i] = WGK[i];
        wk[NODES - 1 - i] = WGK[i];
        if i % 2 == 1 {
            wg[i] = WG[i / 2];
            wg[NODES - 1 - i] = WG[i / 2];
        }
        i += 1;
    }
    x[7] = 0.0;
    wk[7] = WGK[7];
    wg[7] = WG[3];
    Rule { x, wk, wg }
}

const RULE: Rule = rule();

/// Boxes refined together per round.
const BATCH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Absolute error target.
    pub tol: f64,
    /// Integrand evaluation budget.
    pub max_evals: u64,
    /// Uniform subdivisions per axis before adaptive refinement starts.
    pub initial_divisions: usize,
    pub exec: Exec,
}

impl QuadOptions {
    /// Budget for three-dimensional integrals.
    pub const MAX_EVALS_3D: u64 = 1 << 27;

    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            max_evals: Self::MAX_EVALS_3D,
            initial_divisions: 1,
            exec: Exec::default(),
        }
    }

    pub fn initial_divisions(mut self, n: usize) -> Self {
        self.initial_divisions = n.max(1);
        self
    }

    pub fn max_evals(mut self, n: u64) -> Self {
        self.max_evals = n;
        self
    }

    pub fn exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: u64,
}

#[derive(Debug, Clone, Copy)]
struct Region {
    lo: [f64; 3],
    hi: [f64; 3],
    value: f64,
    err: f64,
    err_axis: [f64; 3],
    id: u64,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Region {}

impl PartialOrd for Region {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Region {
    // Largest error first; older boxes win ties.
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct BoxEstimate {
    value: f64,
    err_axis: [f64; 3],
}

fn evaluate<F>(f: &F, dim: usize, lo: &[f64; 3], hi: &[f64; 3]) -> Result<BoxEstimate>
where
    F: Fn(&[f64]) -> f64,
{
    let mut c = [0.0; 3];
    let mut h = [0.0; 3];
    for d in 0..dim {
        c[d] = 0.5 * (lo[d] + hi[d]);
        h[d] = 0.5 * (hi[d] - lo[d]);
    }
    let total = NODES.pow(dim as u32);
    let mut qk = 0.0;
    let mut qg = [0.0; 3];
    let mut x = [0.0; 3];
    let mut idx = [0usize; 3];
    for _ in 0..total {
        for d in 0..dim {
            x[d] = c[d] + h[d] * RULE.x[idx[d]];
        }
        let fx = f(&x[..dim]);
        if !fx.is_finite() {
            return Err(Error::NonFiniteIntegrand(x[..dim].to_vec()));
        }
        let mut wk = 1.0;
        for d in 0..dim {
            wk *= RULE.wk[idx[d]];
        }
        qk += wk * fx;
        for d in 0..dim {
            let wg = RULE.wg[idx[d]];
            if wg != 0.0 {
                qg[d] += wk / RULE.wk[idx[d]] * wg * fx;
            }
        }
        // odometer increment
        for d in (0..dim).rev() {
            idx[d] += 1;
            if idx[d] < NODES {
                break;
            }
            idx[d] = 0;
        }
    }
    let jac: f64 = h[..dim].iter().product();
    let mut err_axis = [0.0; 3];
    for d in 0..dim {
        err_axis[d] = ((qk - qg[d]) * jac).abs();
    }
    Ok(BoxEstimate {
        value: qk * jac,
        err_axis,
    })
}

fn totals(regions: &mut [Region]) -> (f64, f64) {
    regions.sort_by_key(|r| r.id);
    regions
        .iter()
        .fold((0.0, 0.0), |(v, e), r| (v + r.value, e + r.err))
}

/// Integrate `f` over the box `[lo, hi]` (1 to 3 dimensions) to absolute
/// tolerance `opts.tol`.
///
/// On budget exhaustion the best estimate is returned inside
/// [`Error::ToleranceNotReached`].
pub fn integrate_nd<F>(f: F, lo: &[f64], hi: &[f64], opts: &QuadOptions) -> Result<QuadratureResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = lo.len();
    if !(1..=3).contains(&dim) || hi.len() != dim {
        return Err(Error::InvalidInput(format!(
            "integration domain must have 1 to 3 matching bounds, got {} and {}",
            lo.len(),
            hi.len()
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", opts.tol)));
    }
    for d in 0..dim {
        if !(lo[d].is_finite() && hi[d].is_finite()) || lo[d] > hi[d] {
            return Err(Error::InvalidInput(format!("bad bounds [{}, {}] on axis {d}", lo[d], hi[d])));
        }
    }
    let per_box = NODES.pow(dim as u32) as u64;
    let m = opts.initial_divisions.max(1);

    let mut seeds = Vec::with_capacity(m.pow(dim as u32));
    for flat in 0..m.pow(dim as u32) {
        let mut rlo = [0.0; 3];
        let mut rhi = [0.0; 3];
        let mut rem = flat;
        for d in 0..dim {
            let k = rem % m;
            rem /= m;
            let w = (hi[d] - lo[d]) / m as f64;
            rlo[d] = lo[d] + w * k as f64;
            rhi[d] = if k + 1 == m { hi[d] } else { lo[d] + w * (k + 1) as f64 };
        }
        seeds.push((rlo, rhi));
    }

    let mut next_id = 0u64;
    let mut make = |(rlo, rhi): ([f64; 3], [f64; 3]), est: BoxEstimate| {
        let r = Region {
            lo: rlo,
            hi: rhi,
            value: est.value,
            err: est.err_axis.iter().sum(),
            err_axis: est.err_axis,
            id: next_id,
        };
        next_id += 1;
        r
    };

    let first = par::map_slice(opts.exec, &seeds, |(a, b)| evaluate(&f, dim, a, b));
    let mut heap = BinaryHeap::with_capacity(seeds.len() * 4);
    for (s, e) in seeds.into_iter().zip(first) {
        heap.push(make(s, e?));
    }
    let mut evals = per_box * heap.len() as u64;
    let mut err = {
        let mut v = heap.clone().into_vec();
        totals(&mut v).1
    };

    let min_width: Vec<f64> = (0..dim).map(|d| (hi[d] - lo[d]) * 1e-13).collect();
    let mut rounds = 0u64;
    loop {
        if err <= opts.tol {
            let mut v = heap.clone().into_vec();
            let (value, exact) = totals(&mut v);
            err = exact;
            if err <= opts.tol {
                return Ok(QuadratureResult {
                    value,
                    error_estimate: err,
                    evaluations: evals,
                });
            }
        }
        let fail = |value, err, evals| {
            Err(Error::ToleranceNotReached(QuadratureResult {
                value,
                error_estimate: err,
                evaluations: evals,
            }))
        };
        if evals + 2 * per_box > opts.max_evals {
            let mut v = heap.into_vec();
            let (value, err) = totals(&mut v);
            return fail(value, err, evals);
        }

        let top = heap.pop().expect("at least one region");
        let floor = top.err * 0.125;
        let mut batch = vec![top];
        while batch.len() < BATCH
            && evals + 2 * per_box * (batch.len() as u64 + 1) <= opts.max_evals
            && heap.peek().is_some_and(|r| r.err >= floor)
        {
            batch.push(heap.pop().expect("peeked"));
        }

        let mut children = Vec::with_capacity(2 * batch.len());
        for r in &batch {
            let axis = (0..dim)
                .max_by(|&a, &b| r.err_axis[a].total_cmp(&r.err_axis[b]).then(b.cmp(&a)))
                .expect("dim >= 1");
            if r.hi[axis] - r.lo[axis] < min_width[axis] {
                heap.extend(batch.iter().copied());
                let mut v = heap.into_vec();
                let (value, err) = totals(&mut v);
                return fail(value, err, evals);
            }
            let mid = 0.5 * (r.lo[axis] + r.hi[axis]);
            let mut left_hi = r.hi;
            left_hi[axis] = mid;
            let mut right_lo = r.lo;
            right_lo[axis] = mid;
            children.push((r.lo, left_hi));
            children.push((right_lo, r.hi));
        }
        let estimates = par::map_slice(opts.exec, &children, |(a, b)| evaluate(&f, dim, a, b));
        evals += per_box * children.len() as u64;
        for r in &batch {
            err -= r.err;
        }
        for (c, e) in children.into_iter().zip(estimates) {
            let region = make(c, e?);
            err += region.err;
            heap.push(region);
        }
        rounds += 1;
        if rounds.is_multiple_of(128) {
            let mut v = heap.clone().into_vec();
            err = totals(&mut v).1;
        }
    }
}
