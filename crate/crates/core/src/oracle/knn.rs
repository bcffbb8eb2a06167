//! Kraskov–Stögbauer–Grassberger mutual-information estimator (first
//! variant) with a delete-a-group jackknife standard error.

use serde::{Deserialize, Serialize};

use super::count::Counter;
use super::kdtree::{KdTree, MAX_DIM, MAX_K};
use super::sample::Column;
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::specfun::EULER_GAMMA;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnOptions {
    pub k: usize,
    /// Jackknife groups; each group leaves out `n / groups` samples.
    pub groups: usize,
    pub exec: Exec,
}

impl Default for KnnOptions {
    fn default() -> Self {
        Self {
            k: 4,
            groups: 10,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnEstimate {
    /// Bits.
    pub value: f64,
    pub std_error: f64,
    /// Estimates with each jackknife group left out.
    pub leave_out: Vec<f64>,
}

/// `ψ(m)` for `m = 1..=n`, index `m`.
fn digamma_table(n: usize) -> Vec<f64> {
    let mut t = vec![f64::NAN; n + 1];
    let mut h = -EULER_GAMMA;
    for (m, slot) in t.iter_mut().enumerate().skip(1) {
        *slot = h;
        h += 1.0 / m as f64;
    }
    t
}

/// Contiguous block `j` of `g` blocks over `0..n`.
fn group_range(j: usize, g: usize, n: usize) -> std::ops::Range<usize> {
    (j * n / g)..((j + 1) * n / g)
}

/// KSG on the full sample plus every delete-a-group estimate.
///
/// Deleting a group leaves a point's neighbourhood radius unchanged unless
/// one of its `k` joint neighbours is in the group, in which case the new
/// radius comes from a short list of spare neighbours. Either way its
/// reduced marginal counts are the full counts minus those of the deleted
/// group, so each leave-out estimate equals a recomputation from scratch.
fn ksg_with_jackknife(x: &Column, y: &Column, k: usize, g: usize, exec: Exec) -> (f64, Vec<f64>) {
    let n = x.len();
    let joint = Column::stack(&[x, y]);
    let tj = KdTree::new(&joint);
    let (cx, cy) = (Counter::new(x), Counter::new(y));
    let psi = digamma_table(n + 1);

    // Enough spare neighbours that deleting one group almost never
    // exhausts them.
    let spare = (k + 8).min(MAX_K);
    // Queries run in tree order for locality; sums run in row order.
    let order = tj.rows();
    let mut slot = vec![0usize; n];
    for (p, &i) in order.iter().enumerate() {
        slot[i as usize] = p;
    }
    let row_sum = |terms: &[f64]| slot.iter().map(|&p| terms[p]).sum::<f64>();

    // Counts include the point itself, which supplies the +1.
    let full = par::map_slice(exec, order, |&i| {
        let i = i as usize;
        let (dist, nbrs) = tj.knn(joint.row(i), spare, |r| r as usize == i);
        let eps = dist[k - 1];
        (dist, nbrs, cx.count(x.row(i), eps), cy.count(y.row(i), eps))
    });
    let mean = row_sum(&full.iter().map(|f| psi[f.2] + psi[f.3]).collect::<Vec<_>>()) / n as f64;
    let value = (psi[k] + psi[n] - mean) / std::f64::consts::LN_2;

    let leave_out = (0..g)
        .map(|j| {
            let range = group_range(j, g, n);
            let (gx, gy) = (Counter::new(&x.rows(range.clone())), Counter::new(&y.rows(range.clone())));
            let in_group = |r: u32| range.contains(&(r as usize));
            let terms = par::map_range(exec, n, |p| {
                let i = order[p] as usize;
                if range.contains(&i) {
                    return 0.0;
                }
                let (dist, nbrs, nx, ny) = &full[p];
                let (nx, ny, eps) = if nbrs[..k].iter().any(|&r| in_group(r)) {
                    let eps = match (0..spare).filter(|&m| !in_group(nbrs[m])).nth(k - 1) {
                        Some(m) => dist[m],
                        None => tj.knn(joint.row(i), k, |r| r as usize == i || in_group(r)).0[k - 1],
                    };
                    (cx.count(x.row(i), eps), cy.count(y.row(i), eps), eps)
                } else {
                    (*nx, *ny, dist[k - 1])
                };
                let nx = nx - gx.count(x.row(i), eps);
                let ny = ny - gy.count(y.row(i), eps);
                psi[nx] + psi[ny]
            });
            let kept = n - range.len();
            let mean = row_sum(&terms) / kept as f64;
            (psi[k] + psi[kept] - mean) / std::f64::consts::LN_2
        })
        .collect();
    (value, leave_out)
}

/// Plain KSG estimate in bits, recomputed from scratch.
#[cfg(test)]
fn ksg(x: &Column, y: &Column, k: usize) -> f64 {
    let n = x.len();
    let joint = Column::stack(&[x, y]);
    let tj = KdTree::new(&joint);
    let (tx, ty) = (KdTree::new(x), KdTree::new(y));
    let psi = digamma_table(n + 1);
    let mean = (0..n)
        .map(|i| {
            let eps = tj.kth_distance(joint.row(i), k, i);
            psi[tx.count_within(x.row(i), eps)] + psi[ty.count_within(y.row(i), eps)]
        })
        .sum::<f64>()
        / n as f64;
    (psi[k] + psi[n] - mean) / std::f64::consts::LN_2
}

/// `I(X; Y)` in bits from paired samples.
pub fn mi_knn(x: &Column, y: &Column, opts: &KnnOptions) -> Result<KnnEstimate> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::InvalidInput(format!("sample sizes differ: {n} and {}", y.len())));
    }
    if x.dim + y.dim > MAX_DIM || x.dim == 0 || y.dim == 0 {
        return Err(Error::InvalidInput(format!(
            "joint dimension {} + {} outside 2..={MAX_DIM}",
            x.dim, y.dim
        )));
    }
    if opts.k == 0 || opts.k > MAX_K || opts.groups < 2 {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k <= {MAX_K} and at least two jackknife groups"
        )));
    }
    let needed = (10 * opts.k).max(opts.groups * 10 * opts.k / (opts.groups - 1));
    if n < needed {
        return Err(Error::TooFewSamples { needed, got: n });
    }
    for v in x.values.iter().chain(&y.values) {
        if !v.is_finite() {
            return Err(Error::NonFinite("sample"));
        }
    }
    let (value, leave_out) = ksg_with_jackknife(x, y, opts.k, opts.groups, opts.exec);
    Ok(KnnEstimate {
        value,
        std_error: jackknife_se(&leave_out),
        leave_out,
    })
}

/// Delete-a-group jackknife standard error from leave-one-group-out values.
pub fn jackknife_se(leave_out: &[f64]) -> f64 {
    let g = leave_out.len() as f64;
    let mean = leave_out.iter().sum::<f64>() / g;
    let ss: f64 = leave_out.iter().map(|v| (v - mean) * (v - mean)).sum();
    ((g - 1.0) / g * ss).sqrt()
}
