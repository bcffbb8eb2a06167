//! Exact open-ball counts over low-dimensional marginals.
//!
//! A point is inside when every axis distance, computed exactly as the
//! k-d tree computes it, is strictly below `eps`. Rounded differences are
//! monotone in the stored coordinate, so on each axis the inside set is a
//! contiguous run of the sorted coordinates and is found by binary search
//! on the exact predicate. Squares in the plane are then counted in rank
//! space with a wavelet matrix, so no query depends on how many points the
//! ball holds.

use std::f64::consts::TAU;

use super::kdtree::KdTree;
use super::sample::Column;

/// Index range of the sorted `v` within distance `< eps` of `x`.
fn window(v: &[f64], x: f64, eps: f64) -> (usize, usize) {
    let lo = v.partition_point(|&y| y < x && !((y - x).abs() < eps));
    let hi = v.partition_point(|&y| y < x || (y - x).abs() < eps);
    (lo, hi.max(lo))
}

/// Points of the sorted `v` in `[0, 2π)` within circular distance `< eps`
/// of `x`.
fn count_circle(v: &[f64], x: f64, eps: f64) -> usize {
    // Distance is min(d, 2π − d) with d = |y − x|; on each side of `x` the
    // first branch holds on a run next to `x` and the second on a run at
    // the far end.
    let mid = v.partition_point(|&y| y < x);
    let side = |part: &[f64], near_first: bool| {
        let n = part.len();
        let near = |y: f64| (y - x).abs() < eps;
        let far = |y: f64| TAU - (y - x).abs() < eps;
        let (a, b) = if near_first {
            (part.partition_point(|&y| near(y)), n - part.partition_point(|&y| !far(y)))
        } else {
            (n - part.partition_point(|&y| !near(y)), part.partition_point(|&y| far(y)))
        };
        (a + b).min(n)
    };
    side(&v[mid..], true) + side(&v[..mid], false)
}

/// Bit vector with constant-time rank.
#[derive(Debug, Clone)]
struct Bits {
    words: Vec<u64>,
    /// Ones before each word.
    before: Vec<u32>,
}

impl Bits {
    fn new(bits: impl ExactSizeIterator<Item = bool>) -> Self {
        let mut words = vec![0u64; bits.len() / 64 + 1];
        for (i, b) in bits.enumerate() {
            words[i / 64] |= (b as u64) << (i % 64);
        }
        let mut before = Vec::with_capacity(words.len());
        let mut acc = 0;
        for w in &words {
            before.push(acc);
            acc += w.count_ones();
        }
        Self { words, before }
    }

    #[inline]
    fn rank0(&self, i: usize) -> usize {
        let ones = self.before[i / 64] + (self.words[i / 64] & ((1u64 << (i % 64)) - 1)).count_ones();
        i - ones as usize
    }
}

/// Wavelet matrix over a permutation of `0..n`.
#[derive(Debug, Clone)]
struct Wavelet {
    levels: Vec<(Bits, usize)>,
}

impl Wavelet {
    fn new(mut seq: Vec<u32>) -> Self {
        let n = seq.len();
        let depth = (usize::BITS - n.leading_zeros()).max(1);
        let levels = (0..depth)
            .rev()
            .map(|b| {
                let bits = Bits::new(seq.iter().map(|&v| v >> b & 1 == 1));
                let (zeros, ones): (Vec<u32>, Vec<u32>) = seq.iter().partition(|&&v| v >> b & 1 == 0);
                let z = zeros.len();
                seq = zeros;
                seq.extend(ones);
                (bits, z)
            })
            .collect();
        Self { levels }
    }

    /// Values `< v` at positions `lo..hi`.
    fn less(&self, mut lo: usize, mut hi: usize, v: usize) -> usize {
        let depth = self.levels.len();
        let mut count = 0;
        for (l, (bits, zeros)) in self.levels.iter().enumerate() {
            let (a, b) = (bits.rank0(lo), bits.rank0(hi));
            if v >> (depth - 1 - l) & 1 == 1 {
                count += b - a;
                lo = zeros + lo - a;
                hi = zeros + hi - b;
            } else {
                lo = a;
                hi = b;
            }
        }
        count
    }
}

/// Points of a non-periodic plane, indexed for square counts.
#[derive(Debug, Clone)]
pub(super) struct Plane {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// y-rank of each point, in x order.
    ranks: Wavelet,
}

impl Plane {
    fn new(col: &Column) -> Self {
        let n = col.len();
        let mut by_x: Vec<usize> = (0..n).collect();
        by_x.sort_by(|&i, &j| col.row(i)[0].total_cmp(&col.row(j)[0]));
        let mut by_y: Vec<usize> = (0..n).collect();
        by_y.sort_by(|&i, &j| col.row(i)[1].total_cmp(&col.row(j)[1]));
        let mut rank = vec![0u32; n];
        for (r, &i) in by_y.iter().enumerate() {
            rank[i] = r as u32;
        }
        Self {
            xs: by_x.iter().map(|&i| col.row(i)[0]).collect(),
            ys: by_y.iter().map(|&i| col.row(i)[1]).collect(),
            ranks: Wavelet::new(by_x.iter().map(|&i| rank[i]).collect()),
        }
    }

    fn count(&self, row: &[f64], eps: f64) -> usize {
        let (xlo, xhi) = window(&self.xs, row[0], eps);
        let (ylo, yhi) = window(&self.ys, row[1], eps);
        self.ranks.less(xlo, xhi, yhi) - self.ranks.less(xlo, xhi, ylo)
    }
}

/// Open-ball counter under the maximum norm.
#[derive(Debug, Clone)]
pub(super) enum Counter {
    Line(Vec<f64>),
    Circle(Vec<f64>),
    Plane(Plane),
    Tree(KdTree),
}

impl Counter {
    pub(crate) fn new(col: &Column) -> Self {
        let sorted = || {
            let mut v = col.values.clone();
            v.sort_by(f64::total_cmp);
            v
        };
        match (col.dim, col.periodic.as_slice()) {
            (1, [false]) => Counter::Line(sorted()),
            (1, [true]) => Counter::Circle(sorted()),
            (2, [false, false]) => Counter::Plane(Plane::new(col)),
            _ => Counter::Tree(KdTree::new(col)),
        }
    }

    /// Points at distance `< eps` from `row`.
    pub(crate) fn count(&self, row: &[f64], eps: f64) -> usize {
        match self {
            Counter::Line(v) => {
                let (lo, hi) = window(v, row[0], eps);
                hi - lo
            }
            Counter::Circle(v) => count_circle(v, row[0], eps),
            Counter::Plane(p) => p.count(row, eps),
            Counter::Tree(t) => t.count_within(row, eps),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn uniform(rng: &mut ChaCha8Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn check(col: &Column, queries: &[(Vec<f64>, f64)]) {
        let fast = Counter::new(col);
        assert!(!matches!(fast, Counter::Tree(_)));
        let tree = KdTree::new(col);
        for (q, eps) in queries {
            assert_eq!(fast.count(q, *eps), tree.count_within(q, *eps), "query {q:?} eps {eps}");
        }
    }

    #[test]
    fn agrees_with_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 2000;
        // a coarse lattice forces ties and exact boundary hits
        let lattice = |rng: &mut ChaCha8Rng| (uniform(rng) * 40.0).floor() * 0.1;
        let line: Vec<f64> = (0..n).map(|_| lattice(&mut rng)).collect();
        let plane: Vec<f64> = (0..2 * n).map(|_| lattice(&mut rng) - 1.5).collect();
        let circle: Vec<f64> = (0..n).map(|_| uniform(&mut rng) * TAU).collect();
        let eps = [0.0, 0.1, 0.25, 0.3, 1.0, 3.0, 3.2, 10.0];

        let col = Column::new(1, line.clone(), vec![false]);
        let qs: Vec<_> = (0..n).step_by(97).flat_map(|i| eps.map(|e| (vec![line[i]], e))).collect();
        check(&col, &qs);

        let col = Column::new(2, plane.clone(), vec![false, false]);
        let qs: Vec<_> = (0..n)
            .step_by(97)
            .flat_map(|i| eps.map(|e| (plane[2 * i..2 * i + 2].to_vec(), e)))
            .collect();
        check(&col, &qs);

        let col = Column::new(1, circle.clone(), vec![true]);
        let mut qs: Vec<_> = (0..n).step_by(97).flat_map(|i| eps.map(|e| (vec![circle[i]], e))).collect();
        qs.extend(eps.map(|e| (vec![0.0], e)));
        qs.extend(eps.map(|e| (vec![TAU - 1e-9], e)));
        check(&col, &qs);
    }

    #[test]
    fn wavelet_counts() {
        let perm = vec![3u32, 0, 4, 1, 2];
        let w = Wavelet::new(perm.clone());
        for lo in 0..=5 {
            for hi in lo..=5 {
                for v in 0..=5 {
                    let expect = perm[lo..hi].iter().filter(|&&x| (x as usize) < v).count();
                    assert_eq!(w.less(lo, hi, v), expect);
                }
            }
        }
    }
}
