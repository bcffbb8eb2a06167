//! Static k-d tree under the maximum norm, for nearest-neighbour distances
//! and open-ball counts. Axes may be periodic with period 2π.

use std::f64::consts::{PI, TAU};

use super::sample::Column;

pub const MAX_DIM: usize = 4;
const LEAF: usize = 16;
/// Largest supported neighbour rank.
pub const MAX_K: usize = 32;
/// Traversal stack; the tree is balanced, so depth stays below 64 for any
/// realistic size.
const STACK: usize = 128;

type Point = [f64; MAX_DIM];

#[derive(Debug, Clone)]
struct Node {
    lo: Point,
    hi: Point,
    start: u32,
    end: u32,
    /// Child indices; 0 marks a leaf (the root is never a child).
    left: u32,
    right: u32,
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    periodic: [bool; MAX_DIM],
    any_periodic: bool,
    points: Vec<Point>,
    /// Original row of each stored point.
    rows: Vec<u32>,
    nodes: Vec<Node>,
}

#[inline]
fn axis_dist(a: f64, b: f64, periodic: bool) -> f64 {
    let d = (a - b).abs();
    if periodic {
        d.min(TAU - d)
    } else {
        d
    }
}

impl KdTree {
    pub fn new(col: &Column) -> Self {
        let dim = col.dim;
        assert!((1..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        let mut periodic = [false; MAX_DIM];
        periodic[..dim].copy_from_slice(&col.periodic);
        let n = col.len();
        let mut points: Vec<Point> = (0..n)
            .map(|i| {
                let mut p = [0.0; MAX_DIM];
                p[..dim].copy_from_slice(col.row(i));
                p
            })
            .collect();
        let mut rows: Vec<u32> = (0..n as u32).collect();
        let mut tree = KdTree {
            dim,
            periodic,
            any_periodic: periodic.contains(&true),
            points: Vec::new(),
            rows: Vec::new(),
            nodes: Vec::with_capacity(2 * n / LEAF + 1),
        };
        if n > 0 {
            tree.build(&mut points, &mut rows, 0, n);
        }
        tree.points = points;
        tree.rows = rows;
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Original rows in storage order, which keeps neighbours together.
    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    fn build(&mut self, points: &mut [Point], rows: &mut [u32], start: usize, end: usize) -> u32 {
        let mut lo = [f64::INFINITY; MAX_DIM];
        let mut hi = [f64::NEG_INFINITY; MAX_DIM];
        for p in &points[start..end] {
            for d in 0..self.dim {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            lo,
            hi,
            start: start as u32,
            end: end as u32,
            left: 0,
            right: 0,
        });
        if end - start <= LEAF {
            return id;
        }
        let axis = (0..self.dim)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        let mid = start + (end - start) / 2;
        // Sort a permutation so points and rows move together.
        let mut order: Vec<usize> = (start..end).collect();
        order.select_nth_unstable_by(mid - start, |&i, &j| {
            points[i][axis].total_cmp(&points[j][axis]).then(rows[i].cmp(&rows[j]))
        });
        let p: Vec<Point> = order.iter().map(|&i| points[i]).collect();
        let r: Vec<u32> = order.iter().map(|&i| rows[i]).collect();
        points[start..end].copy_from_slice(&p);
        rows[start..end].copy_from_slice(&r);
        let left = self.build(points, rows, start, mid);
        let right = self.build(points, rows, mid, end);
        let node = &mut self.nodes[id as usize];
        node.left = left;
        node.right = right;
        id
    }

    #[inline]
    fn dist(&self, a: &Point, b: &Point) -> f64 {
        if !self.any_periodic {
            let mut m = 0.0f64;
            for d in 0..self.dim {
                m = m.max((a[d] - b[d]).abs());
            }
            return m;
        }
        let mut m = 0.0f64;
        for d in 0..self.dim {
            m = m.max(axis_dist(a[d], b[d], self.periodic[d]));
        }
        m
    }

    /// Smallest distance from `q` to any point of the node's box.
    #[inline]
    fn box_min(&self, node: &Node, q: &Point) -> f64 {
        if !self.any_periodic {
            let mut m = 0.0f64;
            for d in 0..self.dim {
                m = m.max(node.lo[d] - q[d]).max(q[d] - node.hi[d]);
            }
            return m;
        }
        let mut m = 0.0f64;
        for d in 0..self.dim {
            let x = q[d];
            let v = if x >= node.lo[d] && x <= node.hi[d] {
                0.0
            } else if self.periodic[d] {
                axis_dist(x, node.lo[d], true).min(axis_dist(x, node.hi[d], true))
            } else if x < node.lo[d] {
                node.lo[d] - x
            } else {
                x - node.hi[d]
            };
            m = m.max(v);
        }
        m
    }

    /// Largest distance from `q` to any point of the node's box.
    #[inline]
    fn box_max(&self, node: &Node, q: &Point) -> f64 {
        let mut m = 0.0f64;
        for d in 0..self.dim {
            let x = q[d];
            let v = if self.periodic[d] {
                let anti = if x < PI { x + PI } else { x - PI };
                if anti >= node.lo[d] && anti <= node.hi[d] {
                    PI
                } else {
                    axis_dist(x, node.lo[d], true).max(axis_dist(x, node.hi[d], true))
                }
            } else {
                (x - node.lo[d]).abs().max((x - node.hi[d]).abs())
            };
            m = m.max(v);
        }
        m
    }

    fn point(&self, row: &[f64]) -> Point {
        let mut q = [0.0; MAX_DIM];
        q[..self.dim].copy_from_slice(row);
        q
    }

    /// Distance from `row` to its `k`-th nearest stored point, not counting
    /// the stored point whose original row index is `exclude`.
    pub fn kth_distance(&self, row: &[f64], k: usize, exclude: usize) -> f64 {
        self.knn(row, k, |r| r as usize == exclude).0[k - 1]
    }

    /// The `k` nearest stored points to `row` among those whose original row
    /// index `skip` rejects, as ascending distances and their rows.
    pub fn knn<S>(&self, row: &[f64], k: usize, skip: S) -> ([f64; MAX_K], [u32; MAX_K])
    where
        S: Fn(u32) -> bool,
    {
        assert!((1..=MAX_K).contains(&k), "k must be in 1..={MAX_K}");
        let q = self.point(row);
        let mut best = [f64::INFINITY; MAX_K];
        let mut who = [u32::MAX; MAX_K];
        // nodes with a lower bound on their distance from `q`
        let mut stack = [(0u32, 0.0f64); STACK];
        let mut top = 1;
        while top > 0 {
            top -= 1;
            let (id, bound) = stack[top];
            if bound >= best[k - 1] {
                continue;
            }
            let node = &self.nodes[id as usize];
            if node.left == 0 {
                for i in node.start as usize..node.end as usize {
                    let d = self.dist(&self.points[i], &q);
                    if d < best[k - 1] && !skip(self.rows[i]) {
                        let mut j = k - 1;
                        while j > 0 && best[j - 1] > d {
                            best[j] = best[j - 1];
                            who[j] = who[j - 1];
                            j -= 1;
                        }
                        best[j] = d;
                        who[j] = self.rows[i];
                    }
                }
            } else {
                let bl = self.box_min(&self.nodes[node.left as usize], &q);
                let br = self.box_min(&self.nodes[node.right as usize], &q);
                let (near, far) = if bl <= br {
                    ((node.left, bl), (node.right, br))
                } else {
                    ((node.right, br), (node.left, bl))
                };
                stack[top] = far;
                stack[top + 1] = near;
                top += 2;
            }
        }
        (best, who)
    }

    /// Number of stored points at distance strictly less than `eps`.
    pub fn count_within(&self, row: &[f64], eps: f64) -> usize {
        let q = self.point(row);
        let mut count = 0;
        let mut stack = [0u32; STACK];
        let mut top = 1;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            if self.box_min(node, &q) >= eps {
                continue;
            }
            if self.box_max(node, &q) < eps {
                count += (node.end - node.start) as usize;
                continue;
            }
            if node.left == 0 {
                count += self.points[node.start as usize..node.end as usize]
                    .iter()
                    .filter(|p| self.dist(p, &q) < eps)
                    .count();
            } else {
                stack[top] = node.left;
                stack[top + 1] = node.right;
                top += 2;
            }
        }
        count
    }

}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn random_column(n: usize, periodic: Vec<bool>, seed: u64) -> Column {
        let dim = periodic.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n * dim)
            .map(|i| {
                let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                if periodic[i % dim] {
                    u * TAU
                } else {
                    // clustered values exercise uneven splits
                    (u * 3.0).powi(3)
                }
            })
            .collect();
        Column::new(dim, values, periodic)
    }

    fn brute_dist(col: &Column, i: usize, j: usize) -> f64 {
        (0..col.dim)
            .map(|d| axis_dist(col.row(i)[d], col.row(j)[d], col.periodic[d]))
            .fold(0.0, f64::max)
    }

    #[test]
    fn matches_brute_force() {
        for periodic in [vec![false], vec![true], vec![false, true], vec![false, false, false, true]] {
            let col = random_column(700, periodic, 11);
            let tree = KdTree::new(&col);
            for i in (0..col.len()).step_by(37) {
                let mut d: Vec<f64> = (0..col.len()).filter(|&j| j != i).map(|j| brute_dist(&col, i, j)).collect();
                d.sort_by(f64::total_cmp);
                for k in [1, 4] {
                    assert_eq!(tree.kth_distance(col.row(i), k, i), d[k - 1]);
                }
                for eps in [d[3], d[40], 0.5, 10.0] {
                    // includes the query point itself
                    let expect = 1 + d.iter().filter(|&&x| x < eps).count();
                    assert_eq!(tree.count_within(col.row(i), eps), expect);
                }
            }
        }
    }

    #[test]
    fn circular_distance_wraps() {
        let col = Column::new(1, vec![0.01, TAU - 0.01, 3.0], vec![true]);
        let tree = KdTree::new(&col);
        assert!((tree.kth_distance(&[0.01], 1, 0) - 0.02).abs() < 1e-12);
        assert_eq!(tree.count_within(&[0.0], 0.05), 2);
    }
}
