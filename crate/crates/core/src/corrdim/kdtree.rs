//! kd-tree for fixed-radius neighbor pair counting.
//!
//! The tree answers one question: for each radius in a sorted grid, how many
//! unordered point pairs lie strictly within that radius. All radii are
//! handled in a single traversal. A pair at distance `d` contributes to every
//! radius `r > d`, so each pair only needs its bin index (the first radius
//! greater than `d`); per-radius counts are prefix sums over bins.
//!
//! A node pair whose distance interval `[dmin, dmax]` contains no grid radius
//! is resolved wholesale: every pair below it lands in the same bin. Node
//! pairs with `dmin` at or beyond the largest radius are dropped. Everything
//! else recurses down to leaf-against-leaf brute force.
//!
//! Counts are integers accumulated per task and summed, so results are
//! identical whether tasks run on one thread or many.

use super::{Norm, PointCloud};
use crate::parallel;

const LEAF_SIZE: usize = 32;
/// Node pairs at or below this many point pairs become parallel work items.
const TASK_PAIRS: u64 = 1 << 15;

struct Node {
    lo: u32,
    hi: u32,
    left: u32,
    right: u32,
}

const NO_CHILD: u32 = u32::MAX;

impl Node {
    fn is_leaf(&self) -> bool {
        self.left == NO_CHILD
    }
    fn len(&self) -> u64 {
        (self.hi - self.lo) as u64
    }
}

pub struct KdTree {
    dim: usize,
    norm: Norm,
    /// Point coordinates, reordered so every node's range is contiguous.
    pts: Vec<f64>,
    nodes: Vec<Node>,
    /// Per node: `dim` minima followed by `dim` maxima.
    boxes: Vec<f64>,
}

/// Maps a pairwise distance to the index of the first radius exceeding it.
/// `index == radii.len()` means the pair is outside every radius.
///
/// For linearly spaced radii the index comes from one multiply plus a
/// correction loop, so the result is always exactly the partition point.
pub(super) struct BinMap<'r> {
    radii: &'r [f64],
    r_last: f64,
    origin: f64,
    inv_step: Option<f64>,
}

impl<'r> BinMap<'r> {
    pub(super) fn new(radii: &'r [f64]) -> Self {
        let inv_step = if radii.len() >= 2 {
            let step = (radii[radii.len() - 1] - radii[0]) / (radii.len() - 1) as f64;
            let uniform = radii
                .windows(2)
                .all(|w| ((w[1] - w[0]) - step).abs() <= step * 1e-9);
            (uniform && step > 0.0).then(|| 1.0 / step)
        } else {
            None
        };
        BinMap {
            radii,
            r_last: *radii.last().expect("empty radius grid"),
            origin: radii[0],
            inv_step,
        }
    }

    #[inline]
    pub(super) fn index(&self, d: f64) -> usize {
        match self.inv_step {
            Some(inv) => {
                let r = self.radii;
                let top = r.len();
                // branch-free first guess, then an exact fixup that almost
                // never iterates
                let g = ((d - self.origin) * inv + 1.0).max(0.0).min(top as f64);
                let mut k = g as usize;
                while k > 0 && r[k - 1] > d {
                    k -= 1;
                }
                while k < top && r[k] <= d {
                    k += 1;
                }
                k
            }
            None => {
                if d >= self.r_last {
                    self.radii.len()
                } else {
                    self.radii.partition_point(|&r| r <= d)
                }
            }
        }
    }
}

impl KdTree {
    pub fn build(cloud: &PointCloud, norm: Norm) -> KdTree {
        let n = cloud.n_points();
        let dim = cloud.dim();
        let mut perm: Vec<u32> = (0..n as u32).collect();
        let mut tree = KdTree {
            dim,
            norm,
            pts: Vec::with_capacity(n * dim),
            nodes: Vec::new(),
            boxes: Vec::new(),
        };
        tree.build_node(cloud.coords(), &mut perm, 0);
        for &p in &perm {
            tree.pts
                .extend_from_slice(&cloud.coords()[p as usize * dim..(p as usize + 1) * dim]);
        }
        tree
    }

    fn build_node(&mut self, coords: &[f64], perm: &mut [u32], offset: usize) -> u32 {
        let dim = self.dim;
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            lo: offset as u32,
            hi: (offset + perm.len()) as u32,
            left: NO_CHILD,
            right: NO_CHILD,
        });
        let box_at = self.boxes.len();
        self.boxes.extend(std::iter::repeat(f64::INFINITY).take(dim));
        self.boxes
            .extend(std::iter::repeat(f64::NEG_INFINITY).take(dim));
        for &p in perm.iter() {
            let pt = &coords[p as usize * dim..(p as usize + 1) * dim];
            for k in 0..dim {
                if pt[k] < self.boxes[box_at + k] {
                    self.boxes[box_at + k] = pt[k];
                }
                if pt[k] > self.boxes[box_at + dim + k] {
                    self.boxes[box_at + dim + k] = pt[k];
                }
            }
        }
        if perm.len() <= LEAF_SIZE {
            return id;
        }
        let split_dim = (0..dim)
            .max_by(|&a, &b| {
                let ea = self.boxes[box_at + dim + a] - self.boxes[box_at + a];
                let eb = self.boxes[box_at + dim + b] - self.boxes[box_at + b];
                ea.total_cmp(&eb)
            })
            .unwrap();
        let mid = perm.len() / 2;
        perm.select_nth_unstable_by(mid, |&a, &b| {
            let ca = coords[a as usize * dim + split_dim];
            let cb = coords[b as usize * dim + split_dim];
            ca.total_cmp(&cb)
        });
        let (lo_half, hi_half) = perm.split_at_mut(mid);
        let left = self.build_node(coords, lo_half, offset);
        let right = self.build_node(coords, hi_half, offset + mid);
        self.nodes[id as usize].left = left;
        self.nodes[id as usize].right = right;
        id
    }

    /// Counts, for every radius, the unordered pairs strictly within it.
    ///
    /// Euclidean comparisons run on squared distances against squared radii,
    /// which preserves the strict inequality exactly.
    pub fn pair_histogram(&self, radii: &[f64]) -> Vec<u64> {
        assert!(!radii.is_empty());
        let cmp_radii: Vec<f64> = match self.norm {
            Norm::Max => radii.to_vec(),
            Norm::Euclidean => radii.iter().map(|r| r * r).collect(),
        };
        let bins = BinMap::new(&cmp_radii);
        let n_bins = cmp_radii.len() + 1;

        let mut coarse = vec![0u64; n_bins];
        let mut tasks: Vec<(u32, u32)> = Vec::new();
        self.collect(0, 0, &bins, &mut coarse, &mut tasks);

        let delta = parallel::fold_merge(
            &tasks,
            || vec![0u64; n_bins],
            |mut acc, &(a, b)| {
                self.walk(a, b, &bins, &mut acc);
                acc
            },
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

        let mut counts = Vec::with_capacity(cmp_radii.len());
        let mut acc = 0u64;
        for k in 0..cmp_radii.len() {
            acc += coarse[k] + delta[k];
            counts.push(acc);
        }
        counts
    }

    pub fn count_within(&self, eps: f64) -> u64 {
        self.pair_histogram(&[eps])[0]
    }

    /// Distance interval between two node boxes in comparison space.
    fn box_interval(&self, a: u32, b: u32) -> (f64, f64) {
        let dim = self.dim;
        let ba = a as usize * 2 * dim;
        let bb = b as usize * 2 * dim;
        match self.norm {
            Norm::Max => {
                let mut dmin = 0.0f64;
                let mut dmax = 0.0f64;
                for k in 0..dim {
                    let gap = (self.boxes[ba + k] - self.boxes[bb + dim + k])
                        .max(self.boxes[bb + k] - self.boxes[ba + dim + k])
                        .max(0.0);
                    let span = (self.boxes[ba + dim + k] - self.boxes[bb + k])
                        .max(self.boxes[bb + dim + k] - self.boxes[ba + k]);
                    if gap > dmin {
                        dmin = gap;
                    }
                    if span > dmax {
                        dmax = span;
                    }
                }
                (dmin, dmax)
            }
            Norm::Euclidean => {
                let mut smin = 0.0f64;
                let mut smax = 0.0f64;
                for k in 0..dim {
                    let gap = (self.boxes[ba + k] - self.boxes[bb + dim + k])
                        .max(self.boxes[bb + k] - self.boxes[ba + dim + k])
                        .max(0.0);
                    let span = (self.boxes[ba + dim + k] - self.boxes[bb + k])
                        .max(self.boxes[bb + dim + k] - self.boxes[ba + k]);
                    smin += gap * gap;
                    smax += span * span;
                }
                (smin, smax)
            }
        }
    }

    fn pair_count(&self, a: u32, b: u32) -> u64 {
        if a == b {
            let n = self.nodes[a as usize].len();
            n * (n - 1) / 2
        } else {
            self.nodes[a as usize].len() * self.nodes[b as usize].len()
        }
    }

    /// Tries to finish a node pair without descending. Returns false when the
    /// pair still straddles at least one radius.
    #[inline]
    fn resolve(&self, a: u32, b: u32, bins: &BinMap, delta: &mut [u64]) -> bool {
        let (dmin, dmax) = self.box_interval(a, b);
        if dmin >= bins.r_last {
            return true;
        }
        let klo = bins.index(dmin);
        let khi = bins.index(dmax);
        if klo == khi {
            delta[klo] += self.pair_count(a, b);
            return true;
        }
        false
    }

    fn collect(&self, a: u32, b: u32, bins: &BinMap, coarse: &mut [u64], tasks: &mut Vec<(u32, u32)>) {
        if self.resolve(a, b, bins, coarse) {
            return;
        }
        let na = &self.nodes[a as usize];
        let nb = &self.nodes[b as usize];
        if self.pair_count(a, b) <= TASK_PAIRS || (na.is_leaf() && nb.is_leaf()) {
            tasks.push((a, b));
            return;
        }
        if a == b {
            self.collect(na.left, na.left, bins, coarse, tasks);
            self.collect(na.right, na.right, bins, coarse, tasks);
            self.collect(na.left, na.right, bins, coarse, tasks);
        } else if na.is_leaf() || (!nb.is_leaf() && nb.len() >= na.len()) {
            self.collect(a, nb.left, bins, coarse, tasks);
            self.collect(a, nb.right, bins, coarse, tasks);
        } else {
            self.collect(na.left, b, bins, coarse, tasks);
            self.collect(na.right, b, bins, coarse, tasks);
        }
    }

    fn walk(&self, a: u32, b: u32, bins: &BinMap, delta: &mut [u64]) {
        if self.resolve(a, b, bins, delta) {
            return;
        }
        let na = &self.nodes[a as usize];
        let nb = &self.nodes[b as usize];
        if na.is_leaf() && nb.is_leaf() {
            if a == b {
                self.brute_self(na.lo as usize, na.hi as usize, bins, delta);
            } else {
                self.brute_cross(
                    na.lo as usize,
                    na.hi as usize,
                    nb.lo as usize,
                    nb.hi as usize,
                    bins,
                    delta,
                );
            }
            return;
        }
        if a == b {
            self.walk(na.left, na.left, bins, delta);
            self.walk(na.right, na.right, bins, delta);
            self.walk(na.left, na.right, bins, delta);
        } else if na.is_leaf() || (!nb.is_leaf() && nb.len() >= na.len()) {
            self.walk(a, nb.left, bins, delta);
            self.walk(a, nb.right, bins, delta);
        } else {
            self.walk(na.left, b, bins, delta);
            self.walk(na.right, b, bins, delta);
        }
    }

    fn brute_self(&self, lo: usize, hi: usize, bins: &BinMap, delta: &mut [u64]) {
        let dim = self.dim;
        for p in lo..hi {
            let a = &self.pts[p * dim..(p + 1) * dim];
            let rest = &self.pts[(p + 1) * dim..hi * dim];
            bin_row(a, rest, dim, self.norm, bins, delta);
        }
    }

    fn brute_cross(
        &self,
        alo: usize,
        ahi: usize,
        blo: usize,
        bhi: usize,
        bins: &BinMap,
        delta: &mut [u64],
    ) {
        let dim = self.dim;
        let b = &self.pts[blo * dim..bhi * dim];
        for p in alo..ahi {
            let a = &self.pts[p * dim..(p + 1) * dim];
            bin_row(a, b, dim, self.norm, bins, delta);
        }
    }
}

/// Bins the distances from one point to a contiguous row of points. The
/// per-dimension loops are monomorphized so the distance computation stays
/// branch-free and the norm dispatch happens once per row.
fn bin_row(a: &[f64], row: &[f64], dim: usize, norm: Norm, bins: &BinMap, delta: &mut [u64]) {
    match (norm, dim) {
        (Norm::Max, 1) => bin_row_max::<1>(a, row, bins, delta),
        (Norm::Max, 2) => bin_row_max::<2>(a, row, bins, delta),
        (Norm::Max, 3) => bin_row_max::<3>(a, row, bins, delta),
        (Norm::Max, 4) => bin_row_max::<4>(a, row, bins, delta),
        (Norm::Max, 5) => bin_row_max::<5>(a, row, bins, delta),
        (Norm::Max, 6) => bin_row_max::<6>(a, row, bins, delta),
        (Norm::Max, _) => {
            for q in row.chunks_exact(dim) {
                let mut m = 0.0f64;
                for k in 0..dim {
                    m = m.max((a[k] - q[k]).abs());
                }
                delta[bins.index(m)] += 1;
            }
        }
        (Norm::Euclidean, _) => {
            for q in row.chunks_exact(dim) {
                let mut s = 0.0f64;
                for k in 0..dim {
                    let d = a[k] - q[k];
                    s += d * d;
                }
                delta[bins.index(s)] += 1;
            }
        }
    }
}

fn bin_row_max<const D: usize>(a: &[f64], row: &[f64], bins: &BinMap, delta: &mut [u64]) {
    let a: &[f64; D] = a.try_into().expect("point width");
    for q in row.chunks_exact(D) {
        let mut m = 0.0f64;
        for k in 0..D {
            m = m.max((a[k] - q[k]).abs());
        }
        delta[bins.index(m)] += 1;
    }
}

/// Pair counts for a 1-dimensional cloud: sort once, then one two-pointer
/// sweep per radius. Used as a fast path; gives the same counts as the tree.
pub(crate) fn histogram_1d(values: &[f64], radii: &[f64]) -> Vec<u64> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    radii
        .iter()
        .map(|&r| {
            let mut count = 0u64;
            let mut lo = 0usize;
            for hi in 0..sorted.len() {
                while sorted[hi] - sorted[lo] >= r {
                    lo += 1;
                }
                count += (hi - lo) as u64;
            }
            count
        })
        .collect()
}

/// Brute-force histogram with a Theiler window: pairs of points whose
/// original indices differ by `w` or less are excluded.
pub(super) fn histogram_theiler(cloud: &PointCloud, norm: Norm, radii: &[f64], w: usize) -> Vec<u64> {
    let cmp_radii: Vec<f64> = match norm {
        Norm::Max => radii.to_vec(),
        Norm::Euclidean => radii.iter().map(|r| r * r).collect(),
    };
    let bins = BinMap::new(&cmp_radii);
    let n = cloud.n_points();
    let dim = cloud.dim();
    let coords = cloud.coords();
    let rows: Vec<usize> = (0..n).collect();
    let delta = parallel::fold_merge(
        &rows,
        || vec![0u64; cmp_radii.len() + 1],
        |mut acc, &i| {
            let a = &coords[i * dim..(i + 1) * dim];
            for j in (i + w + 1)..n {
                let b = &coords[j * dim..(j + 1) * dim];
                let d = match norm {
                    Norm::Max => {
                        let mut m = 0.0f64;
                        for k in 0..dim {
                            let v = (a[k] - b[k]).abs();
                            if v > m {
                                m = v;
                            }
                        }
                        m
                    }
                    Norm::Euclidean => {
                        let mut s = 0.0f64;
                        for k in 0..dim {
                            let v = a[k] - b[k];
                            s += v * v;
                        }
                        s
                    }
                };
                acc[bins.index(d)] += 1;
            }
            acc
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    );
    let mut counts = Vec::with_capacity(cmp_radii.len());
    let mut acc = 0u64;
    for k in 0..cmp_radii.len() {
        acc += delta[k];
        counts.push(acc);
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_count(cloud: &PointCloud, norm: Norm, eps: f64) -> u64 {
        let n = cloud.n_points();
        let mut count = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                let a = cloud.point(i);
                let b = cloud.point(j);
                let d = match norm {
                    Norm::Max => a
                        .iter()
                        .zip(b)
                        .map(|(x, y)| (x - y).abs())
                        .fold(0.0f64, f64::max),
                    Norm::Euclidean => a
                        .iter()
                        .zip(b)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt(),
                };
                if d < eps {
                    count += 1;
                }
            }
        }
        count
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> PointCloud {
        let coords: Vec<f64> = (0..n * dim).map(|_| rng.gen::<f64>()).collect();
        PointCloud::new(dim, coords).unwrap()
    }

    #[test]
    fn histogram_matches_naive_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, dim) in &[(40usize, 1usize), (120, 2), (90, 3), (64, 5)] {
            let cloud = random_cloud(&mut rng, n, dim);
            let radii: Vec<f64> = (0..12).map(|k| 0.02 + 0.09 * k as f64).collect();
            for norm in [Norm::Max, Norm::Euclidean] {
                let tree = KdTree::build(&cloud, norm);
                let counts = tree.pair_histogram(&radii);
                for (k, &r) in radii.iter().enumerate() {
                    assert_eq!(
                        counts[k],
                        naive_count(&cloud, norm, r),
                        "n={n} dim={dim} r={r} norm={norm:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn histogram_1d_matches_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values: Vec<f64> = (0..500).map(|_| rng.gen::<f64>()).collect();
        let cloud = PointCloud::new(1, values.clone()).unwrap();
        let radii: Vec<f64> = (1..=20).map(|k| 0.05 * k as f64).collect();
        let tree = KdTree::build(&cloud, Norm::Max);
        assert_eq!(tree.pair_histogram(&radii), histogram_1d(&values, &radii));
    }

    #[test]
    fn duplicate_points_are_counted() {
        let cloud = PointCloud::new(2, vec![0.5, 0.5, 0.5, 0.5, 0.5, 0.5]).unwrap();
        let tree = KdTree::build(&cloud, Norm::Max);
        // three coincident points form three pairs at distance zero
        assert_eq!(tree.count_within(1e-9), 3);
    }

    #[test]
    fn strict_inequality_at_radius_boundary() {
        let cloud = PointCloud::new(1, vec![0.0, 0.5]).unwrap();
        let tree = KdTree::build(&cloud, Norm::Max);
        assert_eq!(tree.count_within(0.5), 0);
        assert_eq!(tree.count_within(0.5 + 1e-12), 1);
    }

    #[test]
    fn theiler_window_excludes_close_indices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cloud = random_cloud(&mut rng, 60, 2);
        let radii = [0.3, 0.6];
        for w in [1usize, 3] {
            let counts = histogram_theiler(&cloud, Norm::Max, &radii, w);
            for (k, &r) in radii.iter().enumerate() {
                let mut expect = 0;
                for i in 0..60 {
                    for j in (i + w + 1)..60 {
                        let a = cloud.point(i);
                        let b = cloud.point(j);
                        let d = a
                            .iter()
                            .zip(b)
                            .map(|(x, y)| (x - y).abs())
                            .fold(0.0f64, f64::max);
                        if d < r {
                            expect += 1;
                        }
                    }
                }
                assert_eq!(counts[k], expect, "w={w} r={r}");
            }
        }
    }
}
