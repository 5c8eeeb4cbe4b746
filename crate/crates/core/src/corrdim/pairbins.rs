//! Precomputed per-pair radius bins for a fixed sub-cloud, reused across
//! many counting passes that only vary one extra coordinate.
//!
//! The bin of a pair is the index of the first radius exceeding its
//! distance. Binning is monotone in the distance, so under the max norm the
//! bin of an extended pair is exactly the integer max of the fixed part's
//! bin and the extra coordinate's bin:
//!
//! ```text
//! bin(max(d_fixed, |dy|)) == max(bin(d_fixed), bin(|dy|))
//! ```
//!
//! A permutation shuffle test evaluates hundreds of clouds that share their
//! fixed columns; tabulating the fixed bins once turns each evaluation into
//! a single cheap pass. Pairs whose fixed distance already exceeds every
//! radius can never be counted, whatever the extra coordinate does, so they
//! are dropped from the table entirely.

use super::kdtree::BinMap;
use super::PointCloud;
use crate::parallel;

/// Fixed-part pair bins, compressed to the pairs that can still count.
/// Entry `(offsets[e], bins[e])` in row `s` describes the pair
/// `(s, s + 1 + offset)`.
pub struct PairBinTable {
    row_starts: Vec<u64>,
    offsets: Vec<u16>,
    bins: Vec<u8>,
    n_points: usize,
    n_radii: usize,
}

/// Largest radius count a one-byte bin can hold (one value is reserved for
/// the beyond-every-radius overflow bin).
pub const MAX_TABLE_RADII: usize = u8::MAX as usize;

impl PairBinTable {
    /// Tabulates the max-norm pair bins of `cloud` against `radii`.
    pub fn build(cloud: &PointCloud, radii: &[f64]) -> PairBinTable {
        assert!(radii.len() <= MAX_TABLE_RADII);
        assert!(cloud.n_points() - 1 <= u16::MAX as usize + 1);
        let n = cloud.n_points();
        let dim = cloud.dim();
        let coords = cloud.coords();
        let bins = BinMap::new(radii);
        let overflow = radii.len() as u8;
        let rows: Vec<(Vec<u16>, Vec<u8>)> = parallel::map_indexed(n - 1, |s| {
            let a = &coords[s * dim..(s + 1) * dim];
            let rest = &coords[(s + 1) * dim..];
            let mut offs = Vec::new();
            let mut row_bins = Vec::new();
            for (t_off, q) in rest.chunks_exact(dim).enumerate() {
                let mut m = 0.0f64;
                for k in 0..dim {
                    m = m.max((a[k] - q[k]).abs());
                }
                let b = bins.index(m) as u8;
                if b < overflow {
                    offs.push(t_off as u16);
                    row_bins.push(b);
                }
            }
            (offs, row_bins)
        });
        let total: usize = rows.iter().map(|(o, _)| o.len()).sum();
        let mut row_starts = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(total);
        let mut bins_out = Vec::with_capacity(total);
        for (offs, row_bins) in rows {
            row_starts.push(offsets.len() as u64);
            offsets.extend_from_slice(&offs);
            bins_out.extend_from_slice(&row_bins);
        }
        row_starts.push(offsets.len() as u64);
        PairBinTable {
            row_starts,
            offsets,
            bins: bins_out,
            n_points: n,
            n_radii: radii.len(),
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Pair counts per radius for the cloud extended by the scalar column
    /// `y`: the count at radius `k` covers pairs with
    /// `max(d_fixed, |y[s] - y[t]|) < r_k`. Exactly equal to rebuilding the
    /// joint cloud and counting it directly.
    pub fn histogram_with_column(&self, y: &[f64], radii: &[f64]) -> Vec<u64> {
        assert_eq!(y.len(), self.n_points);
        assert_eq!(radii.len(), self.n_radii);
        let bins = BinMap::new(radii);
        let rows: Vec<usize> = (0..self.n_points - 1).collect();
        // fixed 256-slot accumulators, indexed by u8: no bounds checks and
        // two interleaved copies to break store-to-load dependency chains
        let delta = parallel::fold_merge(
            &rows,
            || vec![0u64; 512],
            |mut acc, &s| {
                let ys = y[s];
                let tail = &y[s + 1..];
                let lo = self.row_starts[s] as usize;
                let hi = self.row_starts[s + 1] as usize;
                let offs = &self.offsets[lo..hi];
                let row_bins = &self.bins[lo..hi];
                let (bank0, bank1) = acc.split_at_mut(256);
                let mut flip = false;
                for (&t_off, &fb) in offs.iter().zip(row_bins) {
                    let by = bins.index((ys - tail[t_off as usize]).abs()) as u8;
                    let slot = by.max(fb) as usize;
                    if flip {
                        bank1[slot] += 1;
                    } else {
                        bank0[slot] += 1;
                    }
                    flip = !flip;
                }
                acc
            },
            |mut a, b| {
                for (x, v) in a.iter_mut().zip(b) {
                    *x += v;
                }
                a
            },
        );
        let mut counts = Vec::with_capacity(radii.len());
        let mut acc = 0u64;
        for k in 0..radii.len() {
            acc += delta[k] + delta[256 + k];
            counts.push(acc);
        }
        counts
    }
}
