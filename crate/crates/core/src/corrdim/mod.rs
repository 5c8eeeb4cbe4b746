//! Correlation dimension estimation from the Grassberger-Procaccia
//! correlation sum.
//!
//! The correlation sum of a point cloud at radius `eps` is the fraction of
//! unordered point pairs closer than `eps`. Over a grid of radii the curve of
//! `ln C(eps)` against `ln eps` is fitted by least squares; the slope is the
//! correlation dimension estimate D2.
//!
//! Distances default to the maximum (Chebyshev) norm, which makes box-based
//! pair counting cheapest; the Euclidean norm is available as an option.
//! Radii with zero pair count are dropped from the curve rather than clamped,
//! since their logarithm is undefined and clamping would bias the slope.

mod kdtree;
mod pairbins;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use kdtree::KdTree;
pub(crate) use kdtree::histogram_1d;
pub(crate) use pairbins::{PairBinTable, MAX_TABLE_RADII};

/// Distance norm used for pair counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    #[default]
    Max,
    Euclidean,
}

/// Spacing of the radius grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Grid of `n_steps` radii covering `[eps_min, eps_max)`.
///
/// The k-th radius is `eps_min + k * (eps_max - eps_min) / n_steps`, so the
/// grid holds `n_steps` radii and stops one step short of `eps_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusGrid {
    pub eps_min: f64,
    pub eps_max: f64,
    pub n_steps: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Default for RadiusGrid {
    /// The grid used throughout for coupled logistic networks.
    fn default() -> Self {
        RadiusGrid {
            eps_min: 0.0562,
            eps_max: 0.630,
            n_steps: 50,
            spacing: Spacing::Linear,
        }
    }
}

impl RadiusGrid {
    pub fn new(eps_min: f64, eps_max: f64, n_steps: usize) -> Result<Self> {
        let grid = RadiusGrid {
            eps_min,
            eps_max,
            n_steps,
            spacing: Spacing::Linear,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn log_spaced(eps_min: f64, eps_max: f64, n_steps: usize) -> Result<Self> {
        let grid = RadiusGrid {
            eps_min,
            eps_max,
            n_steps,
            spacing: Spacing::Log,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_min > 0.0 && self.eps_min.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eps_min must be positive, got {}",
                self.eps_min
            )));
        }
        if !(self.eps_max > self.eps_min && self.eps_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eps_max must exceed eps_min, got [{}, {}]",
                self.eps_min, self.eps_max
            )));
        }
        if self.n_steps < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 radius steps, got {}",
                self.n_steps
            )));
        }
        Ok(())
    }

    /// The radii, ascending.
    pub fn radii(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Linear => {
                let step = (self.eps_max - self.eps_min) / self.n_steps as f64;
                (0..self.n_steps)
                    .map(|k| self.eps_min + k as f64 * step)
                    .collect()
            }
            Spacing::Log => {
                let lmin = self.eps_min.ln();
                let step = (self.eps_max.ln() - lmin) / self.n_steps as f64;
                (0..self.n_steps)
                    .map(|k| (lmin + k as f64 * step).exp())
                    .collect()
            }
        }
    }
}

/// Options for pair counting.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CorrDimOptions {
    #[serde(default)]
    pub norm: Norm,
    /// Pairs of points whose time indices differ by this much or less are
    /// excluded from the count. Zero (the default) excludes nothing beyond
    /// self-pairs.
    #[serde(default)]
    pub theiler_window: usize,
}

/// Options for the slope fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// When set, restrict the fit to an automatically chosen scaling region
    /// instead of the full retained curve.
    #[serde(default)]
    pub auto_region: bool,
    /// Smallest window considered by the region search.
    #[serde(default = "default_min_region")]
    pub min_region_len: usize,
    /// Relative drift of point-to-point slopes tolerated inside a scaling
    /// region, as a fraction of the curve's median local slope.
    #[serde(default = "default_slope_band")]
    pub slope_band: f64,
}

fn default_min_region() -> usize {
    5
}

fn default_slope_band() -> f64 {
    0.06
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            auto_region: false,
            min_region_len: default_min_region(),
            slope_band: default_slope_band(),
        }
    }
}

/// A set of points in `R^dim`, stored point-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("point dimension is zero".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates do not fill points of dimension {}",
                coords.len(),
                dim
            )));
        }
        let n = coords.len() / dim;
        if n < 2 {
            return Err(Error::NotEnoughPoints { needed: 2, got: n });
        }
        if let Some(bad) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                node: bad % dim,
                time: bad / dim,
            });
        }
        Ok(PointCloud { dim, coords })
    }

    pub fn n_points(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// One point per row, comma separated.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n_points() {
            let row: Vec<String> = self.point(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut coords = Vec::new();
        let mut dim = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            // tolerate a non-numeric header row
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if lineno == 0 && fields.iter().any(|f| f.parse::<f64>().is_err()) {
                continue;
            }
            let row: Vec<f64> = fields
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|_| Error::Parse {
                        line: lineno + 1,
                        msg: format!("bad number {f:?}"),
                    })
                })
                .collect::<Result<_>>()?;
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: format!("expected {d} columns, got {}", row.len()),
                    })
                }
                _ => {}
            }
            coords.extend(row);
        }
        let dim = dim.ok_or(Error::Parse {
            line: 0,
            msg: "no data rows".into(),
        })?;
        PointCloud::new(dim, coords)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// The retained `(ln eps, ln C)` samples of a correlation-sum curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrSumCurve {
    points: Vec<(f64, f64)>,
    n_dropped: usize,
}

impl CorrSumCurve {
    /// Builds a curve from raw samples; callers outside this module mostly
    /// want [`correlation_curve`] instead.
    pub fn from_points(points: Vec<(f64, f64)>, n_dropped: usize) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0].1 <= w[1].1 + 1e-12));
        CorrSumCurve { points, n_dropped }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn n_dropped(&self) -> usize {
        self.n_dropped
    }

    /// True when every retained point has the same ordinate, which happens
    /// for saturated or otherwise degenerate clouds.
    pub fn is_flat(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| (w[0].1 - w[1].1).abs() == 0.0)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("ln_eps,ln_c\n");
        for (x, y) in &self.points {
            out.push_str(&format!("{x},{y}\n"));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// A fitted correlation dimension with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimEstimate {
    pub d2: f64,
    pub intercept: f64,
    pub residual_sum: f64,
    pub n_points_used: usize,
    /// Index into the retained curve where the fitted window starts.
    pub region_start: usize,
}

impl fmt::Display for DimEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "D2 = {:.4} (intercept {:.4}, rss {:.3e}, {} points)",
            self.d2, self.intercept, self.residual_sum, self.n_points_used
        )
    }
}

fn included_pairs(n: usize, w: usize) -> u64 {
    if w + 1 >= n {
        0
    } else {
        let m = (n - w) as u64;
        m * (m - 1) / 2
    }
}

/// Counts for every radius in one pass, dispatching to the cheapest exact
/// method for the cloud.
fn pair_counts(cloud: &PointCloud, radii: &[f64], opts: &CorrDimOptions) -> Vec<u64> {
    if opts.theiler_window > 0 {
        kdtree::histogram_theiler(cloud, opts.norm, radii, opts.theiler_window)
    } else if cloud.dim() == 1 {
        // in one dimension both norms reduce to the absolute difference
        kdtree::histogram_1d(cloud.coords(), radii)
    } else {
        KdTree::build(cloud, opts.norm).pair_histogram(radii)
    }
}

/// Number of unordered pairs strictly within `eps`, exact.
pub fn count_pairs_within(cloud: &PointCloud, eps: f64) -> Result<u64> {
    count_pairs_within_opts(cloud, eps, &CorrDimOptions::default())
}

pub fn count_pairs_within_opts(cloud: &PointCloud, eps: f64, opts: &CorrDimOptions) -> Result<u64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive, got {eps}"
        )));
    }
    Ok(pair_counts(cloud, &[eps], opts)[0])
}

/// Fraction of pairs within `eps`: `2 / (T (T-1)) * count`.
pub fn correlation_sum(cloud: &PointCloud, eps: f64) -> Result<f64> {
    correlation_sum_opts(cloud, eps, &CorrDimOptions::default())
}

pub fn correlation_sum_opts(cloud: &PointCloud, eps: f64, opts: &CorrDimOptions) -> Result<f64> {
    let count = count_pairs_within_opts(cloud, eps, opts)?;
    let total = included_pairs(cloud.n_points(), opts.theiler_window);
    if total == 0 {
        return Err(Error::InvalidParameter(
            "Theiler window excludes every pair".into(),
        ));
    }
    Ok(count as f64 / total as f64)
}

/// Evaluates the correlation sum over a whole radius grid.
///
/// Radii whose pair count is zero are dropped (their logarithm is undefined)
/// and tallied in `n_dropped`. An error is returned when nothing remains.
pub fn correlation_curve(cloud: &PointCloud, grid: &RadiusGrid) -> Result<CorrSumCurve> {
    correlation_curve_opts(cloud, grid, &CorrDimOptions::default())
}

pub fn correlation_curve_opts(
    cloud: &PointCloud,
    grid: &RadiusGrid,
    opts: &CorrDimOptions,
) -> Result<CorrSumCurve> {
    grid.validate()?;
    let radii = grid.radii();
    let counts = pair_counts(cloud, &radii, opts);
    let total = included_pairs(cloud.n_points(), opts.theiler_window);
    if total == 0 {
        return Err(Error::InvalidParameter(
            "Theiler window excludes every pair".into(),
        ));
    }
    let mut points = Vec::with_capacity(radii.len());
    let mut n_dropped = 0;
    for (r, &c) in radii.iter().zip(&counts) {
        if c == 0 {
            n_dropped += 1;
        } else {
            points.push((r.ln(), (c as f64 / total as f64).ln()));
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyCurve {
            eps_min: grid.eps_min,
            eps_max: grid.eps_max,
        });
    }
    Ok(CorrSumCurve::from_points(points, n_dropped))
}

/// Ordinary least squares of `ln C` on `ln eps` over the full retained curve.
pub fn estimate_d2(curve: &CorrSumCurve) -> Result<DimEstimate> {
    estimate_d2_opts(curve, &FitOptions::default())
}

pub fn estimate_d2_opts(curve: &CorrSumCurve, fit: &FitOptions) -> Result<DimEstimate> {
    let pts = curve.points();
    if pts.len() < 2 {
        return Err(Error::NotEnoughPoints {
            needed: 2,
            got: pts.len(),
        });
    }
    let (lo, hi) = if fit.auto_region && pts.len() > fit.min_region_len.max(3) {
        scaling_region(pts, fit.min_region_len.max(3), fit.slope_band)
    } else {
        (0, pts.len())
    };
    let (slope, intercept, rss) = ols(&pts[lo..hi])?;
    Ok(DimEstimate {
        d2: slope,
        intercept,
        residual_sum: rss,
        n_points_used: hi - lo,
        region_start: lo,
    })
}

fn ols(pts: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in pts {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateAbscissa);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rss = pts
        .iter()
        .map(|&(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>();
    Ok((slope, intercept, rss))
}

/// Picks the scaling region: the maximal window anchored at the smallest
/// retained radius whose point-to-point slopes stay within a band of each
/// other. The dimension is the small-radius limit of the slope, so the fit
/// extends outward from the left end of the curve until the slope has
/// visibly drifted; saturated radii never qualify. An exactly straight curve
/// qualifies in full. The band is relative to the magnitude of the slope at
/// the anchor, and the window never shrinks below `min_len` points.
fn scaling_region(pts: &[(f64, f64)], min_len: usize, band: f64) -> (usize, usize) {
    let n = pts.len();
    let slopes: Vec<f64> = pts
        .windows(2)
        .map(|w| {
            let dx = w[1].0 - w[0].0;
            if dx > 0.0 {
                (w[1].1 - w[0].1) / dx
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let min_slopes = min_len.saturating_sub(1).max(2).min(slopes.len());
    // anchor scale: the slope near the smallest radii, averaged over the
    // minimum window to damp counting noise
    let anchor: f64 = slopes[..min_slopes].iter().sum::<f64>() / min_slopes as f64;
    if !anchor.is_finite() || anchor.abs() == 0.0 {
        return (0, n);
    }
    let tol = band.max(0.0) * anchor.abs();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut end = 0;
    while end < slopes.len() {
        let s = slopes[end];
        let nlo = lo.min(s);
        let nhi = hi.max(s);
        if end >= min_slopes && (nhi - nlo > tol || !s.is_finite()) {
            break;
        }
        lo = nlo;
        hi = nhi;
        end += 1;
    }
    (0, end + 1)
}

/// Builds the retained curve from raw pair counts and fits the slope; the
/// exact same normalization, dropping, and fitting path as
/// [`correlation_curve`] followed by [`estimate_d2_opts`].
pub(crate) fn d2_from_counts(
    counts: &[u64],
    radii: &[f64],
    total_pairs: u64,
    fit: &FitOptions,
) -> Result<f64> {
    let mut points = Vec::with_capacity(radii.len());
    let mut n_dropped = 0;
    for (r, &c) in radii.iter().zip(counts) {
        if c == 0 {
            n_dropped += 1;
        } else {
            points.push((r.ln(), (c as f64 / total_pairs as f64).ln()));
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyCurve {
            eps_min: radii[0],
            eps_max: *radii.last().unwrap(),
        });
    }
    let curve = CorrSumCurve::from_points(points, n_dropped);
    Ok(estimate_d2_opts(&curve, fit)?.d2)
}

/// Curve plus fit in one call.
pub fn correlation_dimension(
    cloud: &PointCloud,
    grid: &RadiusGrid,
    opts: &CorrDimOptions,
    fit: &FitOptions,
) -> Result<(DimEstimate, CorrSumCurve)> {
    let curve = correlation_curve_opts(cloud, grid, opts)?;
    let est = estimate_d2_opts(&curve, fit)?;
    Ok((est, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_cloud(seed: u64, n: usize, dim: usize) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointCloud::new(dim, (0..n * dim).map(|_| rng.gen::<f64>()).collect()).unwrap()
    }

    #[test]
    fn two_point_counts() {
        let cloud = PointCloud::new(1, vec![0.0, 0.5]).unwrap();
        assert_eq!(count_pairs_within(&cloud, 1.0).unwrap(), 1);
        assert_eq!(count_pairs_within(&cloud, 0.4).unwrap(), 0);
    }

    #[test]
    fn count_matches_naive_double_loop() {
        let cloud = uniform_cloud(42, 100, 2);
        let eps = 0.1;
        let mut naive = 0;
        for i in 0..100 {
            for j in (i + 1)..100 {
                let a = cloud.point(i);
                let b = cloud.point(j);
                let d = (a[0] - b[0]).abs().max((a[1] - b[1]).abs());
                if d < eps {
                    naive += 1;
                }
            }
        }
        assert_eq!(count_pairs_within(&cloud, eps).unwrap(), naive);
    }

    #[test]
    fn correlation_sum_saturates_to_one() {
        let cloud = uniform_cloud(7, 50, 2);
        assert_eq!(correlation_sum(&cloud, 5.0).unwrap(), 1.0);
        assert_eq!(correlation_sum(&cloud, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn collinear_three_points() {
        let cloud = PointCloud::new(1, vec![0.0, 0.3, 1.0]).unwrap();
        let c = correlation_sum(&cloud, 0.5).unwrap();
        assert!((c - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn curve_above_diameter_is_flat_zero() {
        let cloud = uniform_cloud(3, 40, 2);
        let grid = RadiusGrid::new(2.0, 4.0, 5).unwrap();
        let curve = correlation_curve(&cloud, &grid).unwrap();
        assert_eq!(curve.n_dropped(), 0);
        assert!(curve.points().iter().all(|&(_, lc)| lc == 0.0));
        assert!(curve.is_flat());
    }

    #[test]
    fn curve_is_monotone() {
        for seed in 0..5 {
            let cloud = uniform_cloud(seed, 300, 3);
            let curve = correlation_curve(&cloud, &RadiusGrid::default()).unwrap();
            for w in curve.points().windows(2) {
                assert!(w[0].1 <= w[1].1);
            }
        }
    }

    #[test]
    fn default_grid_has_fifty_radii() {
        let radii = RadiusGrid::default().radii();
        assert_eq!(radii.len(), 50);
        assert!((radii[0] - 0.0562).abs() < 1e-15);
        assert!(*radii.last().unwrap() < 0.630);
    }

    #[test]
    fn empty_curve_reports_grid() {
        let cloud = PointCloud::new(1, vec![0.0, 10.0, 20.0]).unwrap();
        let grid = RadiusGrid::new(0.01, 0.1, 5).unwrap();
        match correlation_curve(&cloud, &grid) {
            Err(Error::EmptyCurve { eps_min, eps_max }) => {
                assert_eq!(eps_min, 0.01);
                assert_eq!(eps_max, 0.1);
            }
            other => panic!("expected EmptyCurve, got {other:?}"),
        }
    }

    #[test]
    fn exact_line_fit() {
        let pts: Vec<(f64, f64)> = (0..20)
            .map(|k| {
                let x = -3.0 + 0.1 * k as f64;
                (x, 2.0 * x + 1.0)
            })
            .collect();
        let curve = CorrSumCurve::from_points(pts, 0);
        let est = estimate_d2(&curve).unwrap();
        assert!((est.d2 - 2.0).abs() < 1e-12);
        assert!(est.residual_sum < 1e-20);
        // the region search must keep the whole line
        let auto = estimate_d2_opts(
            &curve,
            &FitOptions {
                auto_region: true,
                ..FitOptions::default()
            },
        )
        .unwrap();
        assert_eq!(auto.n_points_used, 20);
        assert!((auto.d2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_abscissa_detected() {
        let curve = CorrSumCurve::from_points(vec![(1.0, 0.0), (1.0, 0.0), (1.0, 0.0)], 0);
        assert!(matches!(
            estimate_d2(&curve),
            Err(Error::DegenerateAbscissa)
        ));
    }

    #[test]
    fn too_few_points_rejected() {
        let curve = CorrSumCurve::from_points(vec![(1.0, 1.0)], 0);
        assert!(matches!(
            estimate_d2(&curve),
            Err(Error::NotEnoughPoints { .. })
        ));
    }

    #[test]
    fn translation_leaves_counts_unchanged() {
        // dyadic coordinates keep the translated differences exact in f64
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let quantize = |v: f64| (v * (1 << 20) as f64).round() / (1 << 20) as f64;
        let coords: Vec<f64> = (0..600).map(|_| quantize(rng.gen::<f64>())).collect();
        let cloud = PointCloud::new(2, coords.clone()).unwrap();
        for shift in [1.0, -3.0, 0.5] {
            let moved =
                PointCloud::new(2, coords.iter().map(|v| v + shift).collect()).unwrap();
            for eps in [0.05, 0.2, 0.7] {
                assert_eq!(
                    count_pairs_within(&cloud, eps).unwrap(),
                    count_pairs_within(&moved, eps).unwrap()
                );
            }
        }
    }

    #[test]
    fn scaling_shifts_curve_but_not_slope() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let quantize = |v: f64| (v * (1 << 20) as f64).round() / (1 << 20) as f64;
        let coords: Vec<f64> = (0..1600).map(|_| quantize(rng.gen::<f64>())).collect();
        let cloud = PointCloud::new(2, coords.clone()).unwrap();
        let grid = RadiusGrid::new(0.05, 0.4, 20).unwrap();
        let base_curve = correlation_curve(&cloud, &grid).unwrap();
        let base = estimate_d2(&base_curve).unwrap();
        for s in [2.0, 3.0] {
            let scaled = PointCloud::new(2, coords.iter().map(|v| v * s).collect()).unwrap();
            let sgrid = RadiusGrid::new(0.05 * s, 0.4 * s, 20).unwrap();
            let curve = correlation_curve(&scaled, &sgrid).unwrap();
            assert_eq!(curve.points().len(), base_curve.points().len());
            for (a, b) in curve.points().iter().zip(base_curve.points()) {
                assert_eq!(a.1, b.1);
                assert!((a.0 - (b.0 + s.ln())).abs() < 1e-9);
            }
            let est = estimate_d2(&curve).unwrap();
            assert!((est.d2 - base.d2).abs() < 1e-9);
        }
    }

    #[test]
    fn interval_dimension_with_region_selection() {
        let cloud = uniform_cloud(21, 4000, 1);
        let fit = FitOptions {
            auto_region: true,
            ..FitOptions::default()
        };
        let (est, _) =
            correlation_dimension(&cloud, &RadiusGrid::default(), &CorrDimOptions::default(), &fit)
                .unwrap();
        assert!((est.d2 - 1.0).abs() < 0.1, "d2 = {}", est.d2);
    }

    #[test]
    fn dimension_bounded_by_ambient_dimension() {
        for dim in 1..=3usize {
            let cloud = uniform_cloud(100 + dim as u64, 4000, dim);
            let curve = correlation_curve(&cloud, &RadiusGrid::default()).unwrap();
            let est = estimate_d2(&curve).unwrap();
            assert!(est.d2 <= dim as f64 + 0.2, "dim {dim}: d2 = {}", est.d2);
            assert!(est.d2 >= 0.0);
        }
    }

    #[test]
    fn cloud_csv_round_trip() {
        let cloud = uniform_cloud(13, 20, 3);
        let text = cloud.to_csv_string();
        let back = PointCloud::from_csv_str(&text).unwrap();
        assert_eq!(cloud, back);
    }
}
