//! Conditional correlation-dimensional geometric information flow.
//!
//! For node sets I (targets), J (sources) and K (conditioners) over a panel,
//! the measure is built from correlation dimensions of time-aligned joint
//! clouds. Writing `D2(F | P)` for the dimension of the cloud that pairs the
//! next-step states of F with the current states of P,
//!
//! ```text
//! Geo(X'(I) | X(K))   = D2(I', K) - D2(K)
//! GeoC(J -> I | K)    = Geo(X'(I) | X(K)) - Geo(X'(I) | X(J u K))
//! ```
//!
//! A positive value means J carries geometric information about I's future
//! beyond what K already provides. All four dimension estimates inside one
//! GeoC value share a single radius grid, which cancels grid-induced bias in
//! the differences; the value is reported as computed, negative values
//! included.

use std::collections::HashMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::corrdim::{
    correlation_curve_opts, estimate_d2_opts, CorrDimOptions, FitOptions, PointCloud, RadiusGrid,
};
use crate::dynamics::TimeSeriesPanel;
use crate::error::{Error, Result};

/// An ordered set of node indices. Listing order controls coordinate order
/// in embeddings, never membership.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeSet(Vec<usize>);

impl NodeSet {
    pub fn new(indices: impl Into<Vec<usize>>) -> Result<Self> {
        let indices = indices.into();
        for (pos, &id) in indices.iter().enumerate() {
            if indices[..pos].contains(&id) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate node {id} in node set"
                )));
            }
        }
        Ok(NodeSet(indices))
    }

    pub fn empty() -> Self {
        NodeSet(Vec::new())
    }

    pub fn single(id: usize) -> Self {
        NodeSet(vec![id])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.contains(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Appends `id` unless present; returns whether it was added.
    pub fn insert(&mut self, id: usize) -> bool {
        if self.contains(id) {
            false
        } else {
            self.0.push(id);
            true
        }
    }

    /// Self's elements followed by the other set's new elements.
    pub fn union(&self, other: &NodeSet) -> NodeSet {
        let mut out = self.clone();
        for id in other.iter() {
            out.insert(id);
        }
        out
    }

    pub fn without(&self, id: usize) -> NodeSet {
        NodeSet(self.0.iter().copied().filter(|&v| v != id).collect())
    }

    pub fn is_subset_of(&self, other: &NodeSet) -> bool {
        self.0.iter().all(|&v| other.contains(v))
    }

    pub fn sorted(&self) -> Vec<usize> {
        let mut v = self.0.clone();
        v.sort_unstable();
        v
    }
}

impl From<NodeSet> for Vec<usize> {
    fn from(s: NodeSet) -> Vec<usize> {
        s.0
    }
}

/// A conditional geometric information flow value with the four dimension
/// estimates it was assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoCValue {
    pub value: f64,
    /// `D2` of the joint cloud `(X'(I), X(K))`.
    pub d2_target_given_k: f64,
    /// `D2` of the conditioning cloud `X(K)`; zero when K is empty.
    pub d2_k: f64,
    /// `D2` of the joint cloud `(X'(I), X(J u K))`.
    pub d2_target_given_jk: f64,
    /// `D2` of the cloud `X(J u K)`.
    pub d2_jk: f64,
}

/// One GeoC evaluation in the form emitted by the command line tool.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeoCRecord {
    pub source: Vec<usize>,
    pub target: Vec<usize>,
    pub cond: Vec<usize>,
    #[serde(flatten)]
    pub geoc: GeoCValue,
    pub grid: RadiusGrid,
    pub options: CorrDimOptions,
    pub n_steps: usize,
}

fn check_nodes(panel: &TimeSeriesPanel, set: &NodeSet) -> Result<()> {
    for id in set.iter() {
        panel.check_node(id)?;
    }
    Ok(())
}

/// Builds the joint cloud pairing next-step states of `target` nodes with
/// current states of `conditioner` nodes, in their listed order.
///
/// The cloud has `T - 1` points; point `t` holds `x_{t+1}` of every target
/// node followed by `x_t` of every conditioner node.
pub fn build_embedding(
    panel: &TimeSeriesPanel,
    target: &NodeSet,
    conditioners: &NodeSet,
) -> Result<PointCloud> {
    check_nodes(panel, target)?;
    check_nodes(panel, conditioners)?;
    embed_cloud(panel, target.as_slice(), conditioners.as_slice(), None)
}

fn embed_cloud(
    panel: &TimeSeriesPanel,
    future: &[usize],
    past: &[usize],
    surrogate: Option<(usize, &[f64])>,
) -> Result<PointCloud> {
    if future.is_empty() && past.is_empty() {
        return Err(Error::EmptyEmbedding);
    }
    let t_len = panel.n_steps() - 1;
    let d = panel.state_dim();
    let width = (future.len() + past.len()) * d;
    let mut coords = Vec::with_capacity(t_len * width);
    for t in 0..t_len {
        for &node in future {
            for k in 0..d {
                coords.push(panel.value(node, t + 1, k));
            }
        }
        for &node in past {
            match surrogate {
                Some((sj, series)) if sj == node => {
                    for k in 0..d {
                        coords.push(series[t * d + k]);
                    }
                }
                _ => {
                    for k in 0..d {
                        coords.push(panel.value(node, t, k));
                    }
                }
            }
        }
    }
    PointCloud::new(width, coords)
}

type CloudKey = (Vec<usize>, Vec<usize>);

/// Shared estimator for all GeoC evaluations over one panel and grid.
///
/// Dimension estimates are cached by the sorted cloud composition; the
/// forward and backward passes re-request heavily overlapping clouds, and
/// under the max norm a coordinate permutation changes nothing, so sorted
/// keys are safe. Concurrent duplicate inserts are benign because every
/// entry is a deterministic function of the key.
pub struct GeoCEngine<'p> {
    panel: &'p TimeSeriesPanel,
    grid: RadiusGrid,
    opts: CorrDimOptions,
    fit: FitOptions,
    cache: RwLock<HashMap<CloudKey, f64>>,
}

impl<'p> GeoCEngine<'p> {
    pub fn new(panel: &'p TimeSeriesPanel, grid: RadiusGrid) -> Result<Self> {
        Self::with_options(panel, grid, CorrDimOptions::default(), FitOptions::default())
    }

    pub fn with_options(
        panel: &'p TimeSeriesPanel,
        grid: RadiusGrid,
        opts: CorrDimOptions,
        fit: FitOptions,
    ) -> Result<Self> {
        grid.validate()?;
        Ok(GeoCEngine {
            panel,
            grid,
            opts,
            fit,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn panel(&self) -> &TimeSeriesPanel {
        self.panel
    }

    pub fn grid(&self) -> &RadiusGrid {
        &self.grid
    }

    pub fn options(&self) -> &CorrDimOptions {
        &self.opts
    }

    pub(crate) fn fit_options(&self) -> &FitOptions {
        &self.fit
    }

    fn d2_of_cloud(&self, cloud: &PointCloud) -> Result<f64> {
        let curve = correlation_curve_opts(cloud, &self.grid, &self.opts)?;
        Ok(estimate_d2_opts(&curve, &self.fit)?.d2)
    }

    /// Cached dimension of the canonical (sorted) cloud composition.
    fn d2_nodes(&self, future: &[usize], past: &[usize]) -> Result<f64> {
        let key: CloudKey = (future.to_vec(), past.to_vec());
        if let Some(&hit) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(hit);
        }
        let cloud = embed_cloud(self.panel, future, past, None)?;
        let d2 = self.d2_of_cloud(&cloud)?;
        self.cache.write().expect("cache lock").insert(key, d2);
        Ok(d2)
    }

    /// The pair `(D2(I', K), D2(K))`; the second term is zero for empty K.
    pub(crate) fn geo_terms(&self, target: &NodeSet, cond: &NodeSet) -> Result<(f64, f64)> {
        let joint = self.d2_nodes(&target.sorted(), &cond.sorted())?;
        let base = if cond.is_empty() {
            0.0
        } else {
            self.d2_nodes(&[], &cond.sorted())?
        };
        Ok((joint, base))
    }

    /// `Geo(X'(target) | X(cond))`. With an empty conditioning set this is
    /// the dimension of the future-target cloud alone.
    pub fn geo_conditional(&self, target: &NodeSet, cond: &NodeSet) -> Result<f64> {
        if target.is_empty() {
            return Err(Error::InvalidParameter(
                "geo_conditional needs a non-empty target set".into(),
            ));
        }
        check_nodes(self.panel, target)?;
        check_nodes(self.panel, cond)?;
        let (joint, base) = self.geo_terms(target, cond)?;
        Ok(joint - base)
    }

    /// `GeoC(source -> target | cond)` with its four dimension terms.
    ///
    /// When `source` is a subset of `cond` the conditioning set would not
    /// change, so the value is exactly zero and the joint terms mirror the
    /// conditional ones.
    pub fn geoc(&self, source: &NodeSet, target: &NodeSet, cond: &NodeSet) -> Result<GeoCValue> {
        if source.is_empty() || target.is_empty() {
            return Err(Error::InvalidParameter(
                "geoc needs non-empty source and target sets".into(),
            ));
        }
        check_nodes(self.panel, source)?;
        check_nodes(self.panel, target)?;
        check_nodes(self.panel, cond)?;
        let (d2_tk, d2_k) = self.geo_terms(target, cond)?;
        if source.is_subset_of(cond) {
            return Ok(GeoCValue {
                value: 0.0,
                d2_target_given_k: d2_tk,
                d2_k,
                d2_target_given_jk: d2_tk,
                d2_jk: d2_k,
            });
        }
        let jk = cond.union(source);
        let (d2_tjk, d2_jk) = self.geo_terms(target, &jk)?;
        Ok(GeoCValue {
            value: (d2_tk - d2_k) - (d2_tjk - d2_jk),
            d2_target_given_k: d2_tk,
            d2_k,
            d2_target_given_jk: d2_tjk,
            d2_jk,
        })
    }

    /// GeoC of a single surrogate source whose series was permuted in time.
    /// Only the terms involving the source are re-estimated; the surrogate
    /// series never enters the cache.
    pub(crate) fn geoc_surrogate(
        &self,
        source: usize,
        surrogate_series: &[f64],
        target: &NodeSet,
        cond: &NodeSet,
    ) -> Result<f64> {
        let (d2_tk, d2_k) = self.geo_terms(target, cond)?;
        let mut jk = cond.sorted();
        jk.push(source);
        jk.sort_unstable();
        let future = target.sorted();
        let joint = embed_cloud(
            self.panel,
            &future,
            &jk,
            Some((source, surrogate_series)),
        )?;
        let d2_tjk = self.d2_of_cloud(&joint)?;
        let base = embed_cloud(self.panel, &[], &jk, Some((source, surrogate_series)))?;
        let d2_jk = self.d2_of_cloud(&base)?;
        Ok((d2_tk - d2_k) - (d2_tjk - d2_jk))
    }

    pub fn record(
        &self,
        source: &NodeSet,
        target: &NodeSet,
        cond: &NodeSet,
        geoc: GeoCValue,
    ) -> GeoCRecord {
        GeoCRecord {
            source: source.as_slice().to_vec(),
            target: target.as_slice().to_vec(),
            cond: cond.as_slice().to_vec(),
            geoc,
            grid: self.grid,
            options: self.opts,
            n_steps: self.panel.n_steps(),
        }
    }
}

/// One-shot `Geo(X'(target) | X(cond))` without a shared engine.
pub fn geo_conditional(
    panel: &TimeSeriesPanel,
    target: &NodeSet,
    cond: &NodeSet,
    grid: &RadiusGrid,
) -> Result<f64> {
    GeoCEngine::new(panel, *grid)?.geo_conditional(target, cond)
}

/// One-shot `GeoC(source -> target | cond)` without a shared engine.
pub fn geoc(
    panel: &TimeSeriesPanel,
    source: &NodeSet,
    target: &NodeSet,
    cond: &NodeSet,
    grid: &RadiusGrid,
) -> Result<GeoCValue> {
    GeoCEngine::new(panel, *grid)?.geoc(source, target, cond)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, AdjacencyMatrix, NetworkSpec};

    fn panel_from_rows(rows: &[&[f64]]) -> TimeSeriesPanel {
        let n = rows.len();
        let t = rows[0].len();
        let mut values = Vec::new();
        for row in rows {
            values.extend_from_slice(row);
        }
        TimeSeriesPanel::new(n, t, 1, values).unwrap()
    }

    fn logistic_panel(n: usize, edges: &[(usize, usize)], sigma: f64, t: usize, seed: u64) -> TimeSeriesPanel {
        let adj = AdjacencyMatrix::from_edges(n, edges).unwrap();
        let spec = NetworkSpec::new(adj, sigma, 4.0).unwrap();
        simulate(&spec, None, 500, t, seed).unwrap()
    }

    #[test]
    fn embedding_bookkeeping() {
        let panel = panel_from_rows(&[&[0.1, 0.2, 0.3], &[0.7, 0.8, 0.9]]);
        let cloud = build_embedding(&panel, &NodeSet::single(0), &NodeSet::single(1)).unwrap();
        assert_eq!(cloud.n_points(), 2);
        assert_eq!(cloud.dim(), 2);
        assert_eq!(cloud.point(0), &[0.2, 0.7]);
        assert_eq!(cloud.point(1), &[0.3, 0.8]);
    }

    #[test]
    fn lag_pair_cloud_of_a_single_node() {
        let panel = panel_from_rows(&[&[0.1, 0.2, 0.3, 0.4]]);
        let cloud = build_embedding(&panel, &NodeSet::single(0), &NodeSet::single(0)).unwrap();
        assert_eq!(cloud.n_points(), 3);
        assert_eq!(cloud.point(0), &[0.2, 0.1]);
        assert_eq!(cloud.point(2), &[0.4, 0.3]);
    }

    #[test]
    fn conditioners_only_cloud_of_constant_series() {
        let panel = panel_from_rows(&[&[0.5; 6], &[0.1, 0.9, 0.1, 0.9, 0.1, 0.9]]);
        let cloud = build_embedding(&panel, &NodeSet::empty(), &NodeSet::single(0)).unwrap();
        assert_eq!(cloud.n_points(), 5);
        for i in 0..5 {
            assert_eq!(cloud.point(i), &[0.5]);
        }
    }

    #[test]
    fn both_sets_empty_is_an_error() {
        let panel = panel_from_rows(&[&[0.1, 0.2, 0.3]]);
        assert!(matches!(
            build_embedding(&panel, &NodeSet::empty(), &NodeSet::empty()),
            Err(Error::EmptyEmbedding)
        ));
    }

    #[test]
    fn node_set_rejects_duplicates() {
        assert!(NodeSet::new(vec![1, 2, 1]).is_err());
        let mut s = NodeSet::new(vec![3, 1]).unwrap();
        assert!(!s.insert(3));
        assert!(s.insert(2));
        assert_eq!(s.sorted(), vec![1, 2, 3]);
    }

    #[test]
    fn source_inside_conditioning_short_circuits_to_zero() {
        let panel = logistic_panel(3, &[(0, 1)], 0.1, 400, 1);
        let engine = GeoCEngine::new(&panel, RadiusGrid::default()).unwrap();
        let v = engine
            .geoc(
                &NodeSet::single(0),
                &NodeSet::single(1),
                &NodeSet::new(vec![0, 2]).unwrap(),
            )
            .unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(v.d2_target_given_jk, v.d2_target_given_k);
        assert_eq!(v.d2_jk, v.d2_k);
    }

    #[test]
    fn four_term_expansion_identity() {
        let panel = logistic_panel(3, &[(0, 1), (1, 2)], 0.1, 600, 2);
        let engine = GeoCEngine::new(&panel, RadiusGrid::default()).unwrap();
        let v = engine
            .geoc(&NodeSet::single(0), &NodeSet::single(2), &NodeSet::single(1))
            .unwrap();
        let expanded = (v.d2_target_given_k - v.d2_k) - (v.d2_target_given_jk - v.d2_jk);
        assert!((v.value - expanded).abs() <= 1e-12);
    }

    #[test]
    fn conditioning_set_equal_to_target_matches_two_term_form() {
        let panel = logistic_panel(2, &[(0, 1)], 0.1, 500, 3);
        let engine = GeoCEngine::new(&panel, RadiusGrid::default()).unwrap();
        let i = NodeSet::single(1);
        let j = NodeSet::single(0);
        let v = engine.geoc(&j, &i, &i).unwrap();
        let direct = engine.geo_conditional(&i, &i).unwrap()
            - engine.geo_conditional(&i, &i.union(&j)).unwrap();
        assert_eq!(v.value, direct);
    }

    #[test]
    fn duplicated_conditioner_changes_nothing_under_max_norm() {
        // node 2 is a bitwise copy of node 1
        let base = logistic_panel(2, &[(0, 1)], 0.1, 400, 4);
        let mut values = Vec::new();
        for node in 0..2 {
            values.extend_from_slice(base.series(node));
        }
        values.extend_from_slice(base.series(1));
        let panel = TimeSeriesPanel::new(3, base.n_steps(), 1, values).unwrap();
        let engine = GeoCEngine::new(&panel, RadiusGrid::default()).unwrap();
        let one = engine
            .geo_conditional(&NodeSet::single(0), &NodeSet::single(1))
            .unwrap();
        let dup = engine
            .geo_conditional(&NodeSet::single(0), &NodeSet::new(vec![1, 2]).unwrap())
            .unwrap();
        assert_eq!(one, dup);
    }

    #[test]
    fn listing_order_does_not_change_values() {
        let panel = logistic_panel(4, &[(0, 2), (1, 2), (3, 2)], 0.08, 500, 5);
        let engine = GeoCEngine::new(&panel, RadiusGrid::default()).unwrap();
        let a = engine
            .geoc(
                &NodeSet::single(0),
                &NodeSet::single(2),
                &NodeSet::new(vec![1, 3]).unwrap(),
            )
            .unwrap();
        let b = engine
            .geoc(
                &NodeSet::single(0),
                &NodeSet::single(2),
                &NodeSet::new(vec![3, 1]).unwrap(),
            )
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn closed_node_has_little_flow_beyond_its_own_past() {
        // an isolated logistic map: the lag-pair cloud sits on the graph of f,
        // so conditioning on the node's own past leaves almost nothing
        let panel = logistic_panel(1, &[], 0.0, 4000, 6);
        let engine = GeoCEngine::with_options(
            &panel,
            RadiusGrid::default(),
            CorrDimOptions::default(),
            FitOptions {
                auto_region: true,
                ..FitOptions::default()
            },
        )
        .unwrap();
        let geo = engine
            .geo_conditional(&NodeSet::single(0), &NodeSet::single(0))
            .unwrap();
        assert!(geo.abs() < 0.15, "geo = {geo}");
        // the invariant density diverges at the interval ends, which drags
        // the measured dimension at these radii below the limiting value 1
        let unconditioned = engine
            .geo_conditional(&NodeSet::single(0), &NodeSet::empty())
            .unwrap();
        assert!(
            unconditioned > 0.55 && unconditioned < 1.05,
            "d2 = {unconditioned}"
        );
    }
}
