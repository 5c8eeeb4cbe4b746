//! Greedy causal-parent discovery with a permutation shuffle test.
//!
//! The forward pass grows a conditioning set K for each node i: every
//! iteration scores `GeoC(j -> i | K)` for all remaining candidates, takes
//! the argmax, and admits it only when it beats a data-driven zero threshold.
//! The threshold comes from surrogates: the candidate's series is permuted in
//! time (destroying the temporal pairing while keeping its marginal
//! distribution), GeoC is recomputed per permutation, and the empirical
//! `1 - theta` quantile of the surrogate values is the bar.
//!
//! The backward pass then removes indirect links: each candidate j of node i
//! is kept only if `GeoC(j -> i | K \ {j})` still exceeds a fixed threshold.
//!
//! A node may discover itself as a "candidate": conditioning on its own past
//! is how deterministic self-dynamics gets explained away. Self-entries never
//! become edges; the backward pass drops them before the adjacency estimate
//! is assembled, since the network model has no self-loops.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corrdim::{CorrDimOptions, FitOptions, RadiusGrid};
use crate::dynamics::{AdjacencyMatrix, TimeSeriesPanel};
use crate::error::{Error, Result};
use crate::geoc::{GeoCEngine, NodeSet};
use crate::parallel;
use crate::seed::{mix, set_digest, TAG_SHUFFLE};

/// Parameters of the permutation shuffle test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShuffleConfig {
    /// Number of surrogate permutations per test.
    pub n_permutations: usize,
    /// Significance threshold in (0, 1); smaller is stricter.
    pub theta: f64,
    /// Base seed; every test derives its own stream from it.
    pub seed: u64,
}

impl Default for ShuffleConfig {
    fn default() -> Self {
        ShuffleConfig {
            n_permutations: 100,
            theta: 0.01,
            seed: 0,
        }
    }
}

impl ShuffleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_permutations == 0 {
            return Err(Error::InvalidParameter(
                "need at least one permutation".into(),
            ));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie strictly between 0 and 1, got {}",
                self.theta
            )));
        }
        Ok(())
    }
}

/// Full configuration of an inference run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub shuffle: ShuffleConfig,
    /// Fixed zero threshold of the backward pass.
    pub eps_backward: f64,
    /// Whether a node may condition on its own past (see module docs).
    pub allow_self_candidates: bool,
    #[serde(default)]
    pub corr: CorrDimOptions,
    #[serde(default)]
    pub fit: FitOptions,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            shuffle: ShuffleConfig::default(),
            eps_backward: 0.03,
            allow_self_candidates: true,
            corr: CorrDimOptions::default(),
            fit: FitOptions::default(),
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        self.shuffle.validate()?;
        if !self.eps_backward.is_finite() {
            return Err(Error::InvalidParameter("non-finite eps_backward".into()));
        }
        Ok(())
    }
}

/// Index of the empirical threshold in the ascending surrogate array:
/// `floor(n_p * (1 - theta))`, clamped to the last element.
pub fn threshold_index(n_p: usize, theta: f64) -> usize {
    ((n_p as f64 * (1.0 - theta)).floor() as usize).min(n_p - 1)
}

/// Sorts surrogate statistics ascending and picks the threshold element.
pub fn empirical_threshold(mut surrogates: Vec<f64>, theta: f64) -> f64 {
    let idx = threshold_index(surrogates.len(), theta);
    surrogates.sort_unstable_by(f64::total_cmp);
    surrogates[idx]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub node: usize,
    pub geoc: f64,
}

/// One forward iteration: every candidate's score, the argmax, the shuffle
/// threshold it faced, and the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardIteration {
    pub conditioning: Vec<usize>,
    pub scores: Vec<CandidateScore>,
    pub argmax: usize,
    pub max_geoc: f64,
    pub threshold: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardTrace {
    pub node: usize,
    pub iterations: Vec<ForwardIteration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFailure {
    pub node: usize,
    pub stage: String,
    pub message: String,
}

/// Echo of everything that determined a run, embedded in its output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub grid: RadiusGrid,
    pub n_permutations: usize,
    pub theta: f64,
    pub seed: u64,
    pub eps_backward: f64,
    pub allow_self_candidates: bool,
    pub corr: CorrDimOptions,
    pub fit: FitOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub n_nodes: usize,
    /// Conditioning sets after the forward pass, in discovery order.
    pub candidates: Vec<Vec<usize>>,
    /// Causal parents after the backward pass; never contains the node itself.
    pub parents: Vec<Vec<usize>>,
    pub adjacency_estimate: AdjacencyMatrix,
    pub traces: Vec<ForwardTrace>,
    pub epsilon_backward: f64,
    pub failures: Vec<NodeFailure>,
    pub config: ConfigEcho,
}

impl InferenceResult {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Estimated edges as `(source, target)` pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency_estimate.edges()
    }
}

type SurrogateKey = (usize, usize, Vec<usize>);

/// Shared state for a full inference over one panel: the dimension cache of
/// the underlying engine plus sorted surrogate GeoC arrays per test. The
/// surrogate arrays do not depend on theta, so one context can serve a whole
/// theta sweep.
pub struct InferenceContext<'p> {
    engine: GeoCEngine<'p>,
    cfg: InferenceConfig,
    surrogates: RwLock<HashMap<SurrogateKey, Arc<Vec<f64>>>>,
}

impl<'p> InferenceContext<'p> {
    pub fn new(panel: &'p TimeSeriesPanel, grid: RadiusGrid, cfg: InferenceConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(InferenceContext {
            engine: GeoCEngine::with_options(panel, grid, cfg.corr, cfg.fit)?,
            cfg,
            surrogates: RwLock::new(HashMap::new()),
        })
    }

    pub fn engine(&self) -> &GeoCEngine<'p> {
        &self.engine
    }

    pub fn config(&self) -> &InferenceConfig {
        &self.cfg
    }

    fn echo(&self, grid: RadiusGrid) -> ConfigEcho {
        ConfigEcho {
            grid,
            n_permutations: self.cfg.shuffle.n_permutations,
            theta: self.cfg.shuffle.theta,
            seed: self.cfg.shuffle.seed,
            eps_backward: self.cfg.eps_backward,
            allow_self_candidates: self.cfg.allow_self_candidates,
            corr: self.cfg.corr,
            fit: self.cfg.fit,
        }
    }

    /// The ascending surrogate GeoC values for testing `j -> i | k`.
    ///
    /// Each permutation has its own RNG stream derived from the seed and the
    /// test's content, so values do not depend on evaluation order, thread
    /// count, or which other tests ran first. A failed surrogate aborts the
    /// whole test rather than being skipped.
    pub fn surrogate_values(&self, i: usize, j: usize, k: &NodeSet) -> Result<Arc<Vec<f64>>> {
        if k.contains(j) {
            return Err(Error::InvalidParameter(format!(
                "shuffle test source {j} already sits in the conditioning set"
            )));
        }
        let panel = self.engine.panel();
        panel.check_node(i)?;
        panel.check_node(j)?;
        let key: SurrogateKey = (i, j, k.sorted());
        if let Some(hit) = self.surrogates.read().expect("surrogate lock").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let raw = if self.table_path_applies() {
            self.surrogates_tabulated(i, j, k)?
        } else {
            self.surrogates_direct(i, j, k)?
        };
        let mut values = raw;
        values.sort_unstable_by(f64::total_cmp);
        let values = Arc::new(values);
        self.surrogates
            .write()
            .expect("surrogate lock")
            .insert(key, Arc::clone(&values));
        Ok(values)
    }

    fn table_path_applies(&self) -> bool {
        self.engine.panel().state_dim() == 1
            && self.cfg.corr.norm == crate::corrdim::Norm::Max
            && self.cfg.corr.theiler_window == 0
            && self.engine.grid().n_steps <= crate::corrdim::MAX_TABLE_RADII
    }

    fn test_seed(&self, i: usize, j: usize, k_sorted: &[usize]) -> u64 {
        mix(
            self.cfg.shuffle.seed,
            &[TAG_SHUFFLE, i as u64, j as u64, set_digest(k_sorted)],
        )
    }

    /// Permutation of `0..t` for surrogate index `p` of a given test.
    fn permuted_order(test_seed: u64, p: usize, t: usize) -> Vec<u32> {
        let mut rng = ChaCha8Rng::seed_from_u64(test_seed);
        rng.set_stream(p as u64 + 1);
        let mut order: Vec<u32> = (0..t as u32).collect();
        order.shuffle(&mut rng);
        order
    }

    /// Reference path: rebuild the full joint clouds per permutation. Used
    /// for multi-dimensional node states or exotic counting options.
    fn surrogates_direct(&self, i: usize, j: usize, k: &NodeSet) -> Result<Vec<f64>> {
        let panel = self.engine.panel();
        let t = panel.n_steps();
        let d = panel.state_dim();
        let target = NodeSet::single(i);
        let test_seed = self.test_seed(i, j, &k.sorted());
        let raw = parallel::map_indexed(self.cfg.shuffle.n_permutations, |p| {
            let order = Self::permuted_order(test_seed, p, t);
            let mut series = Vec::with_capacity(t * d);
            for &tt in &order {
                for dim in 0..d {
                    series.push(panel.value(j, tt as usize, dim));
                }
            }
            self.engine.geoc_surrogate(j, &series, &target, k)
        });
        raw.into_iter().collect()
    }

    /// Fast path: only the shuffled column changes between permutations, so
    /// the fixed columns' pair bins are tabulated once per test and every
    /// permutation reduces to a single pass over the pair table. Produces
    /// bit-identical values to the reference path.
    fn surrogates_tabulated(&self, i: usize, j: usize, k: &NodeSet) -> Result<Vec<f64>> {
        let panel = self.engine.panel();
        let grid = self.engine.grid();
        let fit = *self.engine.fit_options();
        let radii = grid.radii();
        let t = panel.n_steps();
        let target = NodeSet::single(i);
        let (d2_tk, d2_k) = self.engine.geo_terms(&target, k)?;

        let joint_fixed = crate::geoc::build_embedding(panel, &target, k)?;
        let joint_table = crate::corrdim::PairBinTable::build(&joint_fixed, &radii);
        let marginal_table = if k.is_empty() {
            None
        } else {
            let fixed = crate::geoc::build_embedding(panel, &NodeSet::empty(), k)?;
            Some(crate::corrdim::PairBinTable::build(&fixed, &radii))
        };
        let n_pts = t - 1;
        let total_pairs = (n_pts as u64) * (n_pts as u64 - 1) / 2;
        let test_seed = self.test_seed(i, j, &k.sorted());

        let raw = parallel::map_indexed(self.cfg.shuffle.n_permutations, |p| {
            let order = Self::permuted_order(test_seed, p, t);
            // the conditioning role only reads times 0..T-1
            let column: Vec<f64> = order[..n_pts]
                .iter()
                .map(|&tt| panel.value(j, tt as usize, 0))
                .collect();
            let joint_counts = joint_table.histogram_with_column(&column, &radii);
            let d2_tjk = crate::corrdim::d2_from_counts(&joint_counts, &radii, total_pairs, &fit)?;
            let d2_jk = match &marginal_table {
                Some(table) => {
                    let counts = table.histogram_with_column(&column, &radii);
                    crate::corrdim::d2_from_counts(&counts, &radii, total_pairs, &fit)?
                }
                None => {
                    let counts = crate::corrdim::histogram_1d(&column, &radii);
                    crate::corrdim::d2_from_counts(&counts, &radii, total_pairs, &fit)?
                }
            };
            Ok((d2_tk - d2_k) - (d2_tjk - d2_jk))
        });
        raw.into_iter().collect()
    }

    pub fn shuffle_threshold_at(&self, i: usize, j: usize, k: &NodeSet, theta: f64) -> Result<f64> {
        let values = self.surrogate_values(i, j, k)?;
        Ok(values[threshold_index(values.len(), theta)])
    }

    pub fn shuffle_threshold(&self, i: usize, j: usize, k: &NodeSet) -> Result<f64> {
        self.shuffle_threshold_at(i, j, k, self.cfg.shuffle.theta)
    }

    /// Forward discovery for one node at a given significance level.
    pub fn forward_at(&self, i: usize, theta: f64) -> Result<(NodeSet, ForwardTrace)> {
        self.engine.panel().check_node(i)?;
        let n = self.engine.panel().n_nodes();
        let mut conditioning = NodeSet::empty();
        let mut iterations = Vec::new();
        let wrap = |iteration: usize, e: Error| Error::NodeInference {
            node: i,
            iteration,
            source: Box::new(e),
        };
        loop {
            let pool: Vec<usize> = (0..n)
                .filter(|&j| !conditioning.contains(j) && (self.cfg.allow_self_candidates || j != i))
                .collect();
            if pool.is_empty() {
                break;
            }
            let iteration = iterations.len();
            let target = NodeSet::single(i);
            let raw = parallel::map_indexed(pool.len(), |idx| {
                self.engine
                    .geoc(&NodeSet::single(pool[idx]), &target, &conditioning)
                    .map(|v| v.value)
            });
            let mut scores = Vec::with_capacity(pool.len());
            for (&node, value) in pool.iter().zip(raw) {
                scores.push(CandidateScore {
                    node,
                    geoc: value.map_err(|e| wrap(iteration, e))?,
                });
            }
            // strict comparison scanning ascending node order: ties resolve
            // to the lowest node index
            let best = scores
                .iter()
                .enumerate()
                .fold(0usize, |best, (idx, s)| {
                    if s.geoc > scores[best].geoc {
                        idx
                    } else {
                        best
                    }
                });
            let argmax = scores[best].node;
            let max_geoc = scores[best].geoc;
            let threshold = self
                .shuffle_threshold_at(i, argmax, &conditioning, theta)
                .map_err(|e| wrap(iteration, e))?;
            let accepted = max_geoc > threshold;
            iterations.push(ForwardIteration {
                conditioning: conditioning.as_slice().to_vec(),
                scores,
                argmax,
                max_geoc,
                threshold,
                accepted,
            });
            if !accepted {
                break;
            }
            conditioning.insert(argmax);
        }
        Ok((conditioning, ForwardTrace { node: i, iterations }))
    }

    pub fn forward(&self, i: usize) -> Result<(NodeSet, ForwardTrace)> {
        self.forward_at(i, self.cfg.shuffle.theta)
    }

    /// Prunes one node's candidate set. Self-entries are dropped outright;
    /// other members must keep a positive conditional flow with the rest of
    /// the set still conditioned on.
    pub fn backward_node(&self, i: usize, candidates: &NodeSet) -> Result<Vec<usize>> {
        let mut parents = Vec::new();
        for j in candidates.iter() {
            if j == i {
                continue;
            }
            let rest = candidates.without(j);
            let v = self
                .engine
                .geoc(&NodeSet::single(j), &NodeSet::single(i), &rest)?;
            if v.value > self.cfg.eps_backward {
                parents.push(j);
            }
        }
        Ok(parents)
    }

    /// Full run at the configured significance level.
    pub fn infer(&self, grid_for_echo: RadiusGrid) -> Result<InferenceResult> {
        self.infer_at(self.cfg.shuffle.theta, grid_for_echo)
    }

    pub fn infer_at(&self, theta: f64, grid_for_echo: RadiusGrid) -> Result<InferenceResult> {
        let n = self.engine.panel().n_nodes();
        let forward = parallel::map_indexed(n, |i| self.forward_at(i, theta));
        let mut candidates: Vec<NodeSet> = Vec::with_capacity(n);
        let mut traces = Vec::with_capacity(n);
        let mut failures = Vec::new();
        for (i, res) in forward.into_iter().enumerate() {
            match res {
                Ok((set, trace)) => {
                    candidates.push(set);
                    traces.push(trace);
                }
                Err(e) => {
                    failures.push(NodeFailure {
                        node: i,
                        stage: "forward".into(),
                        message: e.to_string(),
                    });
                    candidates.push(NodeSet::empty());
                    traces.push(ForwardTrace {
                        node: i,
                        iterations: Vec::new(),
                    });
                }
            }
        }
        let backward = parallel::map_indexed(n, |i| self.backward_node(i, &candidates[i]));
        let mut parents = Vec::with_capacity(n);
        let mut adjacency = AdjacencyMatrix::zeros(n)?;
        for (i, res) in backward.into_iter().enumerate() {
            match res {
                Ok(list) => {
                    for &j in &list {
                        adjacency.set_edge(j, i)?;
                    }
                    parents.push(list);
                }
                Err(e) => {
                    failures.push(NodeFailure {
                        node: i,
                        stage: "backward".into(),
                        message: e.to_string(),
                    });
                    parents.push(Vec::new());
                }
            }
        }
        let mut echo = self.echo(grid_for_echo);
        echo.theta = theta;
        Ok(InferenceResult {
            n_nodes: n,
            candidates: candidates.into_iter().map(Vec::from).collect(),
            parents,
            adjacency_estimate: adjacency,
            traces,
            epsilon_backward: self.cfg.eps_backward,
            failures,
            config: echo,
        })
    }
}

/// Shuffle-test threshold for `j -> i | k` on a fresh context.
pub fn shuffle_threshold(
    panel: &TimeSeriesPanel,
    i: usize,
    j: usize,
    k: &NodeSet,
    grid: &RadiusGrid,
    shuffle: &ShuffleConfig,
) -> Result<f64> {
    let cfg = InferenceConfig {
        shuffle: *shuffle,
        ..InferenceConfig::default()
    };
    InferenceContext::new(panel, *grid, cfg)?.shuffle_threshold(i, j, k)
}

/// Forward discovery for one node on a fresh context.
pub fn forward_geoc(
    panel: &TimeSeriesPanel,
    i: usize,
    grid: &RadiusGrid,
    cfg: &InferenceConfig,
) -> Result<(NodeSet, ForwardTrace)> {
    InferenceContext::new(panel, *grid, *cfg)?.forward(i)
}

/// Backward pruning of per-node candidate sets into an adjacency estimate.
pub fn backward_geoc(
    panel: &TimeSeriesPanel,
    candidates: &[NodeSet],
    grid: &RadiusGrid,
    eps_backward: f64,
) -> Result<AdjacencyMatrix> {
    let n = panel.n_nodes();
    if candidates.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: candidates.len(),
        });
    }
    let cfg = InferenceConfig {
        eps_backward,
        ..InferenceConfig::default()
    };
    let ctx = InferenceContext::new(panel, *grid, cfg)?;
    let per_node = parallel::map_indexed(n, |i| ctx.backward_node(i, &candidates[i]));
    let mut adjacency = AdjacencyMatrix::zeros(n)?;
    for (i, res) in per_node.into_iter().enumerate() {
        for &j in &res? {
            adjacency.set_edge(j, i)?;
        }
    }
    Ok(adjacency)
}

/// Runs the forward pass on every node and prunes with the backward pass.
/// Per-node estimation failures are collected in the result instead of
/// aborting the run.
pub fn infer_network(
    panel: &TimeSeriesPanel,
    grid: &RadiusGrid,
    cfg: &InferenceConfig,
) -> Result<InferenceResult> {
    InferenceContext::new(panel, *grid, *cfg)?.infer(*grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, NetworkSpec};

    fn logistic_panel(
        n: usize,
        edges: &[(usize, usize)],
        sigma: f64,
        t: usize,
        seed: u64,
    ) -> TimeSeriesPanel {
        let adj = AdjacencyMatrix::from_edges(n, edges).unwrap();
        let spec = NetworkSpec::new(adj, sigma, 4.0).unwrap();
        simulate(&spec, None, 500, t, seed).unwrap()
    }

    fn quick_cfg(n_permutations: usize, theta: f64, seed: u64) -> InferenceConfig {
        InferenceConfig {
            shuffle: ShuffleConfig {
                n_permutations,
                theta,
                seed,
            },
            ..InferenceConfig::default()
        }
    }

    #[test]
    fn threshold_index_formula() {
        assert_eq!(threshold_index(100, 0.01), 99);
        assert_eq!(threshold_index(100, 0.99), 1);
        assert_eq!(threshold_index(100, 0.5), 50);
        // clamped when rounding would run past the end
        assert_eq!(threshold_index(100, 1e-18), 99);
        assert_eq!(threshold_index(1, 0.5), 0);
    }

    #[test]
    fn empirical_threshold_is_the_order_statistic() {
        let values = vec![0.5, -0.2, 0.9, 0.1, 0.4];
        assert_eq!(empirical_threshold(values.clone(), 0.2), 0.9);
        assert_eq!(empirical_threshold(values.clone(), 0.5), 0.4);
        assert_eq!(empirical_threshold(values, 0.99), -0.2);
    }

    #[test]
    fn constant_source_gives_degenerate_threshold() {
        // node 0 chaotic, node 1 constant
        let mut values = Vec::new();
        let chaotic = logistic_panel(1, &[], 0.0, 40, 9);
        values.extend_from_slice(chaotic.series(0));
        values.extend_from_slice(&[0.5; 40]);
        let panel = TimeSeriesPanel::new(2, 40, 1, values).unwrap();
        let grid = RadiusGrid::default();
        let cfg = ShuffleConfig {
            n_permutations: 10,
            theta: 0.2,
            seed: 3,
        };
        let t = shuffle_threshold(&panel, 0, 1, &NodeSet::empty(), &grid, &cfg).unwrap();
        // shuffling a constant series is a no-op, so every surrogate GeoC is
        // the same number and the threshold equals it exactly
        assert_eq!(t, 0.0);
    }

    #[test]
    fn source_already_conditioned_is_rejected() {
        let panel = logistic_panel(2, &[(0, 1)], 0.1, 60, 1);
        let err = shuffle_threshold(
            &panel,
            1,
            0,
            &NodeSet::single(0),
            &RadiusGrid::default(),
            &ShuffleConfig::default(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn ties_resolve_to_the_lowest_node_index() {
        // nodes 1 and 2 are bitwise copies, so their scores tie exactly
        let base = logistic_panel(2, &[(0, 1)], 0.1, 300, 5);
        let mut values = Vec::new();
        values.extend_from_slice(base.series(0));
        values.extend_from_slice(base.series(1));
        values.extend_from_slice(base.series(1));
        let panel = TimeSeriesPanel::new(3, base.n_steps(), 1, values).unwrap();
        let cfg = InferenceConfig {
            allow_self_candidates: false,
            ..quick_cfg(10, 0.2, 1)
        };
        let ctx = InferenceContext::new(&panel, RadiusGrid::default(), cfg).unwrap();
        let (_, trace) = ctx.forward(0).unwrap();
        let first = &trace.iterations[0];
        let s1 = first.scores.iter().find(|s| s.node == 1).unwrap().geoc;
        let s2 = first.scores.iter().find(|s| s.node == 2).unwrap().geoc;
        assert_eq!(s1, s2);
        assert_ne!(first.argmax, 2, "tie must go to node 1");
    }

    #[test]
    fn tabulated_surrogates_match_the_direct_path() {
        let panel = logistic_panel(3, &[(0, 1), (2, 1)], 0.12, 350, 13);
        let ctx =
            InferenceContext::new(&panel, RadiusGrid::default(), quick_cfg(12, 0.1, 21)).unwrap();
        for (i, j, k) in [
            (1usize, 0usize, NodeSet::empty()),
            (1, 2, NodeSet::single(1)),
            (0, 2, NodeSet::new(vec![0, 1]).unwrap()),
        ] {
            assert!(ctx.table_path_applies());
            let fast = ctx.surrogates_tabulated(i, j, &k).unwrap();
            let slow = ctx.surrogates_direct(i, j, &k).unwrap();
            assert_eq!(fast.len(), slow.len());
            for (a, b) in fast.iter().zip(&slow) {
                assert_eq!(a.to_bits(), b.to_bits(), "i={i} j={j} k={k:?}");
            }
        }
    }

    #[test]
    fn isolated_node_keeps_only_itself() {
        let panel = logistic_panel(2, &[], 0.0, 1500, 11);
        let ctx =
            InferenceContext::new(&panel, RadiusGrid::default(), quick_cfg(30, 0.05, 2)).unwrap();
        let (candidates, trace) = ctx.forward(0).unwrap();
        assert!(candidates.contains(0), "self-dynamics should be admitted");
        assert!(!candidates.contains(1), "independent node must be rejected");
        let last = trace.iterations.last().unwrap();
        assert!(!last.accepted);
        assert_eq!(last.accepted, last.max_geoc > last.threshold);
    }

    #[test]
    fn driven_pair_keeps_the_true_edge_through_backward() {
        let panel = logistic_panel(2, &[(0, 1)], 0.15, 2000, 7);
        let ctx =
            InferenceContext::new(&panel, RadiusGrid::default(), quick_cfg(30, 0.05, 4)).unwrap();
        let result = ctx.infer(RadiusGrid::default()).unwrap();
        assert!(result.failures.is_empty());
        assert!(
            result.adjacency_estimate.has_edge(0, 1),
            "edges: {:?}",
            result.edges()
        );
        assert!(!result.adjacency_estimate.has_edge(1, 0));
        // parents never contain the node itself, even though candidates may
        for (i, parents) in result.parents.iter().enumerate() {
            assert!(!parents.contains(&i));
            for p in parents {
                assert!(result.candidates[i].contains(p));
            }
        }
    }

    #[test]
    fn zero_coupling_panel_yields_almost_no_edges() {
        let panel = logistic_panel(3, &[(0, 1), (1, 2)], 0.0, 1200, 3);
        let result =
            infer_network(&panel, &RadiusGrid::default(), &quick_cfg(30, 0.01, 5)).unwrap();
        // no information flows, so at most stray theta-level noise survives
        assert!(
            result.adjacency_estimate.edge_count() <= 1,
            "edges: {:?}",
            result.edges()
        );
    }

    #[test]
    fn raising_theta_never_shrinks_the_candidate_set() {
        let panel = logistic_panel(3, &[(0, 1), (1, 2)], 0.12, 900, 6);
        let ctx =
            InferenceContext::new(&panel, RadiusGrid::default(), quick_cfg(20, 0.05, 7)).unwrap();
        for i in 0..3 {
            let (strict, _) = ctx.forward_at(i, 0.05).unwrap();
            let (loose, _) = ctx.forward_at(i, 0.4).unwrap();
            assert!(
                strict.is_subset_of(&loose),
                "node {i}: {strict:?} vs {loose:?}"
            );
        }
    }

    #[test]
    fn inference_is_reproducible() {
        let panel = logistic_panel(3, &[(0, 1)], 0.1, 600, 8);
        let cfg = quick_cfg(15, 0.05, 9);
        let grid = RadiusGrid::default();
        let a = infer_network(&panel, &grid, &cfg).unwrap();
        let b = infer_network(&panel, &grid, &cfg).unwrap();
        assert_eq!(a, b);
        let json = a.to_json_string().unwrap();
        let back = InferenceResult::from_json_str(&json).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn backward_free_function_prunes_to_given_candidates() {
        let panel = logistic_panel(2, &[(0, 1)], 0.15, 1500, 10);
        let grid = RadiusGrid::default();
        let candidates = vec![
            NodeSet::empty(),
            NodeSet::new(vec![1, 0]).unwrap(), // self plus the true parent
        ];
        let adj = backward_geoc(&panel, &candidates, &grid, 0.01).unwrap();
        assert!(adj.has_edge(0, 1));
        assert_eq!(adj.parents_of(0), Vec::<usize>::new());
        assert!(!adj.has_edge(1, 1));
    }
}
