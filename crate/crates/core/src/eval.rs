//! Scoring inferred networks against ground truth and orchestrating
//! experiments: repeated trials with error bars and theta sweeps for ROC
//! curves.
//!
//! Rates are computed over ordered off-diagonal node pairs; self-loops sit
//! outside the model and are never scored. A truth graph without edges
//! leaves the true positive rate undefined, which is reported as a missing
//! value rather than zero so it cannot corrupt means.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corrdim::{CorrDimOptions, FitOptions, RadiusGrid};
use crate::dynamics::{
    generate_er_graph, simulate, AdjacencyMatrix, CouplingKind, NetworkSpec, TimeSeriesPanel,
    DEFAULT_TRANSIENT,
};
use crate::error::{Error, Result};
use crate::ogeoc::{InferenceConfig, InferenceContext, ShuffleConfig};
use crate::parallel;
use crate::seed::{mix, TAG_GRAPH, TAG_SIM, TAG_TRIAL};

/// Counts over ordered off-diagonal pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    /// Fraction of true edges recovered; undefined without true edges.
    pub fn tpr(&self) -> Option<f64> {
        let denom = self.true_pos + self.false_neg;
        (denom > 0).then(|| self.true_pos as f64 / denom as f64)
    }

    /// Fraction of non-edges falsely reported; undefined without non-edges.
    pub fn fpr(&self) -> Option<f64> {
        let denom = self.false_pos + self.true_neg;
        (denom > 0).then(|| self.false_pos as f64 / denom as f64)
    }
}

/// Compares an estimated adjacency against the truth, diagonals ignored.
pub fn confusion(estimate: &AdjacencyMatrix, truth: &AdjacencyMatrix) -> Result<ConfusionCounts> {
    if estimate.n() != truth.n() {
        return Err(Error::DimensionMismatch {
            expected: truth.n(),
            got: estimate.n(),
        });
    }
    let n = truth.n();
    let mut counts = ConfusionCounts {
        true_pos: 0,
        false_pos: 0,
        true_neg: 0,
        false_neg: 0,
    };
    for target in 0..n {
        for source in 0..n {
            if source == target {
                continue;
            }
            match (estimate.has_edge(source, target), truth.has_edge(source, target)) {
                (true, true) => counts.true_pos += 1,
                (true, false) => counts.false_pos += 1,
                (false, true) => counts.false_neg += 1,
                (false, false) => counts.true_neg += 1,
            }
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub theta: f64,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RocFailure {
    pub theta: f64,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RocSweepOutput {
    pub points: Vec<RocPoint>,
    pub failures: Vec<RocFailure>,
}

/// Sweeps the significance level over one panel.
///
/// The panel, the surrogate seeds and every surrogate array are shared
/// across the sweep; only the threshold's order-statistic index moves with
/// theta. A failing theta is reported and the sweep continues.
pub fn roc_sweep(
    panel: &TimeSeriesPanel,
    truth: &AdjacencyMatrix,
    grid: &RadiusGrid,
    thetas: &[f64],
    cfg: &InferenceConfig,
) -> Result<RocSweepOutput> {
    if thetas.is_empty() {
        return Err(Error::InvalidParameter("empty theta list".into()));
    }
    for &theta in thetas {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie strictly between 0 and 1, got {theta}"
            )));
        }
    }
    let ctx = InferenceContext::new(panel, *grid, *cfg)?;
    let mut out = RocSweepOutput {
        points: Vec::new(),
        failures: Vec::new(),
    };
    for &theta in thetas {
        match ctx.infer_at(theta, *grid) {
            Ok(result) => {
                let counts = confusion(&result.adjacency_estimate, truth)?;
                out.points.push(RocPoint {
                    theta,
                    tpr: counts.tpr(),
                    fpr: counts.fpr(),
                });
            }
            Err(e) => out.failures.push(RocFailure {
                theta,
                message: e.to_string(),
            }),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    fn over(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        Some(Stats {
            mean: sum / values.len() as f64,
            min,
            max,
        })
    }
}

/// Aggregate over the completed trials of one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub t: usize,
    pub completed: usize,
    pub tpr: Option<Stats>,
    pub fpr: Option<Stats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub t: usize,
    pub trial: usize,
    pub graph_seed: u64,
    pub sim_seed: u64,
    pub shuffle_seed: u64,
    pub n_edges_true: usize,
    pub confusion: ConfusionCounts,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub n_node_failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialFailure {
    pub t: usize,
    pub trial: usize,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialsOutput {
    pub summaries: Vec<TrialSummary>,
    pub records: Vec<TrialRecord>,
    pub failures: Vec<TrialFailure>,
}

/// Where the benchmark graph comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSource {
    /// A fresh directed Erdos-Renyi draw per trial.
    Er { n: usize, p: f64 },
    /// A fixed edge-list file, shared by all trials.
    File { path: PathBuf },
    /// Inline `(source, target)` pairs, shared by all trials.
    Edges { n: usize, edges: Vec<(usize, usize)> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentMode {
    Trials,
    Roc,
}

fn default_map_param() -> f64 {
    4.0
}
fn default_transient() -> usize {
    DEFAULT_TRANSIENT
}
fn default_trials() -> usize {
    1
}
fn default_np() -> usize {
    100
}
fn default_theta() -> f64 {
    0.01
}
fn default_eps_backward() -> f64 {
    0.01
}
fn default_allow_self() -> bool {
    true
}

/// Declarative experiment description, readable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: ExperimentMode,
    pub graph: GraphSource,
    pub sigma: f64,
    #[serde(default = "default_map_param")]
    pub map_param: f64,
    #[serde(default)]
    pub coupling: CouplingKind,
    pub t_values: Vec<usize>,
    #[serde(default = "default_transient")]
    pub transient: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_np")]
    pub n_permutations: usize,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Significance levels for `mode = "roc"`.
    #[serde(default)]
    pub thetas: Option<Vec<f64>>,
    #[serde(default = "default_eps_backward")]
    pub eps_backward: f64,
    #[serde(default = "default_allow_self")]
    pub allow_self_candidates: bool,
    #[serde(default)]
    pub grid: RadiusGrid,
    #[serde(default)]
    pub corr: CorrDimOptions,
    #[serde(default)]
    pub fit: FitOptions,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_values.is_empty() {
            return Err(Error::InvalidParameter("empty t_values".into()));
        }
        if self.t_values.iter().any(|&t| t < 2) {
            return Err(Error::InvalidParameter(
                "every sample size must be at least 2".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("need at least one trial".into()));
        }
        if self.mode == ExperimentMode::Roc
            && self.thetas.as_ref().map_or(true, |t| t.is_empty())
        {
            return Err(Error::InvalidParameter(
                "roc mode needs a non-empty thetas list".into(),
            ));
        }
        self.grid.validate()?;
        self.inference_config().validate()?;
        Ok(())
    }

    pub fn inference_config(&self) -> InferenceConfig {
        InferenceConfig {
            shuffle: ShuffleConfig {
                n_permutations: self.n_permutations,
                theta: self.theta,
                seed: self.seed,
            },
            eps_backward: self.eps_backward,
            allow_self_candidates: self.allow_self_candidates,
            corr: self.corr,
            fit: self.fit,
        }
    }

    /// The benchmark graph of one trial. Only the Erdos-Renyi source draws
    /// fresh graphs per trial; file and inline graphs are fixed.
    pub fn graph_for_trial(&self, trial: usize) -> Result<(AdjacencyMatrix, u64)> {
        let graph_seed = mix(self.seed, &[TAG_GRAPH, trial as u64]);
        let adj = match &self.graph {
            GraphSource::Er { n, p } => generate_er_graph(*n, *p, graph_seed)?,
            GraphSource::File { path } => AdjacencyMatrix::read_edge_list(path, None)?,
            GraphSource::Edges { n, edges } => AdjacencyMatrix::from_edges(*n, edges)?,
        };
        Ok((adj, graph_seed))
    }

    fn network_spec(&self, adjacency: AdjacencyMatrix) -> Result<NetworkSpec> {
        let spec = NetworkSpec {
            adjacency,
            sigma: self.sigma,
            kappa: 1.0,
            map_param: self.map_param,
            coupling: self.coupling,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Runs `trials` independent trials per sample size: draw a graph, simulate,
/// infer, score. Failed trials are recorded and excluded from aggregation.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<TrialsOutput> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for (t_idx, &t) in cfg.t_values.iter().enumerate() {
        for trial in 0..cfg.trials {
            jobs.push((t_idx, t, trial));
        }
    }
    let outcomes = parallel::map_indexed(jobs.len(), |job| {
        let (_, t, trial) = jobs[job];
        run_single_trial(cfg, t, trial)
    });
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for ((_, t, trial), outcome) in jobs.into_iter().zip(outcomes) {
        match outcome {
            Ok(record) => records.push(record),
            Err(e) => failures.push(TrialFailure {
                t,
                trial,
                message: e.to_string(),
            }),
        }
    }
    let mut summaries = Vec::new();
    for &t in &cfg.t_values {
        let of_t: Vec<&TrialRecord> = records.iter().filter(|r| r.t == t).collect();
        let tprs: Vec<f64> = of_t.iter().filter_map(|r| r.tpr).collect();
        let fprs: Vec<f64> = of_t.iter().filter_map(|r| r.fpr).collect();
        summaries.push(TrialSummary {
            t,
            completed: of_t.len(),
            tpr: Stats::over(&tprs),
            fpr: Stats::over(&fprs),
        });
    }
    Ok(TrialsOutput {
        summaries,
        records,
        failures,
    })
}

fn run_single_trial(cfg: &ExperimentConfig, t: usize, trial: usize) -> Result<TrialRecord> {
    let (truth, graph_seed) = cfg.graph_for_trial(trial)?;
    let sim_seed = mix(cfg.seed, &[TAG_SIM, t as u64, trial as u64]);
    let shuffle_seed = mix(cfg.seed, &[TAG_TRIAL, t as u64, trial as u64]);
    let spec = cfg.network_spec(truth.clone())?;
    let panel = simulate(&spec, None, cfg.transient, t, sim_seed)?;
    let mut icfg = cfg.inference_config();
    icfg.shuffle.seed = shuffle_seed;
    let ctx = InferenceContext::new(&panel, cfg.grid, icfg)?;
    let result = ctx.infer(cfg.grid)?;
    let counts = confusion(&result.adjacency_estimate, &truth)?;
    Ok(TrialRecord {
        t,
        trial,
        graph_seed,
        sim_seed,
        shuffle_seed,
        n_edges_true: truth.edge_count(),
        confusion: counts,
        tpr: counts.tpr(),
        fpr: counts.fpr(),
        n_node_failures: result.failures.len(),
    })
}

/// Theta-sweep ROC per sample size, on one fixed graph and one panel per
/// sample size.
pub fn run_roc(cfg: &ExperimentConfig) -> Result<Vec<(usize, RocSweepOutput)>> {
    cfg.validate()?;
    let thetas = cfg.thetas.clone().unwrap_or_default();
    let (truth, _) = cfg.graph_for_trial(0)?;
    let spec = cfg.network_spec(truth.clone())?;
    let mut out = Vec::new();
    for &t in &cfg.t_values {
        let sim_seed = mix(cfg.seed, &[TAG_SIM, t as u64, 0]);
        let panel = simulate(&spec, None, cfg.transient, t, sim_seed)?;
        let mut icfg = cfg.inference_config();
        icfg.shuffle.seed = mix(cfg.seed, &[TAG_TRIAL, t as u64, 0]);
        let sweep = roc_sweep(&panel, &truth, &cfg.grid, &thetas, &icfg)?;
        out.push((t, sweep));
    }
    Ok(out)
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `T,mean_tpr,min_tpr,max_tpr,mean_fpr,min_fpr,max_fpr` rows.
pub fn trial_summary_csv(summaries: &[TrialSummary]) -> String {
    let mut out = String::from("T,mean_tpr,min_tpr,max_tpr,mean_fpr,min_fpr,max_fpr\n");
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.t,
            opt_cell(s.tpr.map(|v| v.mean)),
            opt_cell(s.tpr.map(|v| v.min)),
            opt_cell(s.tpr.map(|v| v.max)),
            opt_cell(s.fpr.map(|v| v.mean)),
            opt_cell(s.fpr.map(|v| v.min)),
            opt_cell(s.fpr.map(|v| v.max)),
        ));
    }
    out
}

/// `theta,tpr,fpr` rows.
pub fn roc_csv(points: &[RocPoint]) -> String {
    let mut out = String::from("theta,tpr,fpr\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{}\n",
            p.theta,
            opt_cell(p.tpr),
            opt_cell(p.fpr)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ogeoc::infer_network;

    fn seven_node_truth() -> AdjacencyMatrix {
        AdjacencyMatrix::from_edges(
            7,
            &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 0), (1, 4)],
        )
        .unwrap()
    }

    #[test]
    fn perfect_estimate_counts() {
        let truth = seven_node_truth();
        let counts = confusion(&truth, &truth).unwrap();
        assert_eq!(counts.true_pos, 8);
        assert_eq!(counts.false_neg, 0);
        assert_eq!(counts.false_pos, 0);
        assert_eq!(counts.true_neg, 34);
        assert_eq!(counts.total(), 42);
        assert_eq!(counts.tpr(), Some(1.0));
        assert_eq!(counts.fpr(), Some(0.0));
    }

    #[test]
    fn empty_and_full_estimates() {
        let truth = seven_node_truth();
        let empty = AdjacencyMatrix::zeros(7).unwrap();
        let counts = confusion(&empty, &truth).unwrap();
        assert_eq!(counts.tpr(), Some(0.0));
        assert_eq!(counts.fpr(), Some(0.0));
        let mut full = AdjacencyMatrix::zeros(7).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                if i != j {
                    full.set_edge(j, i).unwrap();
                }
            }
        }
        let counts = confusion(&full, &truth).unwrap();
        assert_eq!(counts.tpr(), Some(1.0));
        assert_eq!(counts.fpr(), Some(1.0));
    }

    #[test]
    fn zero_edge_truth_makes_tpr_undefined() {
        let truth = AdjacencyMatrix::zeros(4).unwrap();
        let mut est = AdjacencyMatrix::zeros(4).unwrap();
        est.set_edge(0, 1).unwrap();
        let counts = confusion(&est, &truth).unwrap();
        assert_eq!(counts.tpr(), None);
        assert_eq!(counts.fpr(), Some(1.0 / 12.0));
    }

    #[test]
    fn mismatched_sizes_rejected() {
        let a = AdjacencyMatrix::zeros(3).unwrap();
        let b = AdjacencyMatrix::zeros(4).unwrap();
        assert!(confusion(&a, &b).is_err());
    }

    fn small_experiment(mode: ExperimentMode) -> ExperimentConfig {
        ExperimentConfig {
            mode,
            graph: GraphSource::Edges {
                n: 2,
                edges: vec![(0, 1)],
            },
            sigma: 0.15,
            map_param: 4.0,
            coupling: CouplingKind::default(),
            t_values: vec![400],
            transient: 200,
            trials: 1,
            n_permutations: 10,
            theta: 0.05,
            thetas: Some(vec![0.05, 0.3]),
            eps_backward: 0.01,
            allow_self_candidates: true,
            grid: RadiusGrid::default(),
            corr: CorrDimOptions::default(),
            fit: FitOptions::default(),
            seed: 2,
        }
    }

    #[test]
    fn single_point_sweep_matches_direct_inference() {
        let cfg = small_experiment(ExperimentMode::Roc);
        let (truth, _) = cfg.graph_for_trial(0).unwrap();
        let spec = cfg.network_spec(truth.clone()).unwrap();
        let sim_seed = mix(cfg.seed, &[TAG_SIM, 400, 0]);
        let panel = simulate(&spec, None, cfg.transient, 400, sim_seed).unwrap();
        let icfg = cfg.inference_config();
        let sweep = roc_sweep(&panel, &truth, &cfg.grid, &[0.05], &icfg).unwrap();
        assert_eq!(sweep.points.len(), 1);
        let direct = infer_network(&panel, &cfg.grid, &icfg).unwrap();
        let counts = confusion(&direct.adjacency_estimate, &truth).unwrap();
        assert_eq!(sweep.points[0].tpr, counts.tpr());
        assert_eq!(sweep.points[0].fpr, counts.fpr());
    }

    #[test]
    fn reordering_thetas_permutes_the_same_points() {
        let cfg = small_experiment(ExperimentMode::Roc);
        let (truth, _) = cfg.graph_for_trial(0).unwrap();
        let spec = cfg.network_spec(truth.clone()).unwrap();
        let panel = simulate(&spec, None, 100, 300, 3).unwrap();
        let icfg = cfg.inference_config();
        let fwd = roc_sweep(&panel, &truth, &cfg.grid, &[0.05, 0.3], &icfg).unwrap();
        let rev = roc_sweep(&panel, &truth, &cfg.grid, &[0.3, 0.05], &icfg).unwrap();
        assert_eq!(fwd.points[0], rev.points[1]);
        assert_eq!(fwd.points[1], rev.points[0]);
    }

    #[test]
    fn one_trial_collapses_the_error_bars() {
        let cfg = small_experiment(ExperimentMode::Trials);
        let out = run_trials(&cfg).unwrap();
        assert!(out.failures.is_empty());
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.summaries.len(), 1);
        let s = out.summaries[0];
        assert_eq!(s.completed, 1);
        let tpr = s.tpr.unwrap();
        assert_eq!(tpr.mean, tpr.min);
        assert_eq!(tpr.mean, tpr.max);
    }

    #[test]
    fn summary_csv_shape() {
        let summaries = vec![TrialSummary {
            t: 500,
            completed: 2,
            tpr: Stats::over(&[0.5, 1.0]),
            fpr: Stats::over(&[0.0, 0.1]),
        }];
        let csv = trial_summary_csv(&summaries);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "T,mean_tpr,min_tpr,max_tpr,mean_fpr,min_fpr,max_fpr"
        );
        assert_eq!(lines.next().unwrap(), "500,0.75,0.5,1,0.05,0,0.1");
    }

    #[test]
    fn experiment_config_round_trip_and_validation() {
        let cfg = small_experiment(ExperimentMode::Trials);
        let json = serde_json::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_json_str(&json).unwrap();
        assert_eq!(cfg, back);
        let mut bad = cfg;
        bad.t_values = vec![];
        assert!(bad.validate().is_err());
    }
}
