//! Coupled map networks: benchmark graph generation, the coupled logistic
//! map simulator, and the panel / edge-list file formats.
//!
//! The network update for node `i` is
//!
//! ```text
//! x'(i) = f(x(i)) + sigma * sum_{j != i} a_ij * kappa * g(x(i), x(j))
//! ```
//!
//! with `f` the logistic map `a x (1 - x)` and `g` the coupling function.
//! With the default coupling `g = f(x(j)) - f(x(i))` and `sigma * in_degree
//! <= 1` the update is a convex combination of logistic images, so states
//! stay inside `[0, 1]`. The simulator still checks every step and fails
//! loudly on escape instead of clamping, because clamping would silently
//! deform the attractor that later stages measure.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discarded burn-in steps used by the command line tool when none are given.
pub const DEFAULT_TRANSIENT: usize = 1000;

/// Directed coupling structure: `a[target][source] = 1` when `source` drives
/// `target`. The diagonal is always zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjacencyMatrix {
    n: usize,
    entries: Vec<u8>,
}

impl AdjacencyMatrix {
    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("empty node set".into()));
        }
        Ok(AdjacencyMatrix {
            n,
            entries: vec![0; n * n],
        })
    }

    /// Builds from `(source, target)` pairs.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = AdjacencyMatrix::zeros(n)?;
        for &(source, target) in edges {
            adj.set_edge(source, target)?;
        }
        Ok(adj)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// True when `source` drives `target`.
    pub fn has_edge(&self, source: usize, target: usize) -> bool {
        self.entries[target * self.n + source] != 0
    }

    pub fn set_edge(&mut self, source: usize, target: usize) -> Result<()> {
        if source >= self.n || target >= self.n {
            return Err(Error::NodeOutOfRange {
                node: source.max(target),
                n_nodes: self.n,
            });
        }
        if source == target {
            return Err(Error::InvalidParameter(format!(
                "self-loop {source} -> {target} is outside the model"
            )));
        }
        self.entries[target * self.n + source] = 1;
        Ok(())
    }

    /// Edges as `(source, target)`, ordered by target then source.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for target in 0..self.n {
            for source in 0..self.n {
                if self.has_edge(source, target) {
                    out.push((source, target));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.entries.iter().filter(|&&e| e != 0).count()
    }

    pub fn parents_of(&self, target: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.has_edge(j, target)).collect()
    }

    /// Plain text, one `source target` pair per line, `#` comments, 0-based.
    /// A `# nodes: N` comment records the node count so isolated nodes
    /// survive a round trip.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = format!("# nodes: {}\n", self.n);
        for (source, target) in self.edges() {
            out.push_str(&format!("{source} {target}\n"));
        }
        out
    }

    pub fn from_edge_list_str(text: &str, n_nodes: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        let mut n_declared = n_nodes;
        let mut max_node = 0usize;
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => {
                    let comment = raw[pos + 1..].trim();
                    if n_declared.is_none() {
                        if let Some(rest) = comment.strip_prefix("nodes:") {
                            n_declared = rest.trim().parse::<usize>().ok();
                        }
                    }
                    raw[..pos].trim()
                }
                None => raw.trim(),
            };
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let parse = |f: Option<&str>| -> Result<usize> {
                f.and_then(|v| v.parse::<usize>().ok()).ok_or(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected `source target`, got {line:?}"),
                })
            };
            let source = parse(fields.next())?;
            let target = parse(fields.next())?;
            if fields.next().is_some() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("trailing fields in {line:?}"),
                });
            }
            max_node = max_node.max(source).max(target);
            edges.push((source, target));
        }
        let n = n_declared.unwrap_or(if edges.is_empty() { 0 } else { max_node + 1 });
        AdjacencyMatrix::from_edges(n, &edges)
    }

    pub fn read_edge_list(path: &Path, n_nodes: Option<usize>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_edge_list_str(&text, n_nodes)
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_edge_list_string()).map_err(|e| Error::io(path, e))
    }
}

/// Coupling function `g` in the network equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    /// `g(x_i, x_j) = f(x_j) - f(x_i)`, diffusive in the mapped states.
    #[default]
    MapDifference,
    /// `g(x_i, x_j) = x_j - x_i`, diffusive in the raw states.
    StateDifference,
}

/// A network of identical logistic maps with diffusive coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub adjacency: AdjacencyMatrix,
    /// Coupling strength, non-negative.
    pub sigma: f64,
    /// Inner coupling weight; the scalar 1 for one-dimensional node states.
    pub kappa: f64,
    /// Logistic parameter `a` in `(0, 4]`.
    pub map_param: f64,
    #[serde(default)]
    pub coupling: CouplingKind,
}

impl NetworkSpec {
    pub fn new(adjacency: AdjacencyMatrix, sigma: f64, map_param: f64) -> Result<Self> {
        let spec = NetworkSpec {
            adjacency,
            sigma,
            kappa: 1.0,
            map_param,
            coupling: CouplingKind::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "coupling strength must be non-negative, got {}",
                self.sigma
            )));
        }
        if !(self.map_param > 0.0 && self.map_param <= 4.0) {
            return Err(Error::InvalidParameter(format!(
                "logistic parameter must lie in (0, 4], got {}",
                self.map_param
            )));
        }
        if !self.kappa.is_finite() {
            return Err(Error::InvalidParameter("non-finite kappa".into()));
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.n()
    }
}

#[inline]
fn logistic(x: f64, a: f64) -> f64 {
    a * x * (1.0 - x)
}

/// One application of the logistic map, with domain checks.
pub fn logistic_step(x: f64, a: f64) -> Result<f64> {
    if !(a > 0.0 && a <= 4.0) {
        return Err(Error::InvalidParameter(format!(
            "logistic parameter must lie in (0, 4], got {a}"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!(
            "logistic state must lie in [0, 1], got {x}"
        )));
    }
    Ok(logistic(x, a))
}

/// Advances every node one step.
///
/// Coupling terms are summed in value order, so relabeling the nodes of a
/// network relabels the output exactly, with no floating-point drift.
pub fn step_network(state: &[f64], spec: &NetworkSpec) -> Result<Vec<f64>> {
    let n = spec.n_nodes();
    if state.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: state.len(),
        });
    }
    Ok(step_network_unchecked(state, spec, &mut Vec::new()))
}

fn step_network_unchecked(state: &[f64], spec: &NetworkSpec, terms: &mut Vec<f64>) -> Vec<f64> {
    let a = spec.map_param;
    let mapped: Vec<f64> = state.iter().map(|&x| logistic(x, a)).collect();
    let n = spec.n_nodes();
    let mut next = Vec::with_capacity(n);
    for i in 0..n {
        terms.clear();
        for j in 0..n {
            if spec.adjacency.has_edge(j, i) {
                let g = match spec.coupling {
                    CouplingKind::MapDifference => mapped[j] - mapped[i],
                    CouplingKind::StateDifference => state[j] - state[i],
                };
                terms.push(g);
            }
        }
        terms.sort_unstable_by(f64::total_cmp);
        let coupled: f64 = terms.iter().sum();
        next.push(mapped[i] + spec.sigma * spec.kappa * coupled);
    }
    next
}

/// Observed trajectories: `n_nodes` x `n_steps` x `state_dim` values.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    n_nodes: usize,
    n_steps: usize,
    state_dim: usize,
    /// Node-major: `values[(node * n_steps + t) * state_dim + k]`.
    values: Vec<f64>,
}

impl TimeSeriesPanel {
    pub fn new(n_nodes: usize, n_steps: usize, state_dim: usize, values: Vec<f64>) -> Result<Self> {
        if n_nodes == 0 || state_dim == 0 {
            return Err(Error::InvalidParameter("empty panel".into()));
        }
        if n_steps < 2 {
            return Err(Error::InvalidParameter(format!(
                "a panel needs at least 2 time steps, got {n_steps}"
            )));
        }
        if values.len() != n_nodes * n_steps * state_dim {
            return Err(Error::DimensionMismatch {
                expected: n_nodes * n_steps * state_dim,
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            let node = bad / (n_steps * state_dim);
            let time = (bad / state_dim) % n_steps;
            return Err(Error::NonFinite { node, time });
        }
        Ok(TimeSeriesPanel {
            n_nodes,
            n_steps,
            state_dim,
            values,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    #[inline]
    pub fn value(&self, node: usize, t: usize, k: usize) -> f64 {
        self.values[(node * self.n_steps + t) * self.state_dim + k]
    }

    /// The scalar series of one node. Panels produced by the simulator have
    /// `state_dim == 1`.
    pub fn series(&self, node: usize) -> &[f64] {
        assert_eq!(self.state_dim, 1, "series() needs a one-dimensional state");
        &self.values[node * self.n_steps..(node + 1) * self.n_steps]
    }

    pub fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.n_nodes {
            return Err(Error::NodeOutOfRange {
                node,
                n_nodes: self.n_nodes,
            });
        }
        Ok(())
    }

    /// CSV with a `time,node_0_d0,...` header and one row per time step.
    pub fn to_csv_string(&self) -> String {
        let mut header = String::from("time");
        for node in 0..self.n_nodes {
            for k in 0..self.state_dim {
                header.push_str(&format!(",node_{node}_d{k}"));
            }
        }
        let mut out = header;
        out.push('\n');
        for t in 0..self.n_steps {
            out.push_str(&t.to_string());
            for node in 0..self.n_nodes {
                for k in 0..self.state_dim {
                    out.push(',');
                    out.push_str(&self.value(node, t, k).to_string());
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty panel file".into(),
        })?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"time") || cols.len() < 2 {
            return Err(Error::Parse {
                line: 1,
                msg: "expected a `time,node_0_d0,...` header".into(),
            });
        }
        let last = cols.last().unwrap();
        let parsed = last
            .strip_prefix("node_")
            .and_then(|s| s.split_once("_d"))
            .and_then(|(n, d)| Some((n.parse::<usize>().ok()?, d.parse::<usize>().ok()?)));
        let (n_nodes, state_dim) = match parsed {
            Some((n, d)) => (n + 1, d + 1),
            None => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("cannot read node count from column {last:?}"),
                })
            }
        };
        if n_nodes * state_dim != cols.len() - 1 {
            return Err(Error::Parse {
                line: 1,
                msg: format!(
                    "{} data columns do not match {n_nodes} nodes x {state_dim} dims",
                    cols.len() - 1
                ),
            });
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != cols.len() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected {} fields, got {}", cols.len(), fields.len()),
                });
            }
            let row: Vec<f64> = fields[1..]
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|_| Error::Parse {
                        line: lineno + 1,
                        msg: format!("bad number {f:?}"),
                    })
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        let n_steps = rows.len();
        let mut values = vec![0.0; n_nodes * n_steps * state_dim];
        for (t, row) in rows.iter().enumerate() {
            for node in 0..n_nodes {
                for k in 0..state_dim {
                    values[(node * n_steps + t) * state_dim + k] = row[node * state_dim + k];
                }
            }
        }
        TimeSeriesPanel::new(n_nodes, n_steps, state_dim, values)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// Sidecar describing how a panel was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelMetadata {
    pub spec: NetworkSpec,
    pub seed: u64,
    pub t_transient: usize,
    pub t_keep: usize,
}

/// Runs the network from `x0` (or from seeded uniform initial conditions),
/// discards `t_transient` states and returns the next `t_keep` states.
///
/// The initial state is the first state of the sequence, so with
/// `t_transient = 0` it appears as the first kept row. Any state outside
/// `[0, 1]` aborts the run with the offending step index.
pub fn simulate(
    spec: &NetworkSpec,
    x0: Option<&[f64]>,
    t_transient: usize,
    t_keep: usize,
    seed: u64,
) -> Result<TimeSeriesPanel> {
    spec.validate()?;
    let n = spec.n_nodes();
    if t_keep < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 kept steps, got {t_keep}"
        )));
    }
    let mut state: Vec<f64> = match x0 {
        Some(x0) => {
            if x0.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: x0.len(),
                });
            }
            x0.to_vec()
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|_| loop {
                    // open interval: 0 and 1 are absorbing for the logistic map
                    let v = rng.gen::<f64>();
                    if v != 0.0 {
                        break v;
                    }
                })
                .collect()
        }
    };
    check_domain(&state, 0)?;

    let mut values = vec![0.0; n * t_keep];
    let mut record = |state: &[f64], t: usize| {
        for (i, &v) in state.iter().enumerate() {
            values[i * t_keep + t] = v;
        }
    };
    if t_transient == 0 {
        record(&state, 0);
    }
    let total_steps = t_transient + t_keep - 1;
    let mut terms = Vec::new();
    for step in 1..=total_steps {
        state = step_network_unchecked(&state, spec, &mut terms);
        check_domain(&state, step)?;
        if step >= t_transient {
            record(&state, step - t_transient);
        }
    }
    TimeSeriesPanel::new(n, t_keep, 1, values)
}

fn check_domain(state: &[f64], step: usize) -> Result<()> {
    for (node, &v) in state.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::TrajectoryEscape {
                step,
                node,
                value: v,
            });
        }
    }
    Ok(())
}

/// Directed Erdos-Renyi graph: every ordered off-diagonal pair receives an
/// edge independently with probability `p`. Pairs are drawn in row-major
/// order, so a seed fully determines the graph.
pub fn generate_er_graph(n: usize, p: f64, seed: u64) -> Result<AdjacencyMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "edge probability must lie in [0, 1], got {p}"
        )));
    }
    let mut adj = AdjacencyMatrix::zeros(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for target in 0..n {
        for source in 0..n {
            if source != target && rng.gen_bool(p) {
                adj.set_edge(source, target)?;
            }
        }
    }
    Ok(adj)
}
