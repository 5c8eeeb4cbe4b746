//! Implementations of the subcommands. Every command echoes its fully
//! resolved configuration into its output so a run can be reproduced from
//! the artifacts alone.

use std::path::{Path, PathBuf};

use serde_json::json;

use ogeoc::corrdim::{
    correlation_dimension, CorrDimOptions, FitOptions, Norm, PointCloud, RadiusGrid,
};
use ogeoc::dynamics::{
    generate_er_graph, simulate as run_simulation, AdjacencyMatrix, CouplingKind, NetworkSpec,
    PanelMetadata, TimeSeriesPanel,
};
use ogeoc::error::ErrorClass;
use ogeoc::eval::{roc_csv, run_roc, run_trials, trial_summary_csv, ExperimentMode};
use ogeoc::geoc::{build_embedding, GeoCEngine, NodeSet};
use ogeoc::ogeoc::{infer_network, InferenceConfig, ShuffleConfig};

use crate::{Cli, CorrdimArgs, ExperimentArgs, GeocArgs, InferArgs, SimulateArgs};

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_ESTIMATION: u8 = 4;
pub const EXIT_PARTIAL: u8 = 5;

pub struct CliFailure {
    pub code: u8,
    pub message: String,
}

impl CliFailure {
    fn usage(message: impl Into<String>) -> Self {
        CliFailure {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }
}

impl From<ogeoc::Error> for CliFailure {
    fn from(e: ogeoc::Error) -> Self {
        let code = match e.class() {
            ErrorClass::Validation => EXIT_VALIDATION,
            ErrorClass::Io => EXIT_IO,
            ErrorClass::Estimation => EXIT_ESTIMATION,
        };
        CliFailure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, CliFailure>;

/// Relative output paths land in `OGEOC_OUT_DIR` when it is set.
fn resolve_out(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os("OGEOC_OUT_DIR") {
        Some(dir) => Path::new(&dir).join(path),
        None => path.to_path_buf(),
    }
}

fn write_out(path: &Path, contents: &str) -> Result<(), CliFailure> {
    let path = resolve_out(path);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliFailure {
                code: EXIT_IO,
                message: format!("{}: {e}", parent.display()),
            })?;
        }
    }
    std::fs::write(&path, contents).map_err(|e| CliFailure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    })
}

fn grid_from(cli: &Cli) -> Result<RadiusGrid, CliFailure> {
    let defaults = RadiusGrid::default();
    let grid = RadiusGrid {
        eps_min: cli.eps_min.unwrap_or(defaults.eps_min),
        eps_max: cli.eps_max.unwrap_or(defaults.eps_max),
        n_steps: cli.radius_steps.unwrap_or(defaults.n_steps),
        spacing: defaults.spacing,
    };
    grid.validate()?;
    Ok(grid)
}

fn inference_config_from(cli: &Cli, allow_self: bool) -> Result<InferenceConfig, CliFailure> {
    let defaults = InferenceConfig::default();
    let cfg = InferenceConfig {
        shuffle: ShuffleConfig {
            n_permutations: cli.np.unwrap_or(defaults.shuffle.n_permutations),
            theta: cli.theta.unwrap_or(defaults.shuffle.theta),
            seed: cli.seed.unwrap_or(defaults.shuffle.seed),
        },
        eps_backward: cli.eps_backward.unwrap_or(defaults.eps_backward),
        allow_self_candidates: allow_self,
        ..defaults
    };
    cfg.validate()?;
    Ok(cfg)
}

fn parse_nodes(list: &str, what: &str) -> Result<Vec<usize>, CliFailure> {
    let mut nodes = Vec::new();
    for part in list.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let id: usize = part
            .parse()
            .map_err(|_| CliFailure::usage(format!("bad node id {part:?} in {what}")))?;
        nodes.push(id);
    }
    Ok(nodes)
}

fn node_set(list: &str, what: &str) -> Result<NodeSet, CliFailure> {
    Ok(NodeSet::new(parse_nodes(list, what)?)?)
}

pub fn simulate(cli: &Cli, args: &SimulateArgs) -> CmdResult {
    let seed = cli.seed.unwrap_or(0);
    let adjacency = match args.graph.as_str() {
        "er" => {
            let n = args
                .n
                .ok_or_else(|| CliFailure::usage("--graph er needs --n"))?;
            let p = args
                .p
                .ok_or_else(|| CliFailure::usage("--graph er needs --p"))?;
            generate_er_graph(n, p, seed)?
        }
        _ => {
            let path = args
                .edges
                .as_ref()
                .ok_or_else(|| CliFailure::usage("--graph file needs --edges"))?;
            AdjacencyMatrix::read_edge_list(path, args.n)?
        }
    };
    let coupling = match args.coupling.as_str() {
        "state_difference" => CouplingKind::StateDifference,
        _ => CouplingKind::MapDifference,
    };
    let spec = NetworkSpec {
        adjacency,
        sigma: args.sigma,
        kappa: 1.0,
        map_param: args.a,
        coupling,
    };
    spec.validate()?;
    let panel = run_simulation(&spec, None, args.transient, args.t, seed)?;
    write_out(&args.out, &panel.to_csv_string())?;
    let meta = PanelMetadata {
        spec,
        seed,
        t_transient: args.transient,
        t_keep: args.t,
    };
    let meta_path = sidecar_path(&args.out);
    write_out(
        &meta_path,
        &format!("{}\n", serde_json::to_string_pretty(&meta).map_err(ogeoc::Error::from)?),
    )?;
    println!(
        "wrote {} nodes x {} steps to {} (+ {})",
        panel.n_nodes(),
        panel.n_steps(),
        resolve_out(&args.out).display(),
        resolve_out(&meta_path).display()
    );
    Ok(0)
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

pub fn corrdim(cli: &Cli, args: &CorrdimArgs) -> CmdResult {
    let grid = grid_from(cli)?;
    let opts = CorrDimOptions {
        norm: if args.norm == "euclidean" {
            Norm::Euclidean
        } else {
            Norm::Max
        },
        theiler_window: args.theiler,
    };
    let fit = FitOptions {
        auto_region: args.linear_region,
        ..FitOptions::default()
    };
    let (cloud, source) = if let Some(input) = &args.input {
        (PointCloud::read_csv(input)?, json!({"input": input}))
    } else if let Some(panel_path) = &args.panel {
        let panel = TimeSeriesPanel::read_csv(panel_path)?;
        let past = node_set(args.past_nodes.as_deref().unwrap_or(""), "--past-nodes")?;
        let future = node_set(args.future_nodes.as_deref().unwrap_or(""), "--future-nodes")?;
        let cloud = build_embedding(&panel, &future, &past)?;
        (
            cloud,
            json!({
                "panel": panel_path,
                "future_nodes": future.as_slice(),
                "past_nodes": past.as_slice(),
            }),
        )
    } else {
        return Err(CliFailure::usage("give either --input or --panel"));
    };
    let (estimate, curve) = correlation_dimension(&cloud, &grid, &opts, &fit)?;
    if curve.is_flat() {
        eprintln!(
            "warning: correlation sum is saturated at every retained radius; \
             the slope carries no scaling information"
        );
    }
    if let Some(curve_out) = &args.curve_out {
        write_out(curve_out, &curve.to_csv_string())?;
    }
    let report = json!({
        "config": {
            "source": source,
            "grid": grid,
            "options": opts,
            "fit": fit,
        },
        "n_points": cloud.n_points(),
        "dim": cloud.dim(),
        "d2": estimate.d2,
        "intercept": estimate.intercept,
        "residual_sum": estimate.residual_sum,
        "n_points_used": estimate.n_points_used,
        "region_start": estimate.region_start,
        "n_dropped": curve.n_dropped(),
        "flat": curve.is_flat(),
    });
    println!("{}", serde_json::to_string_pretty(&report).map_err(ogeoc::Error::from)?);
    Ok(0)
}

pub fn geoc(cli: &Cli, args: &GeocArgs) -> CmdResult {
    let grid = grid_from(cli)?;
    let panel = TimeSeriesPanel::read_csv(&args.panel)?;
    let source = node_set(&args.j, "--j")?;
    let target = node_set(&args.i, "--i")?;
    let cond = node_set(&args.k, "--k")?;
    let engine = GeoCEngine::new(&panel, grid)?;
    let value = engine.geoc(&source, &target, &cond)?;
    let record = engine.record(&source, &target, &cond, value);
    let text = format!(
        "{}\n",
        serde_json::to_string_pretty(&record).map_err(ogeoc::Error::from)?
    );
    print!("{text}");
    if let Some(out) = &args.out {
        write_out(out, &text)?;
    }
    Ok(0)
}

pub fn infer(cli: &Cli, args: &InferArgs) -> CmdResult {
    let grid = grid_from(cli)?;
    let cfg = inference_config_from(cli, !args.no_self)?;
    let panel = TimeSeriesPanel::read_csv(&args.panel)?;
    let result = infer_network(&panel, &grid, &cfg)?;
    let text = format!("{}\n", result.to_json_string()?);
    match &args.out {
        Some(out) => write_out(out, &text)?,
        None => print!("{text}"),
    }
    if let Some(edges_out) = &args.edges_out {
        write_out(edges_out, &result.adjacency_estimate.to_edge_list_string())?;
    }
    if result.failures.is_empty() {
        println!(
            "recovered {} edges over {} nodes",
            result.adjacency_estimate.edge_count(),
            result.n_nodes
        );
        Ok(0)
    } else {
        for failure in &result.failures {
            eprintln!(
                "node {} failed during {}: {}",
                failure.node, failure.stage, failure.message
            );
        }
        Ok(EXIT_PARTIAL)
    }
}

pub fn experiment(cli: &Cli, args: &ExperimentArgs) -> CmdResult {
    let mut cfg = ogeoc::eval::ExperimentConfig::load(&args.config)?;
    // global flags override the file where given
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(np) = cli.np {
        cfg.n_permutations = np;
    }
    if let Some(theta) = cli.theta {
        cfg.theta = theta;
    }
    if let Some(eps_backward) = cli.eps_backward {
        cfg.eps_backward = eps_backward;
    }
    if cli.eps_min.is_some() || cli.eps_max.is_some() || cli.radius_steps.is_some() {
        cfg.grid = grid_from(cli)?;
    }
    cfg.validate()?;
    let out_dir = args.out_dir.clone();
    let echo = format!(
        "{}\n",
        serde_json::to_string_pretty(&cfg).map_err(ogeoc::Error::from)?
    );
    write_out(&out_dir.join("experiment_config.json"), &echo)?;
    let mut partial = false;
    match cfg.mode {
        ExperimentMode::Trials => {
            let output = run_trials(&cfg)?;
            write_out(
                &out_dir.join("trial_summary.csv"),
                &trial_summary_csv(&output.summaries),
            )?;
            write_out(
                &out_dir.join("trial_records.json"),
                &format!(
                    "{}\n",
                    serde_json::to_string_pretty(&output.records).map_err(ogeoc::Error::from)?
                ),
            )?;
            for summary in &output.summaries {
                let tpr = summary.tpr.map(|s| s.mean);
                let fpr = summary.fpr.map(|s| s.mean);
                println!(
                    "T={}: {} trials, mean TPR {:?}, mean FPR {:?}",
                    summary.t, summary.completed, tpr, fpr
                );
            }
            for failure in &output.failures {
                eprintln!(
                    "trial {} at T={} failed: {}",
                    failure.trial, failure.t, failure.message
                );
                partial = true;
            }
        }
        ExperimentMode::Roc => {
            for (t, sweep) in run_roc(&cfg)? {
                let name = format!("roc_T{t}.csv");
                write_out(&out_dir.join(&name), &roc_csv(&sweep.points))?;
                println!("T={t}: {} ROC points -> {name}", sweep.points.len());
                for failure in &sweep.failures {
                    eprintln!("theta {} failed at T={t}: {}", failure.theta, failure.message);
                    partial = true;
                }
            }
        }
    }
    Ok(if partial { EXIT_PARTIAL } else { 0 })
}
