//! Command line front end: simulate coupled map networks, estimate
//! correlation dimensions, evaluate geometric information flow, infer causal
//! networks, and run benchmark experiments.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

use commands::CliFailure;

#[derive(Parser)]
#[command(
    name = "ogeoc",
    version,
    about = "Causal network inference for coupled dynamical systems via \
             correlation-dimension geometric information flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads; runs with one thread produce byte-identical output.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Base seed; every derived stream is a pure function of it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Smallest radius of the correlation-sum grid.
    #[arg(long, global = true)]
    eps_min: Option<f64>,

    /// Upper edge of the radius grid (exclusive).
    #[arg(long, global = true)]
    eps_max: Option<f64>,

    /// Number of radii in the grid.
    #[arg(long, global = true)]
    radius_steps: Option<usize>,

    /// Surrogate permutations per shuffle test.
    #[arg(long, global = true)]
    np: Option<usize>,

    /// Significance threshold of the shuffle test, in (0, 1).
    #[arg(long, global = true)]
    theta: Option<f64>,

    /// Zero threshold of the backward pruning pass.
    #[arg(long, global = true)]
    eps_backward: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a coupled logistic network and write the panel to CSV.
    Simulate(SimulateArgs),
    /// Estimate the correlation dimension of a point cloud or panel slice.
    Corrdim(CorrdimArgs),
    /// Evaluate one conditional geometric information flow value.
    Geoc(GeocArgs),
    /// Infer the causal network behind a panel.
    Infer(InferArgs),
    /// Run a declarative experiment: repeated trials or a theta-sweep ROC.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Graph source: `er` for a random draw, `file` for an edge list.
    #[arg(long, value_parser = ["er", "file"])]
    graph: String,

    /// Node count for `--graph er` (or an override for edge-list files).
    #[arg(long)]
    n: Option<usize>,

    /// Edge probability for `--graph er`.
    #[arg(long)]
    p: Option<f64>,

    /// Edge list path for `--graph file`.
    #[arg(long)]
    edges: Option<std::path::PathBuf>,

    /// Coupling strength.
    #[arg(long)]
    sigma: f64,

    /// Logistic map parameter.
    #[arg(long, default_value_t = 4.0)]
    a: f64,

    /// Coupling function.
    #[arg(long, value_parser = ["map_difference", "state_difference"],
          default_value = "map_difference")]
    coupling: String,

    /// Kept samples per node.
    #[arg(long)]
    t: usize,

    /// Discarded burn-in steps.
    #[arg(long, default_value_t = ogeoc::dynamics::DEFAULT_TRANSIENT)]
    transient: usize,

    /// Panel CSV path; a `.meta.json` sidecar lands next to it.
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Args)]
struct CorrdimArgs {
    /// Point cloud CSV, one point per row.
    #[arg(long, conflicts_with = "panel")]
    input: Option<std::path::PathBuf>,

    /// Panel CSV to slice into an embedding instead of a raw cloud.
    #[arg(long)]
    panel: Option<std::path::PathBuf>,

    /// Panel nodes contributing their current state, comma separated.
    #[arg(long, value_name = "NODES")]
    past_nodes: Option<String>,

    /// Panel nodes contributing their next-step state, comma separated.
    #[arg(long, value_name = "NODES")]
    future_nodes: Option<String>,

    /// Distance norm.
    #[arg(long, value_parser = ["max", "euclidean"], default_value = "max")]
    norm: String,

    /// Theiler window: exclude pairs closer in time than this.
    #[arg(long, default_value_t = 0)]
    theiler: usize,

    /// Fit over an automatically selected scaling region instead of the
    /// whole retained curve.
    #[arg(long)]
    linear_region: bool,

    /// Write the retained `ln_eps,ln_c` curve to this CSV.
    #[arg(long)]
    curve_out: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct GeocArgs {
    /// Panel CSV.
    #[arg(long)]
    panel: std::path::PathBuf,

    /// Source nodes J, comma separated.
    #[arg(long)]
    j: String,

    /// Target nodes I, comma separated.
    #[arg(long)]
    i: String,

    /// Conditioning nodes K, comma separated; may be empty.
    #[arg(long, default_value = "")]
    k: String,

    /// Write the record here as well as printing it.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct InferArgs {
    /// Panel CSV.
    #[arg(long)]
    panel: std::path::PathBuf,

    /// Disallow a node from conditioning on its own past.
    #[arg(long)]
    no_self: bool,

    /// Inference result JSON path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<std::path::PathBuf>,

    /// Also export the estimated adjacency as an edge list.
    #[arg(long)]
    edges_out: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Declarative experiment description (JSON).
    #[arg(long)]
    config: std::path::PathBuf,

    /// Output directory for the result tables.
    #[arg(long, default_value = ".")]
    out_dir: std::path::PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        ogeoc::set_thread_count(threads);
    }
    let outcome = match &cli.command {
        Command::Simulate(args) => commands::simulate(&cli, args),
        Command::Corrdim(args) => commands::corrdim(&cli, args),
        Command::Geoc(args) => commands::geoc(&cli, args),
        Command::Infer(args) => commands::infer(&cli, args),
        Command::Experiment(args) => commands::experiment(&cli, args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(CliFailure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
