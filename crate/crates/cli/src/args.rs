use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use connective::gibbs::Boundary;
use connective::Norm;

use crate::config::{parse_box, parse_boundary, parse_count, parse_norm, parse_point, Identity, ThresholdMethod};

/// A coordinate list given as one flag value (`5x5` or `2,2`).
#[derive(Clone, Debug, PartialEq)]
pub struct Coords(pub Vec<f64>);

#[derive(Clone, Debug, PartialEq)]
pub struct Points(pub Vec<Vec<f64>>);

fn parse_points(s: &str) -> Result<Points, String> {
    s.split(';').map(parse_point).collect::<Result<_, _>>().map(Points)
}

#[derive(Debug, Parser)]
#[command(name = "connective", version, about = "Connective constants, uniqueness thresholds and Gibbs checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default, Args)]
pub struct Common {
    /// Config file with [potential], [space] and [run] sections.
    #[arg(long, visible_aliases = ["potential-config", "scenario"], value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides CONNECTIVE_SEED and the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// One-sided confidence for upper bounds.
    #[arg(long)]
    pub confidence: Option<f64>,
    /// Result file; `.csv` and `.jsonl` select those formats.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Print JSON instead of the aligned text summary.
    #[arg(long)]
    pub json: bool,
    /// Potential kind, replacing the config block.
    #[arg(long, value_name = "KIND", value_parser = ["hard_sphere", "hard_cube", "strauss", "radial_table"])]
    pub potential: Option<String>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long, value_name = "CSV")]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, value_parser = parse_norm)]
    pub norm: Option<Norm>,
}

#[derive(Clone, Debug, Default, Args)]
pub struct Sampling {
    /// Chain lengths, comma separated or repeated.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    /// Monte Carlo chains per k; accepts `1e6`.
    #[arg(long, value_parser = parse_count)]
    pub samples: Option<u64>,
}

#[derive(Clone, Debug, Default, Args)]
pub struct Scenario {
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Box sides, e.g. `5x5`.
    #[arg(long = "box", value_parser = |s: &str| parse_box(s).map(Coords), value_name = "SIDES")]
    pub box_sides: Option<Coords>,
    #[arg(long, value_parser = parse_boundary)]
    pub boundary: Option<Boundary>,
    /// Number of accepted configurations.
    #[arg(long, value_parser = parse_count)]
    pub n: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo estimates of V_k.
    VkEstimate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Upper confidence bound on the connective constant.
    DeltaBound {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: Sampling,
        /// Add the closed-form V_2 when one exists.
        #[arg(long)]
        include_exact: bool,
        /// Add the dimension-d bound for hard spheres and cubes.
        #[arg(long)]
        include_bound: bool,
        /// Prior vk-estimate JSON results.
        #[arg(long = "input", value_name = "PATH")]
        inputs: Vec<PathBuf>,
    },
    /// Uniqueness threshold e / Delta.
    Threshold {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, value_enum)]
        method: Option<ThresholdMethod>,
    },
    /// Fixed point and two-cycle of the scalar recursion.
    FixedPoint {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        c_phi: Option<f64>,
        /// Activity sweep `a:b:n`.
        #[arg(long, value_name = "A:B:N")]
        sweep: Option<String>,
    },
    /// Depth-k contraction of the scalar recursion.
    Contraction {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        c_phi: Option<f64>,
        #[arg(long)]
        tau1: Option<f64>,
        #[arg(long)]
        tau2: Option<f64>,
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Exact finite-volume Gibbs samples.
    SampleGibbs {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scenario: Scenario,
    },
    /// Statistical checks on Gibbs samples.
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scenario: Scenario,
        #[arg(long, value_enum)]
        identity: Option<Identity>,
        /// Evaluation point, e.g. `2,2`.
        #[arg(long, value_parser = |s: &str| parse_point(s).map(Coords))]
        v: Option<Coords>,
        /// Point tuple for `kpoint` or `ruelle`, e.g. `2,2;2.5,2`.
        #[arg(long, value_parser = parse_points)]
        points: Option<Points>,
        /// Quadrature resolution per axis.
        #[arg(long)]
        grid: Option<usize>,
        /// Independent repetitions.
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Aggregate a directory of results into CSV tables.
    Report {
        #[command(flatten)]
        common: Common,
        /// Results directory.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Re-run the configuration recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}
